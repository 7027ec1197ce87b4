#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "byzcount/engine.hpp"

namespace byzcount {

// Config <-> JSON. Parsing rejects unknown fields and wrong types with a
// ConfigError naming the field, then runs validate().
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j,
                                  Validation mode = Validation::protocol);

// One summary object per trial.
nlohmann::json summary_json(const ExperimentResult& r);

// "# config: {...}" line, then trial,node_id,class,decided,estimate,crashed.
void write_node_csv(std::ostream& out, std::span<const ExperimentResult> results,
                    const nlohmann::json& config);

std::string hex64(std::uint64_t x);

// Linear interpolation between order statistics; NaN for empty input.
double quantile(std::vector<double> values, double q);

struct SweepSpec {
  ExperimentConfig base;
  std::vector<std::size_t> n;
  std::vector<unsigned> d;
  std::vector<double> delta;
  std::vector<double> epsilon;
  std::vector<StrategySpec> strategy;
  std::string out_dir;
  std::size_t cell_cap = 256;
};

// Top-level fields n, d, delta, epsilon, strategy may be scalars or lists;
// every other field is forwarded to the base config.
SweepSpec sweep_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SweepSpec& s);

// Cross product in n, d, delta, epsilon, strategy order; cell c gets seed
// derive_seed(base.seed, {c}).
std::vector<ExperimentConfig> sweep_cells(const SweepSpec& s);

struct CellAggregate {
  ExperimentConfig config;
  unsigned trials_ok = 0;
  std::string status = "ok";
  double estimate_q1 = 0, estimate_median = 0, estimate_q3 = 0;  // pooled honest deciders
  double success_mean = 0;
  double byz_safe_success_mean = 0;
  double rounds_median = 0;
  double crashed_mean = 0;
  double non_deciders_mean = 0;
};

CellAggregate aggregate(const ExperimentConfig& cfg, std::span<const ExperimentResult> results);
void write_aggregate_header(std::ostream& out);
void write_aggregate_row(std::ostream& out, const CellAggregate& a);

}  // namespace byzcount
