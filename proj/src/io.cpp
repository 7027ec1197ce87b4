#include "byzcount/io.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "byzcount/rng.hpp"

namespace byzcount {

using nlohmann::json;

std::string hex64(std::uint64_t x) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << x;
  return s.str();
}

namespace {

json strategy_json(const StrategySpec& s) {
  json j;
  j["name"] = s.name;
  j["magnitude"] = s.magnitude ? json(*s.magnitude) : json(nullptr);
  j["inject_round"] = s.inject_round;
  j["targets"] = s.targets == TargetSelection::single ? "single" : "all";
  return j;
}

template <class T>
T get_number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer() && !j.is_number_unsigned())
      throw ConfigError(field, "expected an integer");
    if (j.is_number_integer() && j.get<std::int64_t>() < 0)
      throw ConfigError(field, "must not be negative");
    const auto v = j.get<std::uint64_t>();
    if (v > std::numeric_limits<T>::max()) throw ConfigError(field, "out of range");
    return static_cast<T>(v);
  } else {
    return j.get<T>();
  }
}

std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError(field, "expected a string");
  return j.get<std::string>();
}

StrategySpec strategy_from_json(const json& j) {
  StrategySpec s;
  if (j.is_string()) {
    s.name = j.get<std::string>();
  } else if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      const std::string field = "strategy." + key;
      if (key == "name") {
        s.name = get_string(value, field);
      } else if (key == "magnitude") {
        if (!value.is_null()) s.magnitude = get_number<unsigned>(value, field);
      } else if (key == "inject_round") {
        s.inject_round = get_number<unsigned>(value, field);
      } else if (key == "targets") {
        const auto t = get_string(value, field);
        if (t == "single")
          s.targets = TargetSelection::single;
        else if (t == "all")
          s.targets = TargetSelection::all;
        else
          throw ConfigError(field, "expected 'single' or 'all'");
      } else {
        throw ConfigError(field, "unknown field");
      }
    }
  } else {
    throw ConfigError("strategy", "expected a name or an object");
  }
  if (!known_strategy(s.name)) throw ConfigError("strategy", "unknown strategy '" + s.name + "'");
  return s;
}

json subphase_factor_json(SubphaseFactor f) {
  if (!f.times_phase) return f.multiplier;
  return f.multiplier == 1 ? std::string("i") : std::to_string(f.multiplier) + "i";
}

SubphaseFactor subphase_factor_from_json(const json& j) {
  SubphaseFactor f;
  if (j.is_number()) {
    f.multiplier = get_number<unsigned>(j, "subphase_factor");
    return f;
  }
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (!s.empty() && s.back() == 'i') {
      f.times_phase = true;
      s.pop_back();
      if (s.empty()) return f;
      try {
        std::size_t used = 0;
        const unsigned long m = std::stoul(s, &used);
        if (used == s.size() && m >= 1 && m < 1000) {
          f.multiplier = static_cast<unsigned>(m);
          return f;
        }
      } catch (const std::exception&) {
      }
    }
  }
  throw ConfigError("subphase_factor", "expected a positive integer, \"i\" or \"<m>i\"");
}

void apply_field(ExperimentConfig& c, const std::string& key, const json& value) {
  if (key == "n") {
    c.n = get_number<std::size_t>(value, key);
  } else if (key == "d") {
    c.d = get_number<unsigned>(value, key);
  } else if (key == "delta") {
    c.delta = get_number<double>(value, key);
  } else if (key == "epsilon") {
    c.epsilon = get_number<double>(value, key);
  } else if (key == "seed") {
    c.seed = get_number<std::uint64_t>(value, key);
  } else if (key == "algorithm") {
    const auto a = get_string(value, key);
    if (a == "basic")
      c.algorithm = Algorithm::basic;
    else if (a == "byzantine")
      c.algorithm = Algorithm::byzantine;
    else if (a == "baseline")
      c.algorithm = Algorithm::baseline;
    else
      throw ConfigError(key, "expected basic, byzantine or baseline");
  } else if (key == "strategy") {
    c.strategy = strategy_from_json(value);
  } else if (key == "phase_cap") {
    c.phase_cap = get_number<unsigned>(value, key);
  } else if (key == "subphase_factor") {
    c.subphase_factor = subphase_factor_from_json(value);
  } else if (key == "alpha_variant") {
    const auto v = get_string(value, key);
    if (v == "pseudocode")
      c.alpha_variant = AlphaVariant::pseudocode;
    else if (v == "prose")
      c.alpha_variant = AlphaVariant::prose;
    else
      throw ConfigError(key, "expected pseudocode or prose");
  } else if (key == "trials") {
    c.trials = get_number<unsigned>(value, key);
  } else if (key == "band_lo") {
    c.band_lo = get_number<double>(value, key);
  } else if (key == "band_hi") {
    c.band_hi = get_number<double>(value, key);
  } else if (key == "a_radius") {
    if (value.is_null())
      c.a_radius.reset();
    else
      c.a_radius = get_number<unsigned>(value, key);
  } else if (key == "baseline_rounds") {
    c.baseline_rounds = get_number<unsigned>(value, key);
  } else {
    throw ConfigError(key, "unknown field");
  }
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json j;
  j["n"] = c.n;
  j["d"] = c.d;
  j["delta"] = c.delta;
  j["epsilon"] = c.epsilon;
  j["seed"] = c.seed;
  j["algorithm"] = to_string(c.algorithm);
  j["strategy"] = strategy_json(c.strategy);
  j["phase_cap"] = c.phase_cap;
  j["subphase_factor"] = subphase_factor_json(c.subphase_factor);
  j["alpha_variant"] = to_string(c.alpha_variant);
  j["trials"] = c.trials;
  j["band_lo"] = c.band_lo;
  j["band_hi"] = c.band_hi;
  j["a_radius"] = c.a_radius ? json(*c.a_radius) : json(nullptr);
  j["baseline_rounds"] = c.baseline_rounds;
  return j;
}

ExperimentConfig config_from_json(const json& j, Validation mode) {
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) apply_field(c, key, value);
  validate(c, mode);
  return c;
}

json summary_json(const ExperimentResult& r) {
  json j;
  j["protocol"] = to_string(r.config.algorithm);
  j["config"] = to_json(r.config);
  j["trial"] = r.trial;
  j["trial_seed"] = r.seed;
  j["k"] = r.k;
  j["a_radius"] = r.a_radius;
  j["byzantine"] = r.byzantine;
  j["honest"] = r.honest;
  j["crashed"] = r.crashed;
  j["deciders"] = r.deciders;
  j["non_deciders"] = r.non_deciders;
  j["byz_safe"] = r.byz_safe;
  j["success_fraction"] = r.success_fraction;
  j["byz_safe_success_fraction"] = r.byz_safe_success_fraction;
  j["setup_rounds"] = r.setup_rounds;
  j["rounds_total"] = r.rounds_total;
  j["messages_total"] = r.messages_total;
  j["tokens_sent"] = r.tokens_sent;
  j["tokens_delivered"] = r.tokens_delivered;
  j["tokens_dropped"] = r.tokens_dropped;
  j["queries_total"] = r.queries_total;
  j["answers_total"] = r.answers_total;
  j["violations"] = r.violations;
  j["malformed"] = r.malformed;
  j["rejected"] = r.rejected;
  j["termination"] = r.termination == Termination::all_decided ? "all_decided" : "phase_cap";
  j["transcript_hash"] = hex64(r.transcript_hash);
  json phases = json::array();
  for (const PhaseStats& p : r.phases)
    phases.push_back({{"phase", p.phase},
                      {"alpha", p.alpha},
                      {"subphases", p.subphases},
                      {"rounds", p.rounds},
                      {"messages", p.messages},
                      {"queries", p.queries},
                      {"decided", p.decided}});
  j["phases"] = std::move(phases);
  return j;
}

void write_node_csv(std::ostream& out, std::span<const ExperimentResult> results,
                    const json& config) {
  out << "# config: " << config.dump() << '\n';
  out << "trial,node_id,class,decided,estimate,crashed\n";
  for (const ExperimentResult& r : results)
    for (const NodeOutcome& o : r.nodes) {
      out << r.trial << ',' << o.id.value << ',' << o.label << ',' << (o.estimate ? 1 : 0) << ',';
      if (o.estimate) out << *o.estimate;
      out << ',' << (o.crashed ? 1 : 0) << '\n';
    }
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

template <class T, class F>
std::vector<T> scalar_or_list(const json& j, const std::string& field, F convert) {
  std::vector<T> out;
  if (j.is_array()) {
    if (j.empty()) throw ConfigError(field, "list must not be empty");
    for (const auto& x : j) out.push_back(convert(x, field));
  } else {
    out.push_back(convert(j, field));
  }
  return out;
}

}  // namespace

SweepSpec sweep_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("sweep", "expected a JSON object");
  SweepSpec s;
  json base = json::object();
  for (const auto& [key, value] : j.items()) {
    if (key == "n") {
      s.n = scalar_or_list<std::size_t>(value, key, get_number<std::size_t>);
    } else if (key == "d") {
      s.d = scalar_or_list<unsigned>(value, key, get_number<unsigned>);
    } else if (key == "delta") {
      s.delta = scalar_or_list<double>(value, key, get_number<double>);
    } else if (key == "epsilon") {
      s.epsilon = scalar_or_list<double>(value, key, get_number<double>);
    } else if (key == "strategy") {
      s.strategy = scalar_or_list<StrategySpec>(
          value, key, [](const json& x, const std::string&) { return strategy_from_json(x); });
    } else if (key == "out_dir") {
      s.out_dir = get_string(value, key);
    } else if (key == "cell_cap") {
      s.cell_cap = get_number<std::size_t>(value, key);
    } else {
      base[key] = value;
    }
  }
  for (const auto& [key, value] : base.items()) apply_field(s.base, key, value);
  if (s.n.empty()) s.n = {s.base.n};
  if (s.d.empty()) s.d = {s.base.d};
  if (s.delta.empty()) s.delta = {s.base.delta};
  if (s.epsilon.empty()) s.epsilon = {s.base.epsilon};
  if (s.strategy.empty()) s.strategy = {s.base.strategy};
  const std::size_t cells = s.n.size() * s.d.size() * s.delta.size() * s.epsilon.size() *
                            s.strategy.size();
  if (cells > s.cell_cap)
    throw ConfigError("cell_cap", std::to_string(cells) + " cells exceed the cap of " +
                                      std::to_string(s.cell_cap));
  return s;
}

json to_json(const SweepSpec& s) {
  json j = to_json(s.base);
  j["n"] = s.n;
  j["d"] = s.d;
  j["delta"] = s.delta;
  j["epsilon"] = s.epsilon;
  json strategies = json::array();
  for (const auto& st : s.strategy) strategies.push_back(strategy_json(st));
  j["strategy"] = std::move(strategies);
  j["cell_cap"] = s.cell_cap;
  if (!s.out_dir.empty()) j["out_dir"] = s.out_dir;
  return j;
}

std::vector<ExperimentConfig> sweep_cells(const SweepSpec& s) {
  std::vector<ExperimentConfig> cells;
  for (std::size_t n : s.n)
    for (unsigned d : s.d)
      for (double delta : s.delta)
        for (double eps : s.epsilon)
          for (const StrategySpec& st : s.strategy) {
            ExperimentConfig c = s.base;
            c.n = n;
            c.d = d;
            c.delta = delta;
            c.epsilon = eps;
            c.strategy = st;
            c.seed = derive_seed(s.base.seed, {cells.size()});
            cells.push_back(c);
          }
  return cells;
}

CellAggregate aggregate(const ExperimentConfig& cfg, std::span<const ExperimentResult> results) {
  CellAggregate a;
  a.config = cfg;
  a.trials_ok = static_cast<unsigned>(results.size());
  std::vector<double> estimates, rounds;
  double success = 0, safe = 0, crashed = 0, undecided = 0;
  for (const ExperimentResult& r : results) {
    for (const NodeOutcome& o : r.nodes)
      if (!o.byzantine && !o.crashed && o.estimate) estimates.push_back(*o.estimate);
    rounds.push_back(static_cast<double>(r.rounds_total));
    success += r.success_fraction;
    safe += r.byz_safe_success_fraction;
    crashed += static_cast<double>(r.crashed);
    undecided += static_cast<double>(r.non_deciders);
  }
  if (results.empty()) return a;
  const double t = static_cast<double>(results.size());
  a.estimate_q1 = quantile(estimates, 0.25);
  a.estimate_median = quantile(estimates, 0.5);
  a.estimate_q3 = quantile(estimates, 0.75);
  a.success_mean = success / t;
  a.byz_safe_success_mean = safe / t;
  a.rounds_median = quantile(rounds, 0.5);
  a.crashed_mean = crashed / t;
  a.non_deciders_mean = undecided / t;
  return a;
}

void write_aggregate_header(std::ostream& out) {
  out << "protocol,n,d,delta,epsilon,strategy,seed,trials,trials_ok,status,estimate_q1,"
         "estimate_median,estimate_q3,success_mean,byz_safe_success_mean,rounds_median,"
         "crashed_mean,non_deciders_mean\n";
}

void write_aggregate_row(std::ostream& out, const CellAggregate& a) {
  const ExperimentConfig& c = a.config;
  std::string status = a.status;
  std::replace(status.begin(), status.end(), ',', ';');
  std::replace(status.begin(), status.end(), '\n', ' ');
  out << to_string(c.algorithm) << ',' << c.n << ',' << c.d << ',' << c.delta << ','
      << c.epsilon << ',' << c.strategy.name << ',' << c.seed << ',' << c.trials << ','
      << a.trials_ok << ',' << status << ',' << a.estimate_q1 << ',' << a.estimate_median << ','
      << a.estimate_q3 << ',' << a.success_mean << ',' << a.byz_safe_success_mean << ','
      << a.rounds_median << ',' << a.crashed_mean << ',' << a.non_deciders_mean << '\n';
}

}  // namespace byzcount
