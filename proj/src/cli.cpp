#include "byzcount/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "byzcount/baseline.hpp"
#include "byzcount/engine.hpp"
#include "byzcount/graph.hpp"
#include "byzcount/io.hpp"
#include "byzcount/rng.hpp"
#include "byzcount/spectral.hpp"

namespace byzcount {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string default_out_dir() {
  const char* env = std::getenv("BYZCOUNT_OUT_DIR");
  return env && *env ? env : ".";
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON in ") + path + ": " + e.what());
  }
}

std::ofstream open_out(const fs::path& p) {
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

void close_checked(std::ofstream& f, const fs::path& p) {
  f.close();
  if (!f) throw IoError("write failed for " + p.string());
}

void check_invariants(const ExperimentResult& r) {
  auto fail = [&](const std::string& what) {
    throw InvariantError("trial " + std::to_string(r.trial) + ": " + what);
  };
  if (r.nodes.size() != r.config.n) fail("node count differs from n");
  if (r.honest + r.byzantine != r.config.n) fail("honest + byzantine != n");
  if (r.tokens_sent != r.tokens_delivered + r.tokens_dropped) fail("token conservation broken");
  if (r.success_fraction < 0 || r.success_fraction > 1) fail("success fraction out of [0,1]");
  if (r.byz_safe_success_fraction < 0 || r.byz_safe_success_fraction > 1)
    fail("byz_safe success fraction out of [0,1]");
  if (r.deciders + r.non_deciders + r.crashed != r.honest) fail("honest node accounting broken");
}

std::vector<ExperimentResult> run_checked(const ExperimentConfig& cfg, unsigned threads) {
  auto results = run_trials(cfg, threads);
  for (const auto& r : results) check_invariants(r);
  return results;
}

json trial_seeds(const ExperimentConfig& cfg) {
  json seeds = json::array();
  for (unsigned t = 0; t < cfg.trials; ++t) seeds.push_back(trial_seed(cfg, t));
  return seeds;
}

int cmd_gen(std::size_t n, unsigned d, std::uint64_t seed, const std::string& out_path,
            std::ostream& out) {
  HMultigraph h = generate_h_graph(n, d, seed);
  const fs::path p = out_path;
  auto f = open_out(p);
  write_graph(f, h, lattice_radius(d));
  close_checked(f, p);
  out << "wrote " << p.string() << " (" << h.edges().size() << " edges)\n";
  return exit_code::ok;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, std::optional<unsigned> trials, bool dry_run,
            unsigned threads, std::ostream& out) {
  json raw = read_json_file(config_path);
  if (raw.is_object()) {
    if (seed) raw["seed"] = *seed;
    if (trials) raw["trials"] = *trials;
  }
  const ExperimentConfig cfg = config_from_json(raw);
  json resolved = to_json(cfg);
  resolved["trial_seeds"] = trial_seeds(cfg);
  if (dry_run) {
    out << resolved.dump(2) << '\n';
    return exit_code::ok;
  }
  const auto results = run_checked(cfg, threads);

  const fs::path dir = out_dir;
  {
    const fs::path p = dir / "nodes.csv";
    auto f = open_out(p);
    write_node_csv(f, results, resolved);
    close_checked(f, p);
  }
  {
    json summary;
    summary["config"] = resolved;
    json trials_json = json::array();
    for (const auto& r : results) trials_json.push_back(summary_json(r));
    summary["trials"] = std::move(trials_json);
    const fs::path p = dir / "summary.json";
    auto f = open_out(p);
    f << summary.dump(2) << '\n';
    close_checked(f, p);
  }
  {
    const fs::path p = dir / "aggregate.csv";
    auto f = open_out(p);
    f << "# config: " << resolved.dump() << '\n';
    write_aggregate_header(f);
    write_aggregate_row(f, aggregate(cfg, results));
    close_checked(f, p);
  }
  out << "wrote " << (dir / "nodes.csv").string() << ", summary.json, aggregate.csv\n";
  return exit_code::ok;
}

int cmd_sweep(const std::string& config_path, std::optional<std::string> out_dir,
              std::optional<std::uint64_t> seed, std::optional<unsigned> trials, bool dry_run,
              unsigned threads, std::ostream& out, std::ostream& err) {
  json raw = read_json_file(config_path);
  if (raw.is_object()) {
    if (seed) raw["seed"] = *seed;
    if (trials) raw["trials"] = *trials;
  }
  const SweepSpec spec = sweep_from_json(raw);
  const auto cells = sweep_cells(spec);
  // A cell with an invalid combination (say n too small) is marked failed in
  // its row; the rest of the sweep still runs.
  const json resolved = to_json(spec);
  if (dry_run) {
    json j = resolved;
    j["cells"] = cells.size();
    out << j.dump(2) << '\n';
    return exit_code::ok;
  }

  const fs::path dir = out_dir ? *out_dir : !spec.out_dir.empty() ? spec.out_dir : default_out_dir();
  const fs::path p = dir / "sweep.csv";
  auto f = open_out(p);
  f << "# sweep: " << resolved.dump() << '\n';
  write_aggregate_header(f);
  std::size_t failed = 0;
  for (const auto& cfg : cells) {
    CellAggregate a;
    try {
      const auto results = run_checked(cfg, threads);
      a = aggregate(cfg, results);
    } catch (const InvariantError&) {
      throw;
    } catch (const std::exception& e) {
      a.config = cfg;
      a.status = std::string("failed: ") + e.what();
      ++failed;
      err << "cell n=" << cfg.n << " d=" << cfg.d << " delta=" << cfg.delta
          << " strategy=" << cfg.strategy.name << " failed: " << e.what() << '\n';
    }
    write_aggregate_row(f, a);
  }
  close_checked(f, p);
  out << "wrote " << p.string() << " (" << cells.size() << " cells, " << failed << " failed)\n";
  return exit_code::ok;
}

json graph_report(const Topology& t, std::optional<double> delta, std::uint64_t seed) {
  const HMultigraph& h = t.h();
  json j;
  j["n"] = h.size();
  j["d"] = h.degree();
  j["k"] = t.k();
  j["seed"] = h.seed();
  j["regular"] = is_regular(h);
  j["hamiltonian_decomposition"] = has_hamiltonian_decomposition(h);
  j["parallel_edge_pairs"] = parallel_edge_pairs(h);
  j["non_tree_like_fraction_r1"] = non_tree_like_fraction(h, 1);
  j["eccentricity_node0"] = eccentricity(h, 0);
  try {
    const SpectralEstimate s = estimate_spectral_gap(h, 5000, seed, 1e-7);
    j["lambda2"] = s.lambda2;
    j["lambda_abs"] = s.lambda_abs;
    j["h_lower"] = s.h_lower;
  } catch (const ConvergenceError& e) {
    j["spectral_error"] = e.what();
  }
  if (delta) {
    const NodeSet byz = place_byzantine(h.size(), *delta, derive_seed(seed, {streams::kByzantine}));
    j["delta"] = *delta;
    j["byzantine"] = byz.size();
    j["longest_byzantine_chain"] = longest_byzantine_chain(h, byz);
  }
  return j;
}

// Estimate histogram per node class from a nodes.csv written by `run`.
json results_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  json config = nullptr;
  std::map<std::string, std::map<unsigned, std::size_t>> hist;
  std::map<std::string, std::size_t> undecided, crashed;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind("# config: ", 0) == 0) {
      config = json::parse(line.substr(10), nullptr, false);
      continue;
    }
    if (line.empty() || line.rfind("trial,", 0) == 0) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (line.back() == ',') cols.emplace_back();
    if (cols.size() != 6) throw IoError(path + ":" + std::to_string(line_no) + ": expected 6 columns");
    const std::string& cls = cols[2];
    if (cols[5] == "1")
      ++crashed[cls];
    else if (cols[3] == "1")
      ++hist[cls][static_cast<unsigned>(std::stoul(cols[4]))];
    else
      ++undecided[cls];
  }
  json j;
  j["config"] = config;
  json classes = json::object();
  for (const auto& [cls, h] : hist) {
    json rows = json::array();
    for (const auto& [est, count] : h) rows.push_back({{"estimate", est}, {"count", count}});
    classes[cls]["estimates"] = rows;
  }
  for (const auto& [cls, c] : undecided) classes[cls]["undecided"] = c;
  for (const auto& [cls, c] : crashed) classes[cls]["crashed"] = c;
  j["classes"] = std::move(classes);
  return j;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Byzantine counting on small-world expanders", "byzcount"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads for trials (0: all cores)");

  std::size_t n = 1024;
  unsigned d = 8;
  std::uint64_t seed = 1;
  std::string out_path;
  auto* gen = app.add_subcommand("gen", "generate an H(n,d) graph file");
  gen->add_option("--n", n, "number of nodes");
  gen->add_option("--d", d, "degree (even)");
  gen->add_option("--seed", seed, "graph seed");
  gen->add_option("--out", out_path, "output file")->required();

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed_override;
  std::optional<unsigned> trials_override;
  bool dry_run = false;
  auto* run = app.add_subcommand("run", "run one experiment configuration");
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  for (auto* sub : {run, sweep}) {
    sub->add_option("--config", config_path, "JSON file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed_override, "override the root seed");
    sub->add_option("--trials", trials_override, "override trials");
    sub->add_flag("--dry-run", dry_run, "print the resolved config and exit");
  }

  std::string graph_path, results_path;
  std::optional<double> delta;
  auto* analyze = app.add_subcommand("analyze", "graph statistics or a results histogram");
  analyze->add_option("--graph", graph_path, "graph file from gen");
  analyze->add_option("--results", results_path, "nodes.csv from run");
  analyze->add_option("--n", n, "generate instead of loading");
  analyze->add_option("--d", d, "degree");
  analyze->add_option("--seed", seed, "seed");
  analyze->add_option("--delta", delta, "also place Byzantine nodes and report chains");
  analyze->add_option("--out", out_path, "write JSON here instead of stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_code::ok;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return exit_code::usage;
  }

  try {
    if (*gen) return cmd_gen(n, d, seed, out_path, out);
    if (*run)
      return cmd_run(config_path, out_dir.value_or(default_out_dir()), seed_override,
                     trials_override, dry_run, threads, out);
    if (*sweep)
      return cmd_sweep(config_path, out_dir, seed_override, trials_override, dry_run, threads, out,
                       err);
    if (*analyze) {
      json report;
      if (!results_path.empty()) {
        report = results_report(results_path);
      } else if (!graph_path.empty()) {
        std::ifstream in(graph_path);
        if (!in) throw IoError("cannot open " + graph_path);
        LoadedGraph g = read_graph(in);
        const std::uint64_t s = g.h.seed();
        report = graph_report(augment_small_world(std::move(g.h), g.k), delta, s);
      } else {
        report = graph_report(augment_small_world(generate_h_graph(n, d, seed)), delta, seed);
      }
      if (out_path.empty()) {
        out << report.dump(2) << '\n';
      } else {
        auto f = open_out(out_path);
        f << report.dump(2) << '\n';
        close_checked(f, out_path);
      }
      return exit_code::ok;
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::io;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::io;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::config;
  } catch (const InvariantError& e) {
    err << "internal invariant violated: " << e.what() << '\n';
    return exit_code::internal;
  } catch (const std::invalid_argument& e) {
    err << "invalid parameter: " << e.what() << '\n';
    return exit_code::config;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return exit_code::internal;
  }
  return exit_code::usage;
}

}  // namespace byzcount
