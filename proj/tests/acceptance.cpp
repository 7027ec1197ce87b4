// Acceptance checks: one PASS/FAIL line per criterion, followed by indented
// detail lines. `--only N` runs a single criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "byzcount/baseline.hpp"
#include "byzcount/engine.hpp"
#include "byzcount/rng.hpp"

using namespace byzcount;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::vector<std::string> details;
};

template <typename... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double mean(const std::vector<double>& xs) {
  return xs.empty() ? NAN : std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
}

double median(std::vector<double> xs) {
  if (xs.empty()) return NAN;
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : (xs[m - 1] + xs[m]) / 2;
}

unsigned log_ceiling(std::size_t n) {
  return static_cast<unsigned>(std::ceil(4 * std::log2(static_cast<double>(n))));
}

// ---- independent oracles -------------------------------------------------

// Plain BFS over the raw incidence lists.
std::vector<int> bfs(const HMultigraph& h, NodeIndex s) {
  std::vector<int> dist(h.size(), -1);
  std::queue<NodeIndex> q;
  dist[s] = 0;
  q.push(s);
  while (!q.empty()) {
    NodeIndex u = q.front();
    q.pop();
    for (NodeIndex w : h.incident(u))
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        q.push(w);
      }
  }
  return dist;
}

// Every label splits into n edges forming one cycle through all nodes.
bool cycles_ok(const HMultigraph& h) {
  const std::size_t n = h.size();
  for (unsigned c = 1; c <= h.degree() / 2; ++c) {
    std::vector<std::vector<NodeIndex>> adj(n);
    for (const auto& e : h.edges())
      if (e.cycle == c) {
        adj[e.u].push_back(e.v);
        adj[e.v].push_back(e.u);
      }
    for (const auto& a : adj)
      if (a.size() != 2) return false;
    std::vector<char> seen(n, 0);
    NodeIndex prev = 0, cur = 0;
    std::size_t len = 0;
    do {
      if (seen[cur]) return false;
      seen[cur] = 1;
      ++len;
      NodeIndex next = adj[cur][0] == prev && len > 1 ? adj[cur][1] : adj[cur][0];
      prev = cur;
      cur = next;
    } while (cur != 0);
    if (len != n) return false;
  }
  return true;
}

// Radius 1: d distinct neighbours, no loop, no edge between two neighbours.
bool tree_like_r1(const HMultigraph& h, NodeIndex w) {
  auto inc = h.incident(w);
  std::set<NodeIndex> nb(inc.begin(), inc.end());
  if (nb.size() != inc.size() || nb.count(w)) return false;
  for (NodeIndex u : nb)
    for (NodeIndex x : h.incident(u))
      if (x != w && nb.count(x)) return false;
  return true;
}

// Is there a simple H-path of `len` Byzantine nodes?
bool has_byzantine_path(const HMultigraph& h, const NodeSet& byz, unsigned len) {
  std::vector<NodeIndex> path;
  std::function<bool(NodeIndex)> grow = [&](NodeIndex v) {
    path.push_back(v);
    if (path.size() >= len) return true;
    for (NodeIndex w : h.neighbors(v))
      if (byz.contains(w) && std::find(path.begin(), path.end(), w) == path.end() && grow(w))
        return true;
    path.pop_back();
    return false;
  };
  for (NodeIndex b : byz.members()) {
    path.clear();
    if (grow(b)) return true;
  }
  return false;
}

// ---- criteria --------------------------------------------------------------

Verdict graph_invariants() {
  Verdict v{true, {}};
  for (std::size_t n : {1000, 10000, 100000}) {
    unsigned ok = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      auto h = generate_h_graph(n, 8, seed);
      bool regular = h.size() == n;
      for (NodeIndex u = 0; u < n; ++u) regular = regular && h.incident(u).size() == 8;
      const bool good = regular && cycles_ok(h) && is_regular(h) && has_hamiltonian_decomposition(h);
      ok += good;
    }
    v.pass = v.pass && ok == 10;
    v.details.push_back(fmt("n=%zu: %u/10 seeds 8-regular with a valid 4-cycle decomposition", n, ok));
  }
  std::size_t checked = 0, wrong = 0;
  for (std::size_t n : {20, 50, 100, 200})
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Topology t = augment_small_world(generate_h_graph(n, 8, seed));
      for (NodeIndex u = 0; u < n; ++u) {
        auto dist = bfs(t.h(), u);
        std::vector<NodeIndex> expect;
        for (NodeIndex w = 0; w < n; ++w)
          if (dist[w] >= 1 && dist[w] <= static_cast<int>(t.k())) expect.push_back(w);
        auto got = t.g_neighbors(u);
        wrong += !std::equal(expect.begin(), expect.end(), got.begin(), got.end());
        ++checked;
      }
    }
  v.pass = v.pass && wrong == 0;
  v.details.push_back(fmt("L vs brute-force BFS, n<=200: %zu/%zu neighbourhoods match", checked - wrong,
                          checked));
  return v;
}

Verdict tree_like_census() {
  Verdict v;
  std::map<std::size_t, double> frac;
  std::size_t oracle_mismatch = 0;
  for (std::size_t n : {50000, 100000}) {
    std::vector<double> fs;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      auto h = generate_h_graph(n, 8, seed);
      const double f = non_tree_like_fraction(h, 1);
      std::size_t bad = 0;
      for (NodeIndex u = 0; u < n; ++u) bad += !tree_like_r1(h, u);
      oracle_mismatch += bad != static_cast<std::size_t>(std::llround(f * n));
      fs.push_back(f);
    }
    frac[n] = mean(fs);
    v.details.push_back(fmt("n=%zu: mean non-tree-like fraction %.5f (%.0f nodes)", n, frac[n],
                            frac[n] * n));
  }
  const double shrink = frac[100000] / frac[50000];
  v.details.push_back(fmt("shrink factor on doubling: %.3f (want [0.3, 0.8]); threshold 0.01 at 1e5", shrink));
  v.details.push_back(fmt("radius-1 oracle disagreements: %zu of 20 graphs", oracle_mismatch));
  v.pass = frac[100000] <= 0.01 && shrink >= 0.3 && shrink <= 0.8 && oracle_mismatch == 0;
  return v;
}

Verdict max_color() {
  Verdict v;
  const unsigned np = 1024, trials = 100000;
  const double lg = std::log2(double(np));
  const double lower = lg - std::log2(lg);
  std::size_t above = 0, below = 0;
  std::vector<std::uint64_t> hist(14, 0);
  std::uint64_t draws = 0;
  for (unsigned t = 0; t < trials; ++t) {
    StreamRng rng(derive_seed(2024, {t}));
    std::uint32_t mx = 0;
    for (unsigned j = 0; j < np; ++j) {
      const auto c = draw_color(rng).value;
      mx = std::max(mx, c);
      ++hist[std::min<std::uint32_t>(c, 13)];
    }
    draws += np;
    above += mx > 2 * lg;
    below += mx <= lower;
  }
  const double fa = double(above) / trials, fb = double(below) / trials, bound = 1.5 / np;
  v.details.push_back(fmt("freq(max > %.0f) = %.6f, bound %.6f", 2 * lg, fa, bound));
  v.details.push_back(fmt("freq(max <= %.2f) = %.6f, bound %.6f", lower, fb, bound));
  // Pr[c = r] = 2^-r within 3 sigma for r <= 12.
  unsigned off = 0;
  for (unsigned r = 1; r <= 12; ++r) {
    const double p = std::ldexp(1.0, -int(r));
    const double got = double(hist[r]) / draws;
    const double sigma = std::sqrt(p * (1 - p) / draws);
    off += std::fabs(got - p) > 3 * sigma;
  }
  v.details.push_back(fmt("Pr[c=r] outside 3 sigma for %u of r=1..12 (%llu draws)", off,
                          static_cast<unsigned long long>(draws)));
  v.pass = fa <= bound && fb < bound && off == 0;
  return v;
}

Verdict byzantine_chains() {
  Verdict v;
  const std::size_t n = 100000;
  const double delta = 0.6;
  const unsigned k = lattice_radius(8);
  unsigned with_chain = 0, disagree = 0;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    auto h = generate_h_graph(n, 8, s);
    NodeSet byz = place_byzantine(n, delta, s);
    const bool oracle = has_byzantine_path(h, byz, k);
    disagree += oracle != (longest_byzantine_chain(h, byz, k) >= k);
    with_chain += oracle;
  }
  const double union_bound = n * std::pow(8.0, k - 1) * std::pow(double(n), -double(k) * delta);
  const double frac = with_chain / 100.0, limit = 2 * union_bound + 0.02;
  v.details.push_back(fmt("%u/100 placements with a Byzantine %u-chain (|Byz|=%zu); limit %.4f",
                          with_chain, k, byzantine_count(n, delta), limit));
  v.details.push_back(fmt("library vs path-search oracle disagreements: %u", disagree));
  v.pass = frac <= limit && disagree == 0;
  return v;
}

// All-honest sweeps shared by criteria 5, 6 and 10.
struct Sweep {
  std::map<unsigned, std::vector<ExperimentResult>> runs;  // by log2 n
};

const Sweep& honest_sweep(bool times_phase) {
  static std::map<bool, Sweep> cache;
  auto it = cache.find(times_phase);
  if (it != cache.end()) return it->second;
  Sweep s;
  for (unsigned e = 10; e <= 14; ++e) {
    ExperimentConfig c;
    c.n = std::size_t{1} << e;
    c.trials = 20;
    c.seed = 1;
    c.subphase_factor = {1, times_phase};
    s.runs[e] = run_trials(c, 1);
  }
  return cache[times_phase] = std::move(s);
}

Verdict honest_sanity() {
  Verdict v{true, {}};
  const auto& sw = honest_sweep(false);
  std::map<unsigned, double> med;
  for (const auto& [e, rs] : sw.runs) {
    const std::size_t n = std::size_t{1} << e;
    double worst_decided = 1;
    unsigned top = 0;
    std::vector<double> est;
    for (const auto& r : rs) {
      std::size_t decided = 0;
      for (const auto& o : r.nodes)
        if (o.estimate) {
          ++decided;
          top = std::max(top, *o.estimate);
          est.push_back(*o.estimate);
        }
      worst_decided = std::min(worst_decided, double(decided) / r.honest);
    }
    med[e] = median(est);
    const bool ok = worst_decided >= 0.9 && top <= log_ceiling(n);
    v.pass = v.pass && ok;
    v.details.push_back(fmt("n=2^%u: min decided %.4f, max estimate %u (cap %u), median %.1f, mean %.3f", e,
                            worst_decided, top, log_ceiling(n), med[e], mean(est)));
  }
  const double ratio = std::pow(med[14] / med[10], 0.25);
  v.details.push_back(fmt("doubling ratio (median(2^14)/median(2^10))^(1/4) = %.4f (want [1.05, 1.9])", ratio));
  std::string steps = "per-doubling median ratios:";
  for (unsigned e = 10; e < 14; ++e) steps += fmt(" %.3f", med[e + 1] / med[e]);
  v.details.push_back(steps);
  v.pass = v.pass && ratio >= 1.05 && ratio <= 1.9;
  return v;
}

Verdict early_stop() {
  Verdict v{true, {}};
  const double limit = 0.1 + 0.05;
  for (const auto& [e, rs] : honest_sweep(false).runs) {
    std::size_t safe = 0, early = 0;
    for (const auto& r : rs)
      for (const auto& o : r.nodes)
        if (o.label == "byz_safe") {
          ++safe;
          early += o.estimate && *o.estimate <= 2;
        }
    const double f = safe ? double(early) / safe : NAN;
    v.pass = v.pass && safe > 0 && f <= limit;
    v.details.push_back(fmt("n=2^%u: %zu/%zu byz_safe decided at i<=2 (%.4f, limit %.2f)", e, early, safe, f,
                            limit));
  }
  return v;
}

Verdict injection_window() {
  Verdict v;
  std::size_t runs = 0, skipped = 0, runs_with_rejections = 0;
  std::uint64_t accepted = 0, rejected = 0, reached = 0;
  for (std::size_t n : {128, 256}) {
    unsigned placements = 0;
    for (std::uint64_t seed = 1; placements < 250; ++seed) {
      Topology t = augment_small_world(generate_h_graph(n, 8, seed));
      NodeSet byz = place_byzantine(n, 0.6, seed);
      if (has_byzantine_path(t.h(), byz, t.k())) {
        ++skipped;
        continue;
      }
      ++placements;
      for (unsigned inject : {t.k(), t.k() + 1}) {
        ExperimentConfig c;
        c.n = n;
        c.algorithm = Algorithm::byzantine;
        Simulator sim(t, byz, c, strategy_late_injector(inject), seed,
                      {.watch_color = Color{MagnitudeRule{}.value(n)}});
        sim.run_setup();
        sim.run_phase(inject);
        accepted += sim.watch().accepted_from_byzantine;
        rejected += sim.watch().rejected_from_byzantine;
        reached += sim.watch().reached.size();
        runs_with_rejections += sim.watch().rejected_from_byzantine > 0;
        ++runs;
      }
    }
  }
  v.details.push_back(fmt("%zu runs (n in {128,256}, t in {k,k+1}), %zu placements skipped for a k-chain",
                          runs, skipped));
  v.details.push_back(fmt("injected tokens accepted %llu, rejected %llu; honest nodes reached %llu; runs with "
                          "rejections %zu",
                          static_cast<unsigned long long>(accepted), static_cast<unsigned long long>(rejected),
                          static_cast<unsigned long long>(reached), runs_with_rejections));
  v.pass = runs >= 1000 && accepted == 0 && reached == 0 && runs_with_rejections == runs;
  return v;
}

Verdict crash_on_conflict() {
  Verdict v;
  const std::size_t n = 256;
  unsigned target_crashed = 0;
  std::size_t far_crashes = 0, near_crashes = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Topology t = augment_small_world(generate_h_graph(n, 8, seed));
    const NodeIndex b = static_cast<NodeIndex>(seed * 37 % n);
    NodeSet byz(n);
    byz.insert(b);
    ExperimentConfig c;
    c.n = n;
    c.algorithm = Algorithm::byzantine;
    Simulator sim(t, byz, c, strategy_topology_liar(), seed);
    sim.run_setup();
    const NodeIndex target = t.g_neighbors(b).front();
    target_crashed += sim.state(target).crashed;
    for (NodeIndex u = 0; u < n; ++u) {
      if (u == b || u == target || !sim.state(u).crashed) continue;
      (t.g_adjacent(u, b) ? near_crashes : far_crashes) += 1;
    }
  }
  v.details.push_back(fmt("target crashed in %u/100 runs", target_crashed));
  v.details.push_back(fmt("crashes without a Byzantine G-neighbour: %zu; other crashes next to the liar: %zu",
                          far_crashes, near_crashes));
  v.pass = target_crashed == 100 && far_crashes == 0;
  return v;
}

struct AttackTally {
  std::size_t honest = 0, crashed = 0, safe_deciders = 0, safe_in_range = 0, safe = 0;
  double worst_crash = 0;
};

AttackTally attack(unsigned trials, std::optional<unsigned> a_radius) {
  ExperimentConfig c;
  c.n = 4096;
  c.delta = 0.6;
  c.algorithm = Algorithm::byzantine;
  c.strategy.name = "topology_liar+max_injector";
  c.trials = trials;
  c.a_radius = a_radius;
  AttackTally a;
  const unsigned hi = log_ceiling(c.n) + lattice_radius(c.d);
  for (const auto& r : run_trials(c, 1)) {
    a.honest += r.honest;
    a.crashed += r.crashed;
    a.worst_crash = std::max(a.worst_crash, double(r.crashed) / r.honest);
    for (const auto& o : r.nodes) {
      if (o.label != "byz_safe" || o.crashed) continue;
      ++a.safe;
      if (!o.estimate) continue;
      ++a.safe_deciders;
      a.safe_in_range += *o.estimate >= 1 && *o.estimate <= hi;
    }
  }
  return a;
}

Verdict core_survival() {
  Verdict v;
  const auto a = attack(20, std::nullopt);
  const double crash = double(a.crashed) / a.honest;
  const double in_range = a.safe_deciders ? double(a.safe_in_range) / a.safe_deciders : NAN;
  v.details.push_back(fmt("crashed honest %.4f pooled, %.4f worst seed (limit 0.05)", crash, a.worst_crash));
  v.details.push_back(fmt("byz_safe deciders in [1, %u]: %zu/%zu = %.4f (want >= 0.9); byz_safe uncrashed %zu",
                          log_ceiling(4096) + 3, a.safe_in_range, a.safe_deciders, in_range, a.safe));
  v.pass = a.worst_crash <= 0.05 && a.safe_deciders > 0 && in_range >= 0.9;
  const auto r1 = attack(5, 1u);
  v.details.push_back(fmt("info, a_radius=1 (5 seeds): byz_safe deciders in range %zu/%zu", r1.safe_in_range,
                          r1.safe_deciders));
  return v;
}

struct Fit {
  double c = 0, r2 = 0, r2_uncentered = 0, r2_intercept = 0, loglog_slope = 0;
};

// rounds ~ c L^3 with L = log2 n.
Fit cubic_fit(const std::map<unsigned, double>& rounds) {
  std::vector<double> x, y;
  for (auto [e, r] : rounds) {
    x.push_back(std::pow(double(e), 3));
    y.push_back(r);
  }
  const std::size_t m = x.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
  }
  Fit f;
  f.c = sxy / sxx;
  const double ybar = mean(y);
  double ss_res = 0, ss_tot = 0, ss_raw = 0;
  for (std::size_t i = 0; i < m; ++i) {
    ss_res += std::pow(y[i] - f.c * x[i], 2);
    ss_tot += std::pow(y[i] - ybar, 2);
    ss_raw += y[i] * y[i];
  }
  f.r2 = 1 - ss_res / ss_tot;
  f.r2_uncentered = 1 - ss_res / ss_raw;
  const double xbar = mean(x);
  double cxy = 0, cxx = 0;
  for (std::size_t i = 0; i < m; ++i) {
    cxy += (x[i] - xbar) * (y[i] - ybar);
    cxx += (x[i] - xbar) * (x[i] - xbar);
  }
  f.r2_intercept = cxy * cxy / (cxx * ss_tot);
  double lx = 0, ly = 0, lxy = 0, lxx = 0;
  for (auto [e, r] : rounds) {
    lx += std::log(double(e));
    ly += std::log(r);
  }
  lx /= m;
  ly /= m;
  for (auto [e, r] : rounds) {
    lxy += (std::log(double(e)) - lx) * (std::log(r) - ly);
    lxx += std::pow(std::log(double(e)) - lx, 2);
  }
  f.loglog_slope = lxy / lxx;
  return f;
}

std::map<unsigned, double> mean_rounds(const Sweep& s) {
  std::map<unsigned, double> out;
  for (const auto& [e, rs] : s.runs) {
    std::vector<double> r;
    for (const auto& x : rs) r.push_back(double(x.rounds_total));
    out[e] = mean(r);
  }
  return out;
}

Verdict round_scaling() {
  Verdict v;
  const auto rounds = mean_rounds(honest_sweep(true));
  std::string row = "mean rounds (i*alpha_i subphases):";
  for (auto [e, r] : rounds) row += fmt(" 2^%u:%.1f", e, r);
  v.details.push_back(row);
  const Fit f = cubic_fit(rounds);
  v.details.push_back(fmt("c*L^3 fit: c=%.4f R^2=%.4f (want >= 0.95); uncentered %.4f; with intercept %.4f; "
                          "log-log exponent %.2f",
                          f.c, f.r2, f.r2_uncentered, f.r2_intercept, f.loglog_slope));
  const auto plain = mean_rounds(honest_sweep(false));
  const Fit g = cubic_fit(plain);
  row = "info, alpha_i subphases:";
  for (auto [e, r] : plain) row += fmt(" 2^%u:%.1f", e, r);
  v.details.push_back(row + fmt("; R^2=%.4f, log-log exponent %.2f", g.r2, g.loglog_slope));
  v.pass = f.r2 >= 0.95;
  return v;
}

Verdict baseline_fragility() {
  Verdict v;
  const std::size_t n = 1024;
  const double lg = std::log2(double(n));
  std::size_t high = 0, low = 0, trials = 0, disagreements = 0;
  for (std::uint64_t g = 1; g <= 100; ++g) {
    auto h = generate_h_graph(n, 8, g);
    for (std::uint64_t s = 0; s < 1000; ++s) {
      auto est = run_support_estimation(h, NodeSet(n), std::nullopt, 0, derive_seed(g, {s}));
      const auto top = *std::max_element(est.final_max.begin(), est.final_max.end());
      disagreements += *std::min_element(est.final_max.begin(), est.final_max.end()) != top;
      high += top > 2 * lg;
      low += top < lg / 2;
      ++trials;
    }
  }
  const double fh = double(high) / trials, fl = double(low) / trials;
  v.details.push_back(fmt("%zu trials: freq(X > %.0f) = %.6f (bound %.6f); freq(X < %.0f) = %.6f (bound 0.001)",
                          trials, 2 * lg, fh, 1.5 / n, lg / 2, fl));
  unsigned faked = 0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    auto h = generate_h_graph(n, 8, s);
    NodeSet byz(n);
    byz.insert(static_cast<NodeIndex>(s * 101 % n));
    auto est = run_support_estimation(h, byz, 100u, 0, s);
    bool all = true;
    for (NodeIndex u = 0; u < n; ++u)
      if (!byz.contains(u)) all = all && est.final_max[u] == 100;
    faked += all;
  }
  v.details.push_back(fmt("one Byzantine node with value 100: every honest maximum is 100 in %u/10 graphs", faked));
  v.details.push_back(fmt("runs where honest nodes disagreed on the maximum: %zu", disagreements));
  v.pass = fh <= 1.5 / n && fl < 1e-3 && faked == 10 && disagreements == 0;
  return v;
}

struct Criterion {
  unsigned id;
  const char* title;
  double budget_s;
  Verdict (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"byzcount acceptance checks"};
  std::vector<unsigned> only;
  app.add_option("--only", only, "criteria to run (default: all)")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "graph invariants", 60, graph_invariants},
      {2, "locally-tree-like census", 120, tree_like_census},
      {3, "max-color tails", 60, max_color},
      {4, "Byzantine chain statistics", 180, byzantine_chains},
      {5, "all-honest sanity", 900, honest_sanity},
      {6, "early-stop bound", 900, early_stop},
      {7, "injection window", 60, injection_window},
      {8, "crash on conflict", 10, crash_on_conflict},
      {9, "core survival under attack", 600, core_survival},
      {10, "round scaling", 900, round_scaling},
      {11, "baseline fragility", 60, baseline_fragility},
  };
  bool ok = true;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = Clock::now();
    Verdict v = c.run();
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = v.pass && in_time;
    ok = ok && pass;
    std::printf("criterion %2u %s: %s (%.1fs, budget %.0fs%s)\n", c.id, c.title, pass ? "PASS" : "FAIL", secs,
                c.budget_s, in_time ? "" : ", over budget");
    for (const auto& d : v.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
  }
  return ok ? 0 : 1;
}
