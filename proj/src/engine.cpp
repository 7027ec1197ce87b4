#include "byzcount/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "byzcount/baseline.hpp"
#include "byzcount/rng.hpp"

namespace byzcount {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::basic: return "basic";
    case Algorithm::byzantine: return "byzantine";
    case Algorithm::baseline: return "baseline";
  }
  return "?";
}

std::string to_string(AlphaVariant v) {
  return v == AlphaVariant::pseudocode ? "pseudocode" : "prose";
}

void validate(const ExperimentConfig& cfg, Validation mode) {
  const bool fixture = mode == Validation::fixture;
  if (cfg.n < (fixture ? 3u : 16u))
    throw ConfigError("n", fixture ? "must be at least 3" : "must be at least 16");
  if (cfg.n > (std::size_t{1} << 31)) throw ConfigError("n", "too large");
  if (cfg.d % 2 != 0) throw ConfigError("d", "must be even");
  if (cfg.d < (fixture ? 4u : 8u))
    throw ConfigError("d", fixture ? "must be at least 4" : "must be at least 8");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw ConfigError("epsilon", "must lie in (0, 1)");
  if (!(cfg.delta > 3.0 / cfg.d && cfg.delta <= 1.0))
    throw ConfigError("delta", "must lie in (3/d, 1]");
  if (!known_strategy(cfg.strategy.name))
    throw ConfigError("strategy", "unknown strategy '" + cfg.strategy.name + "'");
  if (cfg.subphase_factor.multiplier < 1)
    throw ConfigError("subphase_factor", "must be at least 1");
  if (cfg.trials < 1) throw ConfigError("trials", "must be at least 1");
  if (!(cfg.band_lo > 0.0)) throw ConfigError("band_lo", "must be positive");
  if (!(cfg.band_hi > cfg.band_lo)) throw ConfigError("band_hi", "must exceed band_lo");
  if (cfg.phase_cap > 4096) throw ConfigError("phase_cap", "must be at most 4096");
}

unsigned effective_phase_cap(const ExperimentConfig& cfg) {
  if (cfg.phase_cap != 0) return cfg.phase_cap;
  return static_cast<unsigned>(std::ceil(10.0 * std::log2(static_cast<double>(cfg.n)) - 1e-9));
}

std::uint64_t trial_seed(const ExperimentConfig& cfg, unsigned trial) {
  return derive_seed(cfg.seed, {streams::kTrial, trial});
}

SuccessMetrics collect_metrics(std::span<const NodeOutcome> outcomes, Band band) {
  SuccessMetrics m;
  const double logn = std::log2(static_cast<double>(std::max<std::size_t>(outcomes.size(), 1)));
  const double lo = band.lo * logn;
  const double hi = band.hi * logn;
  std::size_t live = 0, good = 0, safe_good = 0;
  for (const NodeOutcome& o : outcomes) {
    if (o.byzantine) continue;
    ++m.honest;
    if (o.crashed) {
      ++m.crashed;
      continue;
    }
    ++live;
    const bool safe = o.label == "byz_safe";
    if (safe) ++m.byz_safe;
    if (!o.estimate) {
      ++m.non_deciders;
      continue;
    }
    ++m.deciders;
    const double e = *o.estimate;
    if (e >= lo && e <= hi) {
      ++good;
      if (safe) ++safe_good;
    }
  }
  if (live > 0) m.success_fraction = static_cast<double>(good) / static_cast<double>(live);
  if (m.byz_safe > 0)
    m.byz_safe_success_fraction = static_cast<double>(safe_good) / static_cast<double>(m.byz_safe);
  return m;
}

std::vector<NodeOutcome> label_outcomes(std::span<const NodeState> states,
                                        const NodeClassification& c) {
  std::vector<NodeOutcome> out;
  out.reserve(states.size());
  for (std::size_t v = 0; v < states.size(); ++v) {
    const auto vi = static_cast<NodeIndex>(v);
    NodeOutcome o;
    o.id = states[v].id;
    o.estimate = states[v].decided;
    o.crashed = states[v].crashed;
    o.byzantine = c.byz.contains(vi);
    if (o.byzantine)
      o.label = "byzantine";
    else if (c.nlt.contains(vi))
      o.label = "non_tree_like";
    else if (c.bus.contains(vi))
      o.label = "byz_unsafe";
    else
      o.label = "byz_safe";
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<VerificationStep> verification_subround_scheduler(unsigned, unsigned k) {
  std::vector<VerificationStep> steps;
  if (k < 2) return steps;
  for (unsigned s = 1; s <= 2 * (k - 1); ++s) steps.push_back({s, s % 2 == 1, (s + 1) / 2});
  return steps;
}

namespace {

bool admissible(const Topology& t, const Envelope& e) {
  const std::size_t n = t.size();
  if (e.sender >= n || e.to >= n || e.sender == e.to) return false;
  if (e.token.from != t.h().id(e.sender)) return false;
  if (!fits_wire(e.token)) return false;
  return t.h().adjacent(e.sender, e.to) || t.g_adjacent(e.sender, e.to);
}

constexpr std::uint64_t mix(std::uint64_t h, std::uint64_t x) {
  return splitmix64(h ^ (x + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2)));
}

}  // namespace

DeliveryStats deliver_round(const Topology& t, std::span<const Envelope> outbox,
                            std::vector<std::vector<Token>>& inboxes) {
  DeliveryStats s;
  inboxes.resize(t.size());
  for (auto& box : inboxes) box.clear();
  for (const Envelope& e : outbox) {
    ++s.sent;
    if (!admissible(t, e)) {
      ++s.dropped;
      continue;
    }
    inboxes[e.to].push_back(e.token);
    ++s.delivered;
  }
  return s;
}

// Routes provenance queries over L links to the addressed node.
class Simulator::Router final : public ProvenanceOracle {
 public:
  explicit Router(Simulator& sim) : sim_(sim) {}
  std::optional<NodeId> query(const ProvenanceQuery& q) override {
    ++sim_.counters_.queries_total;
    if (sim_.current_phase_ != nullptr) ++sim_.current_phase_->queries;
    const HMultigraph& h = sim_.topology_.h();
    auto target = h.index_of(q.target);
    auto asker = h.index_of(q.asker);
    if (!target || !asker) return std::nullopt;
    if (*target != *asker && !sim_.topology_.g_adjacent(*asker, *target)) return std::nullopt;
    const auto ports = sim_.ports(*target);
    std::optional<NodeId> a;
    if (sim_.byz_.contains(*target))
      a = sim_.strategy_->answer(sim_.snapshot({}), sim_.states_[*target], ports, q);
    else
      a = answer_provenance_query(sim_.states_[*target], ports, q);
    if (a) ++sim_.counters_.answers_total;
    return a;
  }

 private:
  Simulator& sim_;
};

class Simulator::Observer final : public TokenObserver {
 public:
  Observer(Simulator& sim, Color watched) : sim_(sim), watched_(watched) {}
  void observe(NodeIndex receiver, const Token& token, bool accepted) override {
    if (token.color != watched_ || sim_.byz_.contains(receiver)) return;
    if (accepted) sim_.watch_.reached.insert(receiver);
    auto sender = sim_.topology_.h().index_of(token.from);
    if (!sender || !sim_.byz_.contains(*sender)) return;
    if (accepted)
      ++sim_.watch_.accepted_from_byzantine;
    else
      ++sim_.watch_.rejected_from_byzantine;
  }

 private:
  Simulator& sim_;
  Color watched_;
};

Simulator::Simulator(const Topology& topology, NodeSet byzantine, const ExperimentConfig& cfg,
                     std::unique_ptr<AdversaryStrategy> strategy, std::uint64_t protocol_seed,
                     SimulatorOptions options)
    : topology_(topology),
      byz_(std::move(byzantine)),
      cfg_(cfg),
      strategy_(std::move(strategy)),
      protocol_seed_(protocol_seed),
      options_(options) {
  const std::size_t n = topology_.size();
  if (byz_.universe() != n) throw std::invalid_argument("Byzantine set has the wrong universe");
  if (!strategy_) strategy_ = strategy_honest_mimic();
  const HMultigraph& h = topology_.h();
  states_.resize(n);
  port_off_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    states_[v].id = h.id(static_cast<NodeIndex>(v));
    states_[v].running_from = states_[v].id;
    for (NodeIndex w : h.neighbors(static_cast<NodeIndex>(v))) port_ids_.push_back(h.id(w));
    port_off_[v + 1] = port_ids_.size();
  }
  inboxes_.resize(n);
  next_inboxes_.resize(n);
  out_begin_.assign(n + 1, 0);
  byz_rank_.assign(n, 0);
  std::size_t rank = 0;
  for (NodeIndex b : byz_.members()) byz_rank_[b] = rank++;
  byz_out_.resize(rank);

  router_ = std::make_unique<Router>(*this);
  if (options_.watch_color) observer_ = std::make_unique<Observer>(*this, *options_.watch_color);
  watch_.reached = NodeSet(n);
  colors_ = [seed = protocol_seed_](NodeIndex v, unsigned i, unsigned j) {
    return scheduled_color(seed, v, i, j);
  };

  counters_.config = cfg_;
  counters_.k = topology_.k();
  counters_.byzantine = byz_.size();
  hash_ = mix(0, n);
  strategy_->prepare(snapshot({}));
}

Simulator::~Simulator() = default;

void Simulator::set_color_source(ColorSource source) { colors_ = std::move(source); }

std::span<const NodeId> Simulator::ports(NodeIndex v) const {
  return {port_ids_.data() + port_off_[v], port_ids_.data() + port_off_[v + 1]};
}

AdversarySnapshot Simulator::snapshot(std::span<const Envelope> honest_outbox) const {
  AdversarySnapshot s;
  s.topology = &topology_;
  s.byzantine = &byz_;
  s.states = states_;
  s.honest_outbox = honest_outbox;
  s.ctx = ctx_;
  s.protocol_seed = protocol_seed_;
  return s;
}

NodeEnvironment Simulator::environment(NodeIndex v, const PhaseParams& p) const {
  NodeEnvironment env;
  env.self = v;
  env.ports = topology_.h().neighbors(v);
  env.port_ids = ports(v);
  env.k = topology_.k();
  env.threshold = p.threshold;
  env.verifier = cfg_.algorithm == Algorithm::byzantine ? router_.get() : nullptr;
  env.observer = observer_.get();
  return env;
}

bool Simulator::any_honest_active() const {
  for (std::size_t v = 0; v < states_.size(); ++v)
    if (!byz_.contains(static_cast<NodeIndex>(v)) && !states_[v].crashed && states_[v].active)
      return true;
  return false;
}

void Simulator::run_setup() {
  if (setup_done_) return;
  setup_done_ = true;
  if (cfg_.algorithm != Algorithm::byzantine) return;

  const HMultigraph& h = topology_.h();
  const std::size_t n = h.size();
  ctx_ = RoundContext{0, 0, 0, 0, true};
  std::vector<NeighborReport> truthful(n);
  for (std::size_t v = 0; v < n; ++v) truthful[v] = truthful_report(h, static_cast<NodeIndex>(v));

  const AdversarySnapshot snap = snapshot({});
  std::vector<NeighborReport> lies;
  std::vector<const NeighborReport*> reports;
  for (std::size_t v = 0; v < n; ++v) {
    const auto vi = static_cast<NodeIndex>(v);
    auto g = topology_.g_neighbors(vi);
    lies.clear();
    lies.reserve(g.size());
    reports.clear();
    for (NodeIndex u : g) {
      if (!byz_.contains(u)) {
        reports.push_back(&truthful[u]);
        continue;
      }
      auto r = strategy_->report(snap, u, vi);
      if (!r) continue;
      r->reporter = h.id(u);  // the channel fixes the sender
      lies.push_back(std::move(*r));
    }
    for (const auto& r : lies) reports.push_back(&r);
    counters_.setup_messages += reports.size();
    hash_ = mix(hash_, reports.size());

    LocalKnowledge self;
    self.self = h.id(vi);
    self.h_ports = truthful[v].claims.front().neighbors;
    self.g_neighbors.reserve(g.size());
    for (NodeIndex u : g) self.g_neighbors.push_back(h.id(u));
    self.d = h.degree();
    self.k = topology_.k();
    auto rec = reconstruct_local_topology(self, reports);
    if (auto* view = std::get_if<LocalView>(&rec)) {
      states_[v].local_view = std::move(*view);
    } else {
      states_[v].crashed = true;
      states_[v].crash_reason = std::get<ReconstructionConflict>(rec).reason;
      hash_ = mix(hash_, v);
    }
  }
  counters_.setup_rounds = 1;
}

void Simulator::run() {
  run_setup();
  const unsigned cap = effective_phase_cap(cfg_);
  for (unsigned i = 1; i <= cap && any_honest_active(); ++i) run_phase(i);
  counters_.termination = any_honest_active() ? Termination::phase_cap : Termination::all_decided;
}

bool Simulator::run_phase(unsigned i) {
  if (!setup_done_) run_setup();
  if (!any_honest_active()) return false;
  const PhaseParams p = make_phase_params(i, cfg_.epsilon, topology_.h().degree(),
                                          cfg_.alpha_variant, cfg_.subphase_factor);
  counters_.phases.push_back({i, p.alpha, p.subphases, 0, 0, 0, 0});
  current_phase_ = &counters_.phases.back();
  for (auto& s : states_)
    if (!s.crashed) begin_phase(s, i);
  for (unsigned j = 1; j <= p.subphases; ++j) run_subphase(p, j);
  for (std::size_t v = 0; v < states_.size(); ++v) {
    NodeState& s = states_[v];
    const bool was_undecided = !s.decided.has_value();
    end_phase(s);
    if (was_undecided && s.decided && !byz_.contains(static_cast<NodeIndex>(v)))
      ++current_phase_->decided;
  }
  current_phase_ = nullptr;
  return any_honest_active();
}

void Simulator::run_subphase(const PhaseParams& p, unsigned j) {
  const unsigned i = p.i;
  ctx_ = RoundContext{ctx_.global_round, i, j, 0, false};
  const AdversarySnapshot snap = snapshot({});
  for (std::size_t v = 0; v < states_.size(); ++v) {
    NodeState& s = states_[v];
    if (s.crashed && !byz_.contains(static_cast<NodeIndex>(v))) continue;
    const auto vi = static_cast<NodeIndex>(v);
    if (byz_.contains(vi)) {
      const Color c = strategy_->subphase_color(snap, vi, s, i, j);
      begin_subphase(s, i, j, c);
      s.own_color = c;
    } else {
      begin_subphase(s, i, j, s.active ? colors_(vi, i, j) : Color{});
    }
  }
  for (auto& box : inboxes_) box.clear();
  for (unsigned t = 1; t <= i + 1; ++t) step_round(p, j, t);
}

void Simulator::step_round(const PhaseParams& p, unsigned j, unsigned t) {
  const std::size_t n = states_.size();
  ctx_ = RoundContext{ctx_.global_round, p.i, j, t, false};

  outbox_.clear();
  for (std::size_t v = 0; v < n; ++v) {
    out_begin_[v] = outbox_.size();
    const auto vi = static_cast<NodeIndex>(v);
    if (byz_.contains(vi) || states_[v].crashed) continue;
    honest_node_step(states_[v], inboxes_[v], ctx_, environment(vi, p), outbox_);
  }
  out_begin_[n] = outbox_.size();

  if (!byz_.empty()) {
    const AdversarySnapshot snap = snapshot(outbox_);
    for (NodeIndex b : byz_.members()) {
      auto& out = byz_out_[byz_rank_[b]];
      out.clear();
      byzantine_node_step(*strategy_, snap, states_[b], inboxes_[b], ctx_, environment(b, p), out);
    }
  }
  if (t > p.i) return;  // closing tick: nothing goes on the wire

  merged_.clear();
  for (std::size_t v = 0; v < n; ++v) {
    const auto vi = static_cast<NodeIndex>(v);
    if (byz_.contains(vi)) {
      const auto& out = byz_out_[byz_rank_[vi]];
      merged_.insert(merged_.end(), out.begin(), out.end());
    } else {
      merged_.insert(merged_.end(), outbox_.begin() + static_cast<std::ptrdiff_t>(out_begin_[v]),
                     outbox_.begin() + static_cast<std::ptrdiff_t>(out_begin_[v + 1]));
    }
  }
  const DeliveryStats d = deliver_round(topology_, merged_, next_inboxes_);
  inboxes_.swap(next_inboxes_);

  counters_.tokens_sent += d.sent;
  counters_.tokens_delivered += d.delivered;
  counters_.tokens_dropped += d.dropped;
  counters_.violations += d.dropped;
  const std::uint64_t window =
      cfg_.algorithm == Algorithm::byzantine
          ? verification_subround_scheduler(t, topology_.k()).size()
          : 0;
  const std::uint64_t cost = 1 + window;
  counters_.rounds_total += cost;
  current_phase_->rounds += cost;
  current_phase_->messages += d.delivered;

  for (std::size_t v = 0; v < n; ++v)
    for (const Token& tok : inboxes_[v]) {
      hash_ = mix(hash_, ctx_.global_round);
      hash_ = mix(hash_, v);
      hash_ = mix(hash_, tok.from.value);
      hash_ = mix(hash_, tok.predecessor.value);
      hash_ = mix(hash_, pack_aux(tok));
    }
  if (options_.record_transcript)
    for (const Envelope& e : merged_)
      if (admissible(topology_, e)) transcript_.push_back({ctx_.global_round, e.sender, e.to, e.token});
  ctx_.global_round += cost;
}

std::uint64_t Simulator::transcript_hash() const {
  std::uint64_t h = hash_;
  for (const NodeState& s : states_) {
    h = mix(h, s.decided.value_or(0));
    h = mix(h, s.crashed ? 1 : 0);
  }
  return h;
}

ExperimentResult Simulator::partial_result() const {
  ExperimentResult r = counters_;
  for (const NodeState& s : states_) {
    r.malformed += s.malformed;
    r.rejected += s.rejected;
  }
  r.messages_total = r.tokens_delivered + r.setup_messages + r.queries_total + r.answers_total;
  r.transcript_hash = transcript_hash();
  return r;
}

namespace {

void finish(ExperimentResult& r, const ExperimentConfig& cfg, const Topology& topo,
            const NodeSet& byz, std::span<const NodeState> states) {
  r.a_radius = cfg.a_radius.value_or(default_a_radius(cfg.n, cfg.d, cfg.delta));
  const auto c = classify_nodes(topo, byz, r.a_radius);
  r.nodes = label_outcomes(states, c);
  const SuccessMetrics m = collect_metrics(r.nodes, Band{cfg.band_lo, cfg.band_hi});
  r.honest = m.honest;
  r.crashed = m.crashed;
  r.deciders = m.deciders;
  r.non_deciders = m.non_deciders;
  r.byz_safe = m.byz_safe;
  r.success_fraction = m.success_fraction;
  r.byz_safe_success_fraction = m.byz_safe_success_fraction;
}

ExperimentResult run_baseline(const ExperimentConfig& cfg, unsigned trial, std::uint64_t seed,
                              const Topology& topo, const NodeSet& byz) {
  std::optional<std::uint32_t> forced;
  const std::string& s = cfg.strategy.name;
  if (s.find("injector") != std::string::npos)
    forced = MagnitudeRule{cfg.strategy.magnitude}.value(cfg.n);
  const auto est = run_support_estimation(topo.h(), byz, forced, cfg.baseline_rounds, seed);

  std::vector<NodeState> states(topo.size());
  std::uint64_t h = mix(0, topo.size());
  for (std::size_t v = 0; v < states.size(); ++v) {
    states[v].id = topo.h().id(static_cast<NodeIndex>(v));
    states[v].decided = est.final_max[v];
    states[v].active = false;
    h = mix(mix(h, est.samples[v]), est.final_max[v]);
  }
  ExperimentResult r;
  r.config = cfg;
  r.trial = trial;
  r.seed = seed;
  r.k = topo.k();
  r.byzantine = byz.size();
  r.rounds_total = est.rounds_run;
  r.tokens_sent = r.tokens_delivered = est.messages;
  r.messages_total = est.messages;
  r.transcript_hash = h;
  finish(r, cfg, topo, byz, states);
  return r;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned trial, Validation mode) {
  validate(cfg, mode);
  const std::uint64_t seed = trial_seed(cfg, trial);
  Topology topo = augment_small_world(generate_h_graph(cfg.n, cfg.d, seed));
  NodeSet byz = places_byzantine(cfg.strategy) ? place_byzantine(cfg.n, cfg.delta, seed)
                                               : NodeSet(cfg.n);
  if (cfg.algorithm == Algorithm::baseline) return run_baseline(cfg, trial, seed, topo, byz);

  Simulator sim(topo, byz, cfg, make_strategy(cfg.strategy, topo.k()), seed);
  sim.run();
  ExperimentResult r = sim.partial_result();
  r.trial = trial;
  r.seed = seed;
  finish(r, cfg, topo, byz, sim.states());
  return r;
}

std::vector<ExperimentResult> run_trials(const ExperimentConfig& cfg, unsigned threads,
                                         Validation mode) {
  std::vector<ExperimentResult> out(cfg.trials);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, cfg.trials);
  std::atomic<unsigned> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (unsigned t = next++; t < cfg.trials && !failed; t = next++) {
      try {
        out[t] = run_experiment(cfg, t, mode);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace byzcount
