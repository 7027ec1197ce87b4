#include "byzcount/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "byzcount/rng.hpp"

namespace byzcount {

Color scheduled_color(std::uint64_t protocol_seed, NodeIndex v, unsigned i, unsigned j) {
  StreamRng rng(derive_seed(protocol_seed, {streams::kColor, v, i, j}));
  return draw_color(rng);
}

NeighborReport truthful_report(const HMultigraph& h, NodeIndex v) {
  NeighborReport r;
  r.reporter = h.id(v);
  AdjacencyClaim c;
  c.node = h.id(v);
  for (NodeIndex w : h.incident(v)) c.neighbors.push_back(h.id(w));
  r.claims.push_back(std::move(c));
  return r;
}

std::optional<NeighborReport> AdversaryStrategy::report(const AdversarySnapshot& snap,
                                                        NodeIndex reporter, NodeIndex) {
  return truthful_report(snap.h(), reporter);
}

Color AdversaryStrategy::subphase_color(const AdversarySnapshot& snap, NodeIndex b,
                                        const NodeState& state, unsigned i, unsigned j) {
  return state.active ? snap.future_color(b, i, j) : Color{};
}

void AdversaryStrategy::step(const AdversarySnapshot&, NodeState& b, std::span<const Token> inbox,
                             const RoundContext& ctx, const NodeEnvironment& env,
                             std::vector<Envelope>& outbox) {
  honest_node_step(b, inbox, ctx, env, outbox);
}

std::optional<NodeId> AdversaryStrategy::answer(const AdversarySnapshot&, const NodeState& target,
                                                std::span<const NodeId> port_ids,
                                                const ProvenanceQuery& q) {
  return answer_provenance_query(target, port_ids, q);
}

unsigned MagnitudeRule::value(std::size_t n) const {
  if (fixed) return *fixed;
  return static_cast<unsigned>(std::ceil(4.0 * std::log2(static_cast<double>(n)) - 1e-9)) + 10;
}

namespace {

class HonestMimic final : public AdversaryStrategy {
 public:
  std::string name() const override { return "honest_mimic"; }
};

class Silent final : public AdversaryStrategy {
 public:
  std::string name() const override { return "silent"; }
  std::optional<NeighborReport> report(const AdversarySnapshot&, NodeIndex, NodeIndex) override {
    return std::nullopt;
  }
  Color subphase_color(const AdversarySnapshot&, NodeIndex, const NodeState&, unsigned,
                       unsigned) override {
    return {};
  }
  void step(const AdversarySnapshot&, NodeState&, std::span<const Token>, const RoundContext&,
            const NodeEnvironment&, std::vector<Envelope>&) override {}
  std::optional<NodeId> answer(const AdversarySnapshot&, const NodeState&, std::span<const NodeId>,
                               const ProvenanceQuery&) override {
    return std::nullopt;
  }
};

// Runs the honest machine with the magnitude as its own color every
// subphase, never deciding; its send log then vouches for the lie.
class MaxInjector : public AdversaryStrategy {
 public:
  explicit MaxInjector(MagnitudeRule m) : magnitude_(m) {}
  std::string name() const override { return "max_injector"; }
  Color subphase_color(const AdversarySnapshot& snap, NodeIndex, const NodeState&, unsigned,
                       unsigned) override {
    return Color{magnitude_.value(snap.n())};
  }
  void step(const AdversarySnapshot& snap, NodeState& b, std::span<const Token> inbox,
            const RoundContext& ctx, const NodeEnvironment& env,
            std::vector<Envelope>& outbox) override {
    AdversaryStrategy::step(snap, b, inbox, ctx, env, outbox);
    b.flag_terminate = false;
  }

 private:
  MagnitudeRule magnitude_;
};

class LateInjector final : public AdversaryStrategy {
 public:
  LateInjector(unsigned t, MagnitudeRule m) : t_(t), magnitude_(m), fallback_(m) {}
  std::string name() const override { return "late_injector"; }

  void prepare(const AdversarySnapshot& snap) override {
    k_ = snap.topology->k();
    early_ = t_ < k_;
    chains_.assign(snap.n(), {});
    fakes_.clear();
    if (early_) return;
    const HMultigraph& h = snap.h();
    for (NodeIndex b : snap.byzantine->members()) {
      auto path = longest_byzantine_path_from(h, *snap.byzantine, b, std::min(t_, k_));
      for (std::size_t s = 1; s < path.size(); ++s) {
        const unsigned round = t_ - static_cast<unsigned>(s);
        NodeId pred = h.id(path[s]);  // claims to be the origin
        if (s + 1 < path.size()) {
          pred = h.id(path[s + 1]);
        } else if (round > 1) {
          // Blame someone outside the chain; verifiers stop before asking them.
          for (NodeIndex w : h.neighbors(path[s]))
            if (std::find(path.begin(), path.end(), w) == path.end()) {
              pred = h.id(w);
              break;
            }
        }
        fakes_.emplace(Key{h.id(path[s]).value, round, h.id(path[s - 1]).value}, pred);
      }
      chains_[b] = std::move(path);
    }
  }

  Color subphase_color(const AdversarySnapshot& snap, NodeIndex b, const NodeState& s, unsigned i,
                       unsigned j) override {
    if (early_) return fallback_.subphase_color(snap, b, s, i, j);
    return AdversaryStrategy::subphase_color(snap, b, s, i, j);
  }

  void step(const AdversarySnapshot& snap, NodeState& b, std::span<const Token> inbox,
            const RoundContext& ctx, const NodeEnvironment& env,
            std::vector<Envelope>& outbox) override {
    if (early_) return fallback_.step(snap, b, inbox, ctx, env, outbox);
    AdversaryStrategy::step(snap, b, inbox, ctx, env, outbox);
    if (ctx.round != t_ || t_ > ctx.phase) return;
    const auto& chain = chains_[env.self];
    Token tok;
    tok.color = Color{magnitude_.value(snap.n())};
    tok.phase = static_cast<std::uint16_t>(ctx.phase);
    tok.subphase = static_cast<std::uint16_t>(ctx.subphase);
    tok.hop = static_cast<std::uint16_t>(t_);
    tok.from = b.id;
    tok.predecessor = chain.size() > 1 ? snap.h().id(chain[1]) : b.id;
    for (NodeIndex p : env.ports) outbox.push_back({env.self, p, tok});
  }

  std::optional<NodeId> answer(const AdversarySnapshot& snap, const NodeState& target,
                               std::span<const NodeId> port_ids,
                               const ProvenanceQuery& q) override {
    if (!early_ && q.color.value == magnitude_.value(snap.n())) {
      auto it = fakes_.find(Key{q.target.value, q.round, q.recipient.value});
      if (it != fakes_.end()) return it->second;
    }
    return AdversaryStrategy::answer(snap, target, port_ids, q);
  }

 private:
  using Key = std::tuple<std::uint64_t, unsigned, std::uint64_t>;  // target, round, recipient
  unsigned t_;
  MagnitudeRule magnitude_;
  MaxInjector fallback_;
  unsigned k_ = 0;
  bool early_ = false;
  std::vector<std::vector<NodeIndex>> chains_;
  std::map<Key, NodeId> fakes_;
};

// Hides a real neighbour u of b from a target v that can hear u, and lists a
// fake neighbour in its place.
class TopologyLiar final : public AdversaryStrategy {
 public:
  explicit TopologyLiar(TargetSelection sel) : sel_(sel) {}
  std::string name() const override { return "topology_liar"; }

  void prepare(const AdversarySnapshot& snap) override {
    lies_.clear();
    const Topology& t = *snap.topology;
    const NodeSet& byz = *snap.byzantine;
    for (NodeIndex b : byz.members()) {
      for (NodeIndex v : t.g_neighbors(b)) {
        if (byz.contains(v)) continue;
        auto lie = make_lie(snap, b, v);
        if (!lie) continue;
        lies_.emplace(std::pair{b, v}, std::move(*lie));
        if (sel_ == TargetSelection::single) break;
      }
    }
  }

  std::optional<NeighborReport> report(const AdversarySnapshot& snap, NodeIndex reporter,
                                       NodeIndex recipient) override {
    auto it = lies_.find({reporter, recipient});
    if (it != lies_.end()) return it->second;
    return AdversaryStrategy::report(snap, reporter, recipient);
  }

 private:
  std::optional<NeighborReport> make_lie(const AdversarySnapshot& snap, NodeIndex b,
                                         NodeIndex v) const {
    const Topology& t = *snap.topology;
    const HMultigraph& h = t.h();
    const NodeSet& byz = *snap.byzantine;
    auto hears = [&](NodeIndex x) { return x == v || t.g_adjacent(v, x); };

    std::optional<NodeIndex> hidden;
    for (bool want_honest : {true, false})
      for (NodeIndex u : h.neighbors(b))
        if (!hidden && u != v && hears(u) && byz.contains(u) != want_honest) hidden = u;
    if (!hidden) return std::nullopt;

    std::optional<NodeIndex> fake;
    for (bool want_byz : {true, false})
      for (NodeIndex x : t.g_neighbors(v))
        if (!fake && x != b && x != *hidden && !h.adjacent(b, x) && byz.contains(x) == want_byz)
          fake = x;
    if (!fake) return std::nullopt;

    NeighborReport r = truthful_report(h, b);
    auto& list = r.claims.front().neighbors;
    *std::find(list.begin(), list.end(), h.id(*hidden)) = h.id(*fake);
    return r;
  }

  TargetSelection sel_;
  std::map<std::pair<NodeIndex, NodeIndex>, NeighborReport> lies_;
};

class Composite final : public AdversaryStrategy {
 public:
  Composite(std::unique_ptr<AdversaryStrategy> setup, std::unique_ptr<AdversaryStrategy> rounds)
      : setup_(std::move(setup)), rounds_(std::move(rounds)) {}
  std::string name() const override { return setup_->name() + "+" + rounds_->name(); }
  void prepare(const AdversarySnapshot& snap) override {
    setup_->prepare(snap);
    rounds_->prepare(snap);
  }
  std::optional<NeighborReport> report(const AdversarySnapshot& snap, NodeIndex reporter,
                                       NodeIndex recipient) override {
    return setup_->report(snap, reporter, recipient);
  }
  Color subphase_color(const AdversarySnapshot& snap, NodeIndex b, const NodeState& s, unsigned i,
                       unsigned j) override {
    return rounds_->subphase_color(snap, b, s, i, j);
  }
  void step(const AdversarySnapshot& snap, NodeState& b, std::span<const Token> inbox,
            const RoundContext& ctx, const NodeEnvironment& env,
            std::vector<Envelope>& outbox) override {
    rounds_->step(snap, b, inbox, ctx, env, outbox);
  }
  std::optional<NodeId> answer(const AdversarySnapshot& snap, const NodeState& target,
                               std::span<const NodeId> port_ids,
                               const ProvenanceQuery& q) override {
    return rounds_->answer(snap, target, port_ids, q);
  }

 private:
  std::unique_ptr<AdversaryStrategy> setup_;
  std::unique_ptr<AdversaryStrategy> rounds_;
};

void longest_from(const HMultigraph& h, const NodeSet& byz, unsigned cap,
                  std::vector<NodeIndex>& path, std::vector<NodeIndex>& best) {
  if (path.size() > best.size()) best = path;
  if (path.size() >= cap) return;
  for (NodeIndex w : h.neighbors(path.back())) {
    if (!byz.contains(w) || std::find(path.begin(), path.end(), w) != path.end()) continue;
    path.push_back(w);
    longest_from(h, byz, cap, path, best);
    path.pop_back();
    if (best.size() >= cap) return;
  }
}

const char* const kBaseNames[] = {"honest_mimic", "max_injector", "late_injector",
                                  "topology_liar", "silent"};

bool known_base(const std::string& name) {
  return std::find(std::begin(kBaseNames), std::end(kBaseNames), name) != std::end(kBaseNames);
}

std::unique_ptr<AdversaryStrategy> make_base(const std::string& name, const StrategySpec& spec,
                                             unsigned k) {
  MagnitudeRule m{spec.magnitude};
  if (name == "honest_mimic") return strategy_honest_mimic();
  if (name == "max_injector") return strategy_max_injector(m);
  if (name == "late_injector")
    return strategy_late_injector(spec.inject_round == 0 ? k : spec.inject_round, m);
  if (name == "topology_liar") return strategy_topology_liar(spec.targets);
  if (name == "silent") return strategy_silent();
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

}  // namespace

std::vector<NodeIndex> longest_byzantine_path_from(const HMultigraph& h, const NodeSet& byz,
                                                   NodeIndex b, unsigned cap) {
  std::vector<NodeIndex> path{b};
  std::vector<NodeIndex> best = path;
  if (cap > 1) longest_from(h, byz, cap, path, best);
  return best;
}

std::unique_ptr<AdversaryStrategy> strategy_honest_mimic() {
  return std::make_unique<HonestMimic>();
}
std::unique_ptr<AdversaryStrategy> strategy_max_injector(MagnitudeRule magnitude) {
  return std::make_unique<MaxInjector>(magnitude);
}
std::unique_ptr<AdversaryStrategy> strategy_late_injector(unsigned inject_round,
                                                          MagnitudeRule magnitude) {
  return std::make_unique<LateInjector>(inject_round, magnitude);
}
std::unique_ptr<AdversaryStrategy> strategy_topology_liar(TargetSelection targets) {
  return std::make_unique<TopologyLiar>(targets);
}
std::unique_ptr<AdversaryStrategy> strategy_silent() { return std::make_unique<Silent>(); }
std::unique_ptr<AdversaryStrategy> strategy_composite(std::unique_ptr<AdversaryStrategy> setup,
                                                      std::unique_ptr<AdversaryStrategy> rounds) {
  return std::make_unique<Composite>(std::move(setup), std::move(rounds));
}

bool known_strategy(const std::string& name) {
  if (name == "none") return true;
  const auto plus = name.find('+');
  if (plus == std::string::npos) return known_base(name);
  return known_base(name.substr(0, plus)) && known_base(name.substr(plus + 1));
}

bool places_byzantine(const StrategySpec& spec) { return spec.name != "none"; }

std::unique_ptr<AdversaryStrategy> make_strategy(const StrategySpec& spec, unsigned k) {
  if (!known_strategy(spec.name)) throw std::invalid_argument("unknown strategy '" + spec.name + "'");
  if (spec.name == "none") return strategy_honest_mimic();
  const auto plus = spec.name.find('+');
  if (plus == std::string::npos) return make_base(spec.name, spec, k);
  return strategy_composite(make_base(spec.name.substr(0, plus), spec, k),
                            make_base(spec.name.substr(plus + 1), spec, k));
}

}  // namespace byzcount
