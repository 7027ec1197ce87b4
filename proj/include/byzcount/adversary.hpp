#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "byzcount/graph.hpp"
#include "byzcount/protocol.hpp"

namespace byzcount {

// The color node v draws in subphase j of phase i. Anyone holding the
// protocol seed can replay it, which is exactly the adversary's privilege.
Color scheduled_color(std::uint64_t protocol_seed, NodeIndex v, unsigned i, unsigned j);

// Read-only picture of the whole run handed to adversary policies.
struct AdversarySnapshot {
  const Topology* topology = nullptr;
  const NodeSet* byzantine = nullptr;
  std::span<const NodeState> states;
  // Honest emissions of the current round, already fixed.
  std::span<const Envelope> honest_outbox;
  RoundContext ctx;
  std::uint64_t protocol_seed = 0;

  std::size_t n() const { return topology->size(); }
  const HMultigraph& h() const { return topology->h(); }
  Color future_color(NodeIndex v, unsigned i, unsigned j) const {
    return scheduled_color(protocol_seed, v, i, j);
  }
};

// What node `v` truthfully reports about itself during setup.
NeighborReport truthful_report(const HMultigraph& h, NodeIndex v);

// Every hook defaults to the honest behaviour, so a strategy only overrides
// what it wants to corrupt.
class AdversaryStrategy {
 public:
  virtual ~AdversaryStrategy() = default;
  virtual std::string name() const = 0;

  // Called once with ground truth before setup.
  virtual void prepare(const AdversarySnapshot&) {}

  // Setup message from Byzantine `reporter` to `recipient`; nothing = silence.
  virtual std::optional<NeighborReport> report(const AdversarySnapshot& snap, NodeIndex reporter,
                                               NodeIndex recipient);

  // Color Byzantine node `b` starts subphase (i, j) with; empty = none.
  virtual Color subphase_color(const AdversarySnapshot& snap, NodeIndex b, const NodeState& state,
                               unsigned i, unsigned j);

  // One subphase tick for Byzantine node `b`, same contract as honest_node_step.
  virtual void step(const AdversarySnapshot& snap, NodeState& b, std::span<const Token> inbox,
                    const RoundContext& ctx, const NodeEnvironment& env,
                    std::vector<Envelope>& outbox);

  // Answer to a provenance query addressed to Byzantine node `target`.
  virtual std::optional<NodeId> answer(const AdversarySnapshot& snap, const NodeState& target,
                                       std::span<const NodeId> port_ids, const ProvenanceQuery& q);
};

// Thin dispatch so the engine treats Byzantine nodes like honest ones.
inline void byzantine_node_step(AdversaryStrategy& strategy, const AdversarySnapshot& snap,
                                NodeState& b, std::span<const Token> inbox,
                                const RoundContext& ctx, const NodeEnvironment& env,
                                std::vector<Envelope>& outbox) {
  strategy.step(snap, b, inbox, ctx, env, outbox);
}

// ceil(4 log2 n) + 10 unless fixed.
struct MagnitudeRule {
  std::optional<unsigned> fixed;
  unsigned value(std::size_t n) const;
};

enum class TargetSelection { single, all };

std::unique_ptr<AdversaryStrategy> strategy_honest_mimic();
std::unique_ptr<AdversaryStrategy> strategy_max_injector(MagnitudeRule magnitude = {});
// inject_round below k falls back to the max injector.
std::unique_ptr<AdversaryStrategy> strategy_late_injector(unsigned inject_round,
                                                          MagnitudeRule magnitude = {});
std::unique_ptr<AdversaryStrategy> strategy_topology_liar(
    TargetSelection targets = TargetSelection::single);
std::unique_ptr<AdversaryStrategy> strategy_silent();
// Setup behaviour from `setup`, everything after from `rounds`.
std::unique_ptr<AdversaryStrategy> strategy_composite(std::unique_ptr<AdversaryStrategy> setup,
                                                      std::unique_ptr<AdversaryStrategy> rounds);

struct StrategySpec {
  // honest_mimic, max_injector, late_injector, topology_liar, silent, none, or
  // two of them joined by '+' (setup part first).
  std::string name = "none";
  std::optional<unsigned> magnitude;
  unsigned inject_round = 0;  // 0: k
  TargetSelection targets = TargetSelection::single;

  friend bool operator==(const StrategySpec&, const StrategySpec&) = default;
};

bool known_strategy(const std::string& name);
// "none" places no Byzantine nodes at all.
bool places_byzantine(const StrategySpec& spec);
std::unique_ptr<AdversaryStrategy> make_strategy(const StrategySpec& spec, unsigned k);

// Longest simple all-Byzantine H-path starting at b (b first), at most `cap`
// nodes.
std::vector<NodeIndex> longest_byzantine_path_from(const HMultigraph& h, const NodeSet& byz,
                                                   NodeIndex b, unsigned cap);

}  // namespace byzcount
