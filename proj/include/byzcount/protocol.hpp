#pragma once

#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "byzcount/types.hpp"

namespace byzcount {

// Geometric(1/2): the index of the first heads in a run of fair coin flips.
template <std::uniform_random_bit_generator G>
Color draw_color(G& rng) {
  using R = typename G::result_type;
  static_assert(G::min() == 0 && G::max() == std::numeric_limits<R>::max(),
                "draw_color needs a generator producing full-width words");
  std::uint32_t flips = 0;
  for (;;) {
    const R word = rng();
    if (word != 0) return Color{flips + static_cast<std::uint32_t>(std::countr_zero(word)) + 1};
    flips += std::numeric_limits<R>::digits;
  }
}

enum class AlphaVariant { pseudocode, prose };

// Number of subphases in phase i. Both variants switch to
// ceil(1 + (i+1)/log(1/eps)) once d(d-1)^(i-2) > 2/eps; below that the
// pseudocode uses ceil((log(1/eps)+i+1) / (log d + (i-2)log(d-1) - 1)) and the
// prose ceil((log(1/eps)+i+1-log d) / ((i-2)log(d-1))). Denominators and the
// result are clamped to at least 1.
unsigned alpha_subphases(unsigned i, double epsilon, unsigned d,
                         AlphaVariant variant = AlphaVariant::pseudocode);

// l - log2(l) with l = log2(d (d-1)^(i-1)).
double continuation_threshold(unsigned i, unsigned d);

// How many subphases a phase actually runs: multiplier * alpha_i, times i
// when `times_phase` is set.
struct SubphaseFactor {
  unsigned multiplier = 1;
  bool times_phase = false;

  friend bool operator==(const SubphaseFactor&, const SubphaseFactor&) = default;
};

struct PhaseParams {
  unsigned i = 0;
  unsigned alpha = 0;
  unsigned subphases = 0;
  double threshold = 0.0;
  unsigned rounds_per_subphase = 0;
};

PhaseParams make_phase_params(unsigned i, double epsilon, unsigned d,
                              AlphaVariant variant = AlphaVariant::pseudocode,
                              SubphaseFactor factor = {});

// A flooded color. `from` is the H-neighbour that sent it; `predecessor` is
// who `from` claims to have received it from, or `from` itself when it
// originated the color.
struct Token {
  Color color;
  std::uint16_t phase = 0;
  std::uint16_t subphase = 0;
  std::uint16_t hop = 0;
  NodeId from;
  NodeId predecessor;

  bool originated() const { return predecessor == from; }
  friend bool operator==(const Token&, const Token&) = default;
};

// Wire layout: two IDs plus 8 bits of color and 16 bits each of phase,
// subphase and hop.
constexpr unsigned kTokenAuxBits = 8 + 16 + 16 + 16;
bool fits_wire(const Token& t);
std::uint64_t pack_aux(const Token& t);
Token unpack_token(std::uint64_t aux, NodeId from, NodeId predecessor);

// Synchronized clock shared by all nodes. Within a subphase of phase i,
// rounds 1..i are flooding rounds and round i + 1 is the closing tick in
// which the last round's tokens are absorbed and the criterion evaluated.
struct RoundContext {
  std::uint64_t global_round = 0;
  unsigned phase = 0;
  unsigned subphase = 0;
  unsigned round = 0;
  bool setup = false;
};

struct Envelope {
  NodeIndex sender = 0;
  NodeIndex to = 0;
  Token token;
};

// "Did you send `color` to `recipient` in `round` of this subphase, and from
// whom did you get it?"
struct ProvenanceQuery {
  NodeId asker;
  NodeId target;
  Color color;
  unsigned round = 0;
  NodeId recipient;
};

class ProvenanceOracle {
 public:
  virtual ~ProvenanceOracle() = default;
  // The target's claimed predecessor, or nothing for a denial or silence.
  virtual std::optional<NodeId> query(const ProvenanceQuery& q) = 0;
};

struct AdjacencyClaim {
  NodeId node;
  std::vector<NodeId> neighbors;  // with multiplicity
};

struct NeighborReport {
  NodeId reporter;
  std::vector<AdjacencyClaim> claims;
};

// What a node knows first-hand before any report arrives.
struct LocalKnowledge {
  NodeId self;
  std::vector<NodeId> h_ports;      // own H adjacency, with multiplicity
  std::vector<NodeId> g_neighbors;  // everyone it has a direct link to
  unsigned d = 0;
  unsigned k = 0;
};

// Reconstructed B_H(self, k): depths for every member, claimed adjacency for
// members at depth < k.
class LocalView {
 public:
  NodeId self() const { return self_; }
  unsigned radius() const { return k_; }
  std::size_t size() const { return entries_.size(); }

  std::optional<unsigned> depth(NodeId x) const;
  bool contains(NodeId x) const { return depth(x).has_value(); }
  std::span<const NodeId> adjacency(NodeId x) const;
  bool h_adjacent(NodeId a, NodeId b) const;
  std::vector<NodeId> members() const;

 private:
  struct Entry {
    NodeId id;
    unsigned depth = 0;
    std::uint32_t offset = 0;
    std::uint32_t count = 0;
  };
  const Entry* find(NodeId x) const;

  NodeId self_;
  unsigned k_ = 0;
  std::vector<Entry> entries_;  // sorted by id
  std::vector<NodeId> adj_;

  friend class ViewBuilder;
};

struct ReconstructionConflict {
  std::string reason;
};

using Reconstruction = std::variant<LocalView, ReconstructionConflict>;

// Merges adjacency reports into a view of B_H(self, k). Any of the following
// is a conflict: two different claims about the same node; a claim without
// exactly d entries; x listing y a different number of times than y lists x;
// a claimed member of B_H(self, k) that is not a direct neighbour in G.
// Missing reports are not conflicts; the view simply stops there.
Reconstruction reconstruct_local_topology(const LocalKnowledge& self,
                                          std::span<const NeighborReport* const> reports);

// Walks the token's predecessor chain back min(t, k) - 1 hops, one query per
// hop. Every hop must be an H edge in `view`, chain nodes must be distinct,
// every queried node must confirm, and when the walk reaches round 1 the last
// node must claim to have originated the color.
bool verify_color_provenance(const LocalView& view, const Token& token, unsigned k,
                             ProvenanceOracle& oracle);

struct SendRecord {
  Color color;
  NodeId predecessor;
};

struct NodeState {
  NodeId id;
  unsigned phase = 0;
  unsigned subphase = 0;
  unsigned round = 0;
  std::vector<Color> k_values;  // k_values[t - 1] is k_t
  bool flag_terminate = true;
  std::optional<unsigned> decided;
  bool active = true;
  bool crashed = false;
  std::optional<LocalView> local_view;
  std::string crash_reason;

  Color own_color;
  Color running_max;
  NodeId running_from;
  Color last_forwarded;
  std::vector<std::optional<SendRecord>> sent;  // sent[t - 1], this subphase

  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  std::uint64_t malformed = 0;
};

class TokenObserver {
 public:
  virtual ~TokenObserver() = default;
  virtual void observe(NodeIndex receiver, const Token& token, bool accepted) = 0;
};

// Per-node wiring supplied by the engine. `ports` are the distinct
// H-neighbours; `port_ids` their IDs in the same order.
struct NodeEnvironment {
  NodeIndex self = 0;
  std::span<const NodeIndex> ports;
  std::span<const NodeId> port_ids;
  unsigned k = 0;
  double threshold = 0.0;
  ProvenanceOracle* verifier = nullptr;  // null: accept without checking
  TokenObserver* observer = nullptr;
};

void begin_phase(NodeState& s, unsigned i);
// `color` is used only if the node is still active.
void begin_subphase(NodeState& s, unsigned i, unsigned j, Color color);
// One tick of the subphase clock (see RoundContext): absorbs the tokens sent
// to this node in round ctx.round - 1, then emits round ctx.round, or on the
// closing tick evaluates the continuation criterion.
void honest_node_step(NodeState& s, std::span<const Token> inbox, const RoundContext& ctx,
                      const NodeEnvironment& env, std::vector<Envelope>& outbox);
void end_phase(NodeState& s);

// The continuation test on a full set of per-round maxima k_1..k_i.
bool keeps_going(std::span<const Color> k_values, double threshold);

// Truthful answer from a node's own send log; nothing if crashed.
std::optional<NodeId> answer_provenance_query(const NodeState& s, std::span<const NodeId> port_ids,
                                              const ProvenanceQuery& q);

}  // namespace byzcount
