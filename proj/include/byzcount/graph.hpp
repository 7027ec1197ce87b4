#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "byzcount/types.hpp"

namespace byzcount {

// One H edge. `cycle` is the 1-based index of the Hamiltonian cycle that
// contributed it (0 for hand-built fixtures that have no cycle structure).
struct HEdge {
  NodeIndex u = 0;
  NodeIndex v = 0;
  std::uint32_t cycle = 0;

  friend bool operator==(const HEdge&, const HEdge&) = default;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Port-labelled multigraph H. Parallel edges are kept in the incidence lists;
// `neighbors()` gives the collapsed, sorted simple neighbourhood used for
// distances and message routing.
class HMultigraph {
 public:
  HMultigraph() = default;

  // Builds from an explicit edge list. `d` is the nominal degree the protocol
  // assumes; regularity is not enforced here (see is_regular()).
  static HMultigraph from_edges(std::size_t n, unsigned d, std::vector<HEdge> edges,
                                std::uint64_t seed = 0);

  std::size_t size() const { return ids_.size(); }
  unsigned degree() const { return d_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<HEdge>& edges() const { return edges_; }

  // Incident edge endpoints with multiplicity, in port order.
  std::span<const NodeIndex> incident(NodeIndex v) const {
    return {inc_.data() + inc_off_[v], inc_.data() + inc_off_[v + 1]};
  }
  std::span<const std::uint32_t> incident_cycles(NodeIndex v) const {
    return {inc_cycle_.data() + inc_off_[v], inc_cycle_.data() + inc_off_[v + 1]};
  }
  std::span<const NodeIndex> neighbors(NodeIndex v) const {
    return {nbr_.data() + nbr_off_[v], nbr_.data() + nbr_off_[v + 1]};
  }
  bool adjacent(NodeIndex u, NodeIndex v) const;

  NodeId id(NodeIndex v) const { return ids_[v]; }
  std::span<const NodeId> ids() const { return ids_; }
  std::optional<NodeIndex> index_of(NodeId id) const;

 private:
  unsigned d_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<HEdge> edges_;
  std::vector<std::size_t> inc_off_;
  std::vector<NodeIndex> inc_;
  std::vector<std::uint32_t> inc_cycle_;
  std::vector<std::size_t> nbr_off_;
  std::vector<NodeIndex> nbr_;
  std::vector<NodeId> ids_;
  std::unordered_map<NodeId, NodeIndex> index_;
};

// Union of d/2 independent uniformly random Hamiltonian cycles on n nodes.
HMultigraph generate_h_graph(std::size_t n, unsigned d, std::uint64_t seed);

// n distinct identifiers drawn uniformly from the full 64-bit space.
std::vector<NodeId> draw_node_ids(std::size_t n, std::uint64_t seed);

// ceil(d/3)
constexpr unsigned lattice_radius(unsigned d) { return (d + 2) / 3; }

// G = H ∪ L where L joins every pair at H-distance in [1, k].
class Topology {
 public:
  Topology() = default;
  Topology(HMultigraph h, unsigned k);

  const HMultigraph& h() const { return h_; }
  unsigned k() const { return k_; }
  std::size_t size() const { return h_.size(); }

  // Sorted G-neighbours (== B_H(v,k) \ {v}).
  std::span<const NodeIndex> g_neighbors(NodeIndex v) const {
    return {l_.data() + l_off_[v], l_.data() + l_off_[v + 1]};
  }
  bool g_adjacent(NodeIndex u, NodeIndex v) const;

 private:
  HMultigraph h_;
  unsigned k_ = 0;
  std::vector<std::size_t> l_off_;
  std::vector<NodeIndex> l_;
};

Topology augment_small_world(HMultigraph h);
Topology augment_small_world(HMultigraph h, unsigned k_override);

// Sorted {w : dist_H(v,w) <= r}.
std::vector<NodeIndex> ball(const HMultigraph& g, NodeIndex v, unsigned r);
// Sorted {w : dist_H(v,w) == r}.
std::vector<NodeIndex> boundary(const HMultigraph& g, NodeIndex v, unsigned r);

// Single-source H distances, -1 for nodes beyond `max_radius`.
std::vector<int> h_distances(const HMultigraph& g, NodeIndex source, int max_radius = -1);

// Size of a radius-r ball in the infinite d-regular tree: 1 + d * sum (d-1)^(j-1).
std::size_t tree_ball_size(unsigned d, unsigned r);

bool is_locally_tree_like(const HMultigraph& g, NodeIndex w, unsigned r);

// Fraction of nodes that are not locally tree-like at radius r.
double non_tree_like_fraction(const HMultigraph& g, unsigned r);

bool is_regular(const HMultigraph& g);
// Every cycle label 1..d/2 induces a single Hamiltonian cycle.
bool has_hamiltonian_decomposition(const HMultigraph& g);
// Number of unordered node pairs joined by more than one edge.
std::size_t parallel_edge_pairs(const HMultigraph& g);

struct NodeClassification {
  NodeSet byz;
  NodeSet honest;
  NodeSet ltl;
  NodeSet nlt;
  NodeSet unsafe;
  NodeSet safe;
  NodeSet bad;
  NodeSet bus;
  NodeSet byz_safe;
  unsigned a_radius = 0;
  unsigned tree_radius = 0;
};

// max(1, floor(log2 n / (10 log2 d)))
unsigned default_tree_radius(std::size_t n, unsigned d);
// floor(a log2 n) with a = delta / (10 k log2(d-1)); 0 at any practical n
unsigned default_a_radius(std::size_t n, unsigned d, double delta);

// Node categories. Unsafe/BUS use G-distances; tree-likeness uses H-balls.
NodeClassification classify_nodes(const Topology& t, const NodeSet& byz, unsigned a_radius,
                                  unsigned tree_radius);
NodeClassification classify_nodes(const Topology& t, const NodeSet& byz, unsigned a_radius);

// floor(n^(1-delta))
std::size_t byzantine_count(std::size_t n, double delta);
NodeSet place_byzantine(std::size_t n, double delta, std::uint64_t seed);

// Node count of the longest simple H-path whose vertices are all Byzantine,
// saturating at `cap` (default k + 2).
unsigned longest_byzantine_chain(const HMultigraph& h, const NodeSet& byz, unsigned cap);
unsigned longest_byzantine_chain(const HMultigraph& h, const NodeSet& byz);

// Text format: header "n d k seed", then one "u v cycle" line per H edge.
void write_graph(std::ostream& out, const HMultigraph& h, unsigned k);
struct LoadedGraph {
  HMultigraph h;
  unsigned k = 0;
};
LoadedGraph read_graph(std::istream& in);

}  // namespace byzcount
