#pragma once

#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "byzcount/adversary.hpp"
#include "byzcount/graph.hpp"
#include "byzcount/protocol.hpp"

namespace fixtures {

using namespace byzcount;

inline HMultigraph ring(std::size_t n, unsigned d_nominal = 2) {
  std::vector<HEdge> edges;
  for (std::size_t i = 0; i < n; ++i)
    edges.push_back({static_cast<NodeIndex>(i), static_cast<NodeIndex>((i + 1) % n), 1});
  return HMultigraph::from_edges(n, d_nominal, edges, 5);
}

inline HMultigraph path(std::size_t n, unsigned d_nominal = 2) {
  std::vector<HEdge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i)
    edges.push_back({static_cast<NodeIndex>(i), static_cast<NodeIndex>(i + 1), 1});
  return HMultigraph::from_edges(n, d_nominal, edges, 5);
}

inline LocalKnowledge knowledge(const Topology& t, NodeIndex v) {
  const HMultigraph& h = t.h();
  LocalKnowledge k;
  k.self = h.id(v);
  for (NodeIndex w : h.incident(v)) k.h_ports.push_back(h.id(w));
  for (NodeIndex w : t.g_neighbors(v)) k.g_neighbors.push_back(h.id(w));
  k.d = h.degree();
  k.k = t.k();
  return k;
}

inline std::vector<NeighborReport> truthful_reports(const Topology& t, NodeIndex v) {
  std::vector<NeighborReport> out;
  for (NodeIndex w : t.g_neighbors(v)) out.push_back(truthful_report(t.h(), w));
  return out;
}

inline std::vector<const NeighborReport*> pointers(const std::vector<NeighborReport>& r) {
  std::vector<const NeighborReport*> out;
  for (const auto& x : r) out.push_back(&x);
  return out;
}

// Scripted answers keyed by (target, round, recipient); anything else is a denial.
class MapOracle : public ProvenanceOracle {
 public:
  void set(NodeId target, unsigned round, NodeId recipient, NodeId pred) {
    answers_[{target.value, round, recipient.value}] = pred;
  }
  std::optional<NodeId> query(const ProvenanceQuery& q) override {
    ++queries;
    auto it = answers_.find({q.target.value, q.round, q.recipient.value});
    if (it == answers_.end()) return std::nullopt;
    return it->second;
  }
  unsigned queries = 0;

 private:
  std::map<std::tuple<std::uint64_t, unsigned, std::uint64_t>, NodeId> answers_;
};

}  // namespace fixtures
