#include <algorithm>
#include <string>
#include <unordered_set>

#include "byzcount/protocol.hpp"

namespace byzcount {

namespace {

std::string hex(NodeId id) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) s[15 - i] = digits[(id.value >> (4 * i)) & 0xF];
  return s;
}

// Claims flattened into one array; each record points at its sorted list.
struct ClaimTable {
  struct Record {
    NodeId node;
    std::uint32_t offset = 0;
    std::uint32_t count = 0;
  };
  std::vector<Record> records;
  std::vector<NodeId> lists;

  void add(NodeId node, std::span<const NodeId> neighbors) {
    const auto offset = static_cast<std::uint32_t>(lists.size());
    lists.insert(lists.end(), neighbors.begin(), neighbors.end());
    std::sort(lists.begin() + offset, lists.end());
    records.push_back({node, offset, static_cast<std::uint32_t>(neighbors.size())});
  }

  std::span<const NodeId> list(const Record& r) const { return {lists.data() + r.offset, r.count}; }

  const Record* find(NodeId x) const {
    auto it = std::lower_bound(records.begin(), records.end(), x,
                               [](const Record& r, NodeId id) { return r.node < id; });
    return (it != records.end() && it->node == x) ? &*it : nullptr;
  }
};

}  // namespace

class ViewBuilder {
 public:
  static LocalView build(NodeId self, unsigned k, const ClaimTable& table,
                         const std::vector<std::pair<NodeId, unsigned>>& depths) {
    LocalView v;
    v.self_ = self;
    v.k_ = k;
    v.entries_.reserve(depths.size());
    for (const auto& [id, depth] : depths) {
      LocalView::Entry e{id, depth, 0, 0};
      if (depth < k) {
        if (const auto* rec = table.find(id)) {
          auto list = table.list(*rec);
          e.offset = static_cast<std::uint32_t>(v.adj_.size());
          e.count = static_cast<std::uint32_t>(list.size());
          v.adj_.insert(v.adj_.end(), list.begin(), list.end());
        }
      }
      v.entries_.push_back(e);
    }
    std::sort(v.entries_.begin(), v.entries_.end(),
              [](const LocalView::Entry& a, const LocalView::Entry& b) { return a.id < b.id; });
    return v;
  }
};

const LocalView::Entry* LocalView::find(NodeId x) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), x,
                             [](const Entry& e, NodeId id) { return e.id < id; });
  return (it != entries_.end() && it->id == x) ? &*it : nullptr;
}

std::optional<unsigned> LocalView::depth(NodeId x) const {
  const Entry* e = find(x);
  if (e == nullptr) return std::nullopt;
  return e->depth;
}

std::span<const NodeId> LocalView::adjacency(NodeId x) const {
  const Entry* e = find(x);
  if (e == nullptr) return {};
  return {adj_.data() + e->offset, e->count};
}

bool LocalView::h_adjacent(NodeId a, NodeId b) const {
  for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
    auto list = adjacency(x);
    if (!list.empty()) return std::binary_search(list.begin(), list.end(), y);
  }
  return false;
}

std::vector<NodeId> LocalView::members() const {
  std::vector<NodeId> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) out.push_back(e.id);
  return out;
}

Reconstruction reconstruct_local_topology(const LocalKnowledge& self,
                                          std::span<const NeighborReport* const> reports) {
  ClaimTable table;
  if (self.h_ports.size() != self.d)
    return ReconstructionConflict{"own adjacency does not have d entries"};
  table.add(self.self, self.h_ports);
  for (const NeighborReport* r : reports) {
    if (r == nullptr) continue;
    for (const AdjacencyClaim& c : r->claims) {
      if (c.neighbors.size() != self.d)
        return ReconstructionConflict{"claim about " + hex(c.node) + " from " + hex(r->reporter) +
                                      " does not have d entries"};
      table.add(c.node, c.neighbors);
    }
  }

  // Sort by node, then require every claim about one node to agree.
  std::stable_sort(table.records.begin(), table.records.end(),
                   [](const auto& a, const auto& b) { return a.node < b.node; });
  std::vector<ClaimTable::Record> unique;
  unique.reserve(table.records.size());
  for (const auto& rec : table.records) {
    if (!unique.empty() && unique.back().node == rec.node) {
      auto a = table.list(unique.back());
      auto b = table.list(rec);
      if (!std::equal(a.begin(), a.end(), b.begin(), b.end()))
        return ReconstructionConflict{"contradictory claims about " + hex(rec.node)};
      continue;
    }
    unique.push_back(rec);
  }
  table.records.swap(unique);

  // Edge multiplicities must be symmetric between any two claimed nodes.
  for (const auto& rec : table.records) {
    auto list = table.list(rec);
    for (std::size_t a = 0; a < list.size();) {
      const NodeId y = list[a];
      std::size_t b = a;
      while (b < list.size() && list[b] == y) ++b;
      if (const auto* other = table.find(y)) {
        auto back = table.list(*other);
        const auto mult = std::count(back.begin(), back.end(), rec.node);
        if (mult != static_cast<std::ptrdiff_t>(b - a))
          return ReconstructionConflict{hex(rec.node) + " claims an edge to " + hex(y) +
                                        " that " + hex(y) + " does not confirm"};
      }
      a = b;
    }
  }

  std::vector<NodeId> g_sorted = self.g_neighbors;
  std::sort(g_sorted.begin(), g_sorted.end());

  std::vector<std::pair<NodeId, unsigned>> depths{{self.self, 0}};
  std::unordered_set<NodeId> seen{self.self};
  seen.reserve(4 * g_sorted.size() + 16);
  std::vector<NodeId> frontier{self.self};
  for (unsigned depth = 1; depth <= self.k && !frontier.empty(); ++depth) {
    std::vector<NodeId> next;
    for (NodeId u : frontier) {
      const auto* rec = table.find(u);
      if (rec == nullptr) continue;
      for (NodeId w : table.list(*rec)) {
        if (seen.contains(w)) continue;
        if (!std::binary_search(g_sorted.begin(), g_sorted.end(), w))
          return ReconstructionConflict{"claimed node " + hex(w) + " at distance " +
                                        std::to_string(depth) + " is not a direct neighbour"};
        seen.insert(w);
        depths.emplace_back(w, depth);
        next.push_back(w);
      }
    }
    frontier.swap(next);
  }
  return ViewBuilder::build(self.self, self.k, table, depths);
}

bool verify_color_provenance(const LocalView& view, const Token& token, unsigned k,
                             ProvenanceOracle& oracle) {
  const unsigned t = token.hop;
  if (t == 0 || k == 0) return false;
  const unsigned depth = std::min(t, k) - 1;
  NodeId cur = token.from;
  NodeId pred = token.predecessor;
  unsigned round = t;
  std::vector<NodeId> chain{cur};
  for (unsigned s = 0;; ++s) {
    if (pred == cur) return round == 1;
    if (round == 1 || s == depth) return round != 1;
    if (!view.h_adjacent(cur, pred)) return false;
    if (std::find(chain.begin(), chain.end(), pred) != chain.end()) return false;
    chain.push_back(pred);
    auto answer = oracle.query({view.self(), pred, token.color, round - 1, cur});
    if (!answer) return false;
    cur = pred;
    pred = *answer;
    --round;
  }
}

}  // namespace byzcount
