#include "byzcount/graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>

#include "byzcount/rng.hpp"
#include "random_util.hpp"

namespace byzcount {

HMultigraph HMultigraph::from_edges(std::size_t n, unsigned d, std::vector<HEdge> edges,
                                    std::uint64_t seed) {
  HMultigraph g;
  g.d_ = d;
  g.seed_ = seed;
  for (const HEdge& e : edges) {
    if (e.u >= n || e.v >= n) throw std::invalid_argument("edge endpoint out of range");
    if (e.u == e.v) throw std::invalid_argument("self-loops are not allowed in H");
  }
  g.edges_ = std::move(edges);

  std::vector<std::size_t> deg(n, 0);
  for (const HEdge& e : g.edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  g.inc_off_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) g.inc_off_[v + 1] = g.inc_off_[v] + deg[v];
  g.inc_.resize(g.inc_off_[n]);
  g.inc_cycle_.resize(g.inc_off_[n]);
  std::vector<std::size_t> fill(g.inc_off_.begin(), g.inc_off_.end() - 1);
  for (const HEdge& e : g.edges_) {
    g.inc_[fill[e.u]] = e.v;
    g.inc_cycle_[fill[e.u]++] = e.cycle;
    g.inc_[fill[e.v]] = e.u;
    g.inc_cycle_[fill[e.v]++] = e.cycle;
  }

  g.nbr_off_.assign(n + 1, 0);
  g.nbr_.reserve(g.inc_.size());
  std::vector<NodeIndex> scratch;
  for (std::size_t v = 0; v < n; ++v) {
    auto inc = g.incident(static_cast<NodeIndex>(v));
    scratch.assign(inc.begin(), inc.end());
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    g.nbr_.insert(g.nbr_.end(), scratch.begin(), scratch.end());
    g.nbr_off_[v + 1] = g.nbr_.size();
  }

  g.ids_ = draw_node_ids(n, seed);
  g.index_.reserve(n);
  for (std::size_t v = 0; v < n; ++v) g.index_.emplace(g.ids_[v], static_cast<NodeIndex>(v));
  return g;
}

bool HMultigraph::adjacent(NodeIndex u, NodeIndex v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::optional<NodeIndex> HMultigraph::index_of(NodeId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<NodeId> draw_node_ids(std::size_t n, std::uint64_t seed) {
  StreamRng rng(derive_seed(seed, {streams::kIds}));
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(n * 2);
  std::vector<NodeId> ids;
  ids.reserve(n);
  while (ids.size() < n) {
    std::uint64_t x = rng();
    if (seen.insert(x).second) ids.push_back(NodeId{x});
  }
  return ids;
}

HMultigraph generate_h_graph(std::size_t n, unsigned d, std::uint64_t seed) {
  if (d % 2 != 0) throw std::invalid_argument("degree d must be even");
  if (d < 2) throw std::invalid_argument("degree d must be at least 2");
  if (n < 3) throw std::invalid_argument("H(n,d) needs n >= 3");

  StreamRng rng(derive_seed(seed, {streams::kGraph}));
  std::vector<HEdge> edges;
  edges.reserve(n * d / 2);
  std::vector<NodeIndex> perm(n);
  for (unsigned c = 1; c <= d / 2; ++c) {
    std::iota(perm.begin(), perm.end(), NodeIndex{0});
    detail::shuffle(perm, rng);
    for (std::size_t i = 0; i < n; ++i) edges.push_back({perm[i], perm[(i + 1) % n], c});
  }
  return HMultigraph::from_edges(n, d, std::move(edges), seed);
}

Topology::Topology(HMultigraph h, unsigned k) : h_(std::move(h)), k_(k) {
  const std::size_t n = h_.size();
  l_off_.assign(n + 1, 0);
  std::vector<int> dist(n, -1);
  std::vector<NodeIndex> frontier, next, touched;
  for (std::size_t s = 0; s < n; ++s) {
    touched.clear();
    frontier.assign(1, static_cast<NodeIndex>(s));
    dist[s] = 0;
    touched.push_back(static_cast<NodeIndex>(s));
    for (unsigned depth = 1; depth <= k_ && !frontier.empty(); ++depth) {
      next.clear();
      for (NodeIndex u : frontier)
        for (NodeIndex w : h_.neighbors(u))
          if (dist[w] < 0) {
            dist[w] = static_cast<int>(depth);
            next.push_back(w);
            touched.push_back(w);
          }
      frontier.swap(next);
    }
    std::sort(touched.begin(), touched.end());
    for (NodeIndex w : touched) {
      if (w != s) l_.push_back(w);
      dist[w] = -1;
    }
    l_off_[s + 1] = l_.size();
  }
}

bool Topology::g_adjacent(NodeIndex u, NodeIndex v) const {
  auto nb = g_neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

Topology augment_small_world(HMultigraph h) {
  const unsigned k = lattice_radius(h.degree());
  return Topology(std::move(h), k);
}

Topology augment_small_world(HMultigraph h, unsigned k_override) {
  return Topology(std::move(h), k_override);
}

std::vector<int> h_distances(const HMultigraph& g, NodeIndex source, int max_radius) {
  std::vector<int> dist(g.size(), -1);
  std::deque<NodeIndex> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    NodeIndex u = queue.front();
    queue.pop_front();
    if (max_radius >= 0 && dist[u] >= max_radius) continue;
    for (NodeIndex w : g.neighbors(u))
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
  }
  return dist;
}

namespace {

// BFS layers up to radius r, layers[j] = Bd(v, j).
std::vector<std::vector<NodeIndex>> layers(const HMultigraph& g, NodeIndex v, unsigned r) {
  std::vector<std::vector<NodeIndex>> out{{v}};
  std::unordered_set<NodeIndex> seen{v};
  for (unsigned j = 1; j <= r; ++j) {
    std::vector<NodeIndex> next;
    for (NodeIndex u : out.back())
      for (NodeIndex w : g.neighbors(u))
        if (seen.insert(w).second) next.push_back(w);
    if (next.empty()) break;
    out.push_back(std::move(next));
  }
  return out;
}

}  // namespace

std::vector<NodeIndex> ball(const HMultigraph& g, NodeIndex v, unsigned r) {
  std::vector<NodeIndex> out;
  for (auto& layer : layers(g, v, r)) out.insert(out.end(), layer.begin(), layer.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<NodeIndex> boundary(const HMultigraph& g, NodeIndex v, unsigned r) {
  auto ls = layers(g, v, r);
  if (ls.size() <= r) return {};
  std::sort(ls[r].begin(), ls[r].end());
  return ls[r];
}

std::size_t tree_ball_size(unsigned d, unsigned r) {
  std::size_t size = 1, shell = d;
  for (unsigned j = 1; j <= r; ++j) {
    size += shell;
    shell *= (d - 1);
  }
  return size;
}

bool is_locally_tree_like(const HMultigraph& g, NodeIndex w, unsigned r) {
  const auto members = ball(g, w, r);
  if (members.size() != tree_ball_size(g.degree(), r)) return false;
  // Induced multigraph on the ball is a tree iff it has |B| - 1 edges
  // (it is connected by construction).
  std::size_t endpoint_count = 0;
  for (NodeIndex u : members)
    for (NodeIndex x : g.incident(u))
      if (std::binary_search(members.begin(), members.end(), x)) ++endpoint_count;
  return endpoint_count / 2 == members.size() - 1;
}

double non_tree_like_fraction(const HMultigraph& g, unsigned r) {
  std::size_t bad = 0;
  for (std::size_t v = 0; v < g.size(); ++v)
    if (!is_locally_tree_like(g, static_cast<NodeIndex>(v), r)) ++bad;
  return static_cast<double>(bad) / static_cast<double>(g.size());
}

bool is_regular(const HMultigraph& g) {
  for (std::size_t v = 0; v < g.size(); ++v)
    if (g.incident(static_cast<NodeIndex>(v)).size() != g.degree()) return false;
  return true;
}

bool has_hamiltonian_decomposition(const HMultigraph& g) {
  const std::size_t n = g.size();
  const unsigned cycles = g.degree() / 2;
  // Per label: each node has exactly two incident endpoints and the label's
  // edges form one connected cycle through all n nodes.
  for (unsigned c = 1; c <= cycles; ++c) {
    std::vector<std::array<NodeIndex, 2>> adj(n);
    std::vector<unsigned> deg(n, 0);
    std::size_t count = 0;
    for (const HEdge& e : g.edges()) {
      if (e.cycle != c) continue;
      ++count;
      if (deg[e.u] >= 2 || deg[e.v] >= 2) return false;
      adj[e.u][deg[e.u]++] = e.v;
      adj[e.v][deg[e.v]++] = e.u;
    }
    if (count != n) return false;
    if (std::any_of(deg.begin(), deg.end(), [](unsigned x) { return x != 2; })) return false;
    NodeIndex prev = 0, cur = adj[0][0];
    std::size_t steps = 1;
    while (cur != 0 && steps <= n) {
      NodeIndex nxt = adj[cur][0] == prev ? adj[cur][1] : adj[cur][0];
      // A doubled edge inside one cycle only happens for n == 2.
      prev = cur;
      cur = nxt;
      ++steps;
    }
    if (cur != 0 || steps != n) return false;
  }
  for (const HEdge& e : g.edges())
    if (e.cycle < 1 || e.cycle > cycles) return false;
  return true;
}

std::size_t parallel_edge_pairs(const HMultigraph& g) {
  std::size_t pairs = 0;
  for (std::size_t v = 0; v < g.size(); ++v) {
    auto inc = g.incident(static_cast<NodeIndex>(v));
    auto nb = g.neighbors(static_cast<NodeIndex>(v));
    if (inc.size() == nb.size()) continue;
    for (NodeIndex w : nb)
      if (w > v && std::count(inc.begin(), inc.end(), w) > 1) ++pairs;
  }
  return pairs;
}

unsigned default_tree_radius(std::size_t n, unsigned d) {
  const double r = std::floor(std::log2(static_cast<double>(n)) / (10.0 * std::log2(d)));
  return std::max(1u, static_cast<unsigned>(r));
}

unsigned default_a_radius(std::size_t n, unsigned d, double delta) {
  const double k = lattice_radius(d);
  const double a = delta / (10.0 * k * std::log2(static_cast<double>(d) - 1.0));
  // Integer G-distances <= a log2 n; below 1 this is 0, i.e. only the node itself.
  return static_cast<unsigned>(std::floor(a * std::log2(static_cast<double>(n)) + 1e-9));
}

namespace {

// Nodes within H-distance `radius` of any source.
NodeSet within_h_distance(const HMultigraph& g, const NodeSet& sources, unsigned radius) {
  NodeSet out(g.size());
  std::vector<NodeIndex> frontier = sources.members();
  for (NodeIndex s : frontier) out.insert(s);
  for (unsigned depth = 1; depth <= radius && !frontier.empty(); ++depth) {
    std::vector<NodeIndex> next;
    for (NodeIndex u : frontier)
      for (NodeIndex w : g.neighbors(u))
        if (!out.contains(w)) {
          out.insert(w);
          next.push_back(w);
        }
    frontier.swap(next);
  }
  return out;
}

}  // namespace

NodeClassification classify_nodes(const Topology& t, const NodeSet& byz, unsigned a_radius,
                                  unsigned tree_radius) {
  const HMultigraph& h = t.h();
  const std::size_t n = h.size();
  if (byz.universe() != n) throw std::invalid_argument("Byzantine set has the wrong universe");

  NodeClassification c;
  c.a_radius = a_radius;
  c.tree_radius = tree_radius;
  c.byz = byz;
  c.honest = byz.complement();
  c.ltl = NodeSet(n);
  for (std::size_t v = 0; v < n; ++v)
    if (is_locally_tree_like(h, static_cast<NodeIndex>(v), tree_radius))
      c.ltl.insert(static_cast<NodeIndex>(v));
  c.nlt = c.ltl.complement();
  c.bad = c.byz.united(c.nlt);
  // dist_G(u, v) == ceil(dist_H(u, v) / k), so a G-ball of radius R is the
  // H-ball of radius k R.
  c.unsafe = within_h_distance(h, c.nlt, t.k() * a_radius);
  c.safe = c.unsafe.complement();
  c.bus = within_h_distance(h, c.bad, t.k() * a_radius);
  c.byz_safe = c.bus.complement();
  return c;
}

NodeClassification classify_nodes(const Topology& t, const NodeSet& byz, unsigned a_radius) {
  return classify_nodes(t, byz, a_radius, default_tree_radius(t.size(), t.h().degree()));
}

std::size_t byzantine_count(std::size_t n, double delta) {
  return static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 1.0 - delta) + 1e-9));
}

NodeSet place_byzantine(std::size_t n, double delta, std::uint64_t seed) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in (0, 1]");
  const std::size_t count = std::min(byzantine_count(n, delta), n);
  StreamRng rng(derive_seed(seed, {streams::kByzantine}));
  std::vector<NodeIndex> pool(n);
  std::iota(pool.begin(), pool.end(), NodeIndex{0});
  NodeSet out(n);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + detail::uniform_below(rng, n - i);
    std::swap(pool[i], pool[j]);
    out.insert(pool[i]);
  }
  return out;
}

namespace {

unsigned longest_path_from(const HMultigraph& h, const NodeSet& byz, NodeIndex v,
                           std::vector<char>& on_path, unsigned depth, unsigned cap) {
  if (depth >= cap) return depth;
  unsigned best = depth;
  on_path[v] = 1;
  for (NodeIndex w : h.neighbors(v)) {
    if (!byz.contains(w) || on_path[w]) continue;
    best = std::max(best, longest_path_from(h, byz, w, on_path, depth + 1, cap));
    if (best >= cap) break;
  }
  on_path[v] = 0;
  return best;
}

}  // namespace

unsigned longest_byzantine_chain(const HMultigraph& h, const NodeSet& byz, unsigned cap) {
  unsigned best = 0;
  std::vector<char> on_path(h.size(), 0);
  for (NodeIndex v : byz.members()) {
    best = std::max(best, longest_path_from(h, byz, v, on_path, 1, cap));
    if (best >= cap) break;
  }
  return best;
}

unsigned longest_byzantine_chain(const HMultigraph& h, const NodeSet& byz) {
  return longest_byzantine_chain(h, byz, lattice_radius(h.degree()) + 2);
}

void write_graph(std::ostream& out, const HMultigraph& h, unsigned k) {
  out << h.size() << ' ' << h.degree() << ' ' << k << ' ' << h.seed() << '\n';
  for (const HEdge& e : h.edges()) out << e.u << ' ' << e.v << ' ' << e.cycle << '\n';
}

LoadedGraph read_graph(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing header line");
  std::istringstream header(line);
  std::size_t n = 0;
  unsigned d = 0, k = 0;
  std::uint64_t seed = 0;
  if (!(header >> n >> d >> k >> seed)) throw FormatError("header must be 'n d k seed'");

  std::vector<HEdge> edges;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::uint64_t u = 0, v = 0;
    std::uint32_t c = 0;
    if (!(row >> u >> v >> c))
      throw FormatError("line " + std::to_string(line_no) + ": expected 'u v cycle'");
    if (u >= n || v >= n)
      throw FormatError("line " + std::to_string(line_no) + ": endpoint out of range");
    edges.push_back({static_cast<NodeIndex>(u), static_cast<NodeIndex>(v), c});
  }
  try {
    return {HMultigraph::from_edges(n, d, std::move(edges), seed), k};
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

}  // namespace byzcount
