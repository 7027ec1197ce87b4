#include "byzcount/baseline.hpp"

#include <algorithm>

#include "byzcount/protocol.hpp"
#include "byzcount/rng.hpp"

namespace byzcount {

SupportEstimate run_support_estimation(const HMultigraph& h, const NodeSet& byz,
                                       std::optional<std::uint32_t> byz_value, unsigned rounds,
                                       std::uint64_t seed) {
  const std::size_t n = h.size();
  SupportEstimate est;
  est.samples.resize(n);
  est.forwarded.assign(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto vi = static_cast<NodeIndex>(v);
    if (byz_value && byz.contains(vi)) {
      est.samples[v] = *byz_value;
    } else {
      StreamRng rng(derive_seed(seed, {streams::kBaseline, v}));
      est.samples[v] = draw_color(rng).value;
    }
  }

  std::vector<std::uint32_t> value = est.samples;
  std::vector<std::uint32_t> incoming = value;
  std::vector<NodeIndex> frontier(n);
  for (std::size_t v = 0; v < n; ++v) frontier[v] = static_cast<NodeIndex>(v);
  std::vector<NodeIndex> next;
  std::vector<char> queued(n, 0);

  // Everyone forwards its own sample in round 1, then only new maxima.
  unsigned r = 0;
  while (!frontier.empty() && (rounds == 0 || r < rounds)) {
    ++r;
    next.clear();
    for (NodeIndex v : frontier) {
      ++est.forwarded[v];
      const std::uint32_t x = value[v];
      for (NodeIndex w : h.neighbors(v)) {
        ++est.messages;
        if (x > incoming[w]) {
          incoming[w] = x;
          if (!queued[w]) {
            queued[w] = 1;
            next.push_back(w);
          }
        }
      }
    }
    bool changed = false;
    frontier.clear();
    for (NodeIndex w : next) {
      queued[w] = 0;
      // A forcing Byzantine node keeps asserting its value.
      if (byz_value && byz.contains(w)) {
        incoming[w] = value[w];
        continue;
      }
      if (incoming[w] > value[w]) {
        value[w] = incoming[w];
        changed = true;
        frontier.push_back(w);
      }
    }
    if (changed) est.rounds_to_converge = r;
  }
  est.rounds_run = r;
  est.final_max = std::move(value);
  return est;
}

unsigned eccentricity(const HMultigraph& h, NodeIndex source) {
  auto dist = h_distances(h, source);
  int best = 0;
  for (int x : dist) best = std::max(best, x);
  return static_cast<unsigned>(best);
}

}  // namespace byzcount
