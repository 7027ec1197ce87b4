#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "byzcount/graph.hpp"

namespace byzcount {

// Geometric support estimation: every node samples X_u and max-floods it over
// H, forwarding each new maximum once.
struct SupportEstimate {
  std::vector<std::uint32_t> samples;        // X_u (the forced value at Byzantine nodes)
  std::vector<std::uint32_t> final_max;      // max seen by each node at the end
  std::vector<std::uint32_t> forwarded;      // distinct values each node forwarded
  unsigned rounds_to_converge = 0;           // last round in which any maximum changed
  unsigned rounds_run = 0;
  std::uint64_t messages = 0;
};

// `rounds` == 0 runs until no node has anything new to forward.
SupportEstimate run_support_estimation(const HMultigraph& h, const NodeSet& byz,
                                       std::optional<std::uint32_t> byz_value, unsigned rounds,
                                       std::uint64_t seed);

// Maximum H-distance from `source` (eccentricity); the diameter is the max
// over sources.
unsigned eccentricity(const HMultigraph& h, NodeIndex source);

}  // namespace byzcount
