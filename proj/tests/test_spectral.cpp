#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "byzcount/spectral.hpp"

using namespace byzcount;

TEST(Spectral, CompleteGraphOnFour) {
  std::vector<HEdge> edges;
  for (NodeIndex u = 0; u < 4; ++u)
    for (NodeIndex v = u + 1; v < 4; ++v) edges.push_back({u, v, 0});
  auto k4 = HMultigraph::from_edges(4, 3, edges);
  auto est = estimate_spectral_gap(k4, 1000, 1);
  EXPECT_NEAR(est.lambda2, -1.0, 1e-6);
  EXPECT_NEAR(std::abs(est.lambda2), 1.0, 1e-6);
  EXPECT_NEAR(est.h_lower, 1.0, 1e-6);
}

TEST(Spectral, Cycle) {
  for (std::size_t n : {7u, 12u, 30u}) {
    std::vector<HEdge> edges;
    for (std::size_t i = 0; i < n; ++i)
      edges.push_back({static_cast<NodeIndex>(i), static_cast<NodeIndex>((i + 1) % n), 1});
    auto h = HMultigraph::from_edges(n, 2, edges);
    auto est = estimate_spectral_gap(h, 200000, 3, 1e-12);
    EXPECT_NEAR(est.lambda2, 2.0 * std::cos(2.0 * std::numbers::pi / n), 1e-5) << n;
    EXPECT_GE(est.h_lower, 0.0);
  }
}

TEST(Spectral, RandomRegularIsNearRamanujan) {
  auto h = generate_h_graph(2000, 8, 5);
  auto est = estimate_spectral_gap(h, 20000, 5);
  EXPECT_LT(std::abs(est.lambda2), 2.0 * std::sqrt(7.0) + 0.5);
  EXPECT_LE(std::abs(est.lambda2), est.lambda_abs + 1e-9);
  EXPECT_GT(est.h_lower, 0.0);
}

TEST(Spectral, ReportsNonConvergence) {
  auto h = generate_h_graph(2000, 8, 5);
  EXPECT_THROW(estimate_spectral_gap(h, 3, 5), ConvergenceError);
}
