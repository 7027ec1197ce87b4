#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "byzcount/baseline.hpp"
#include "byzcount/engine.hpp"

using namespace byzcount;

TEST(Baseline, AllHonestAgreeOnGlobalMax) {
  auto h = generate_h_graph(1024, 8, 3);
  unsigned diameter = 0;
  for (NodeIndex v = 0; v < 1024; v += 64) diameter = std::max(diameter, eccentricity(h, v));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto est = run_support_estimation(h, NodeSet(1024), std::nullopt, 0, seed);
    const auto top = *std::max_element(est.samples.begin(), est.samples.end());
    for (auto x : est.final_max) EXPECT_EQ(x, top);
    EXPECT_LE(est.rounds_to_converge, diameter + 1);
    for (std::size_t v = 0; v < 1024; ++v) EXPECT_GE(est.final_max[v], est.samples[v]);
  }
}

TEST(Baseline, RoundBudgetTruncates) {
  auto h = generate_h_graph(1024, 8, 3);
  auto full = run_support_estimation(h, NodeSet(1024), std::nullopt, 0, 5);
  for (unsigned r = 1; r <= full.rounds_run; ++r) {
    auto part = run_support_estimation(h, NodeSet(1024), std::nullopt, r, 5);
    EXPECT_EQ(part.rounds_run, r);
    EXPECT_EQ(part.samples, full.samples);
    for (std::size_t v = 0; v < 1024; ++v) EXPECT_LE(part.final_max[v], full.final_max[v]);
  }
}

TEST(Baseline, OneByzantineNodeFakesTheMaximum) {
  auto h = generate_h_graph(1024, 8, 4);
  NodeSet byz(1024);
  byz.insert(17);
  auto est = run_support_estimation(h, byz, 100u, 0, 9);
  for (std::size_t v = 0; v < 1024; ++v) EXPECT_EQ(est.final_max[v], 100u);
}

TEST(Baseline, DistinctForwardsBounded) {
  const double bound = 2 * std::log2(1024.0) + 5;
  auto h = generate_h_graph(1024, 8, 5);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto est = run_support_estimation(h, NodeSet(1024), std::nullopt, 0, seed);
    for (auto f : est.forwarded) EXPECT_LE(f, bound);
  }
}

TEST(Baseline, TaggedInResults) {
  ExperimentConfig c;
  c.n = 1024;
  c.algorithm = Algorithm::baseline;
  auto r = run_experiment(c);
  EXPECT_EQ(to_string(r.config.algorithm), "baseline");
  EXPECT_GT(r.success_fraction, 0.99);
  c.strategy.name = "max_injector";
  c.delta = 1.0;  // a single Byzantine node
  auto bad = run_experiment(c);
  EXPECT_EQ(bad.byzantine, 1u);
  EXPECT_DOUBLE_EQ(bad.success_fraction, 0.0);
}
