#include "byzcount/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "byzcount/rng.hpp"

namespace byzcount {

Eigen::SparseMatrix<double> adjacency_matrix(const HMultigraph& h) {
  const auto n = static_cast<Eigen::Index>(h.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(h.edges().size() * 2);
  for (const HEdge& e : h.edges()) {
    triplets.emplace_back(e.u, e.v, 1.0);
    triplets.emplace_back(e.v, e.u, 1.0);
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());  // duplicates are summed
  return a;
}

namespace {

struct PowerResult {
  double value = 0.0;
  unsigned iterations = 0;
};

// Dominant eigenvalue of sign * A + shift * I on the complement of 1.
PowerResult deflated_power(const Eigen::SparseMatrix<double>& a, double sign, double shift,
                           unsigned iterations, std::uint64_t seed, double tolerance) {
  const Eigen::Index n = a.rows();
  StreamRng rng(seed);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;

  auto deflate = [](Eigen::VectorXd& v) { v.array() -= v.mean(); };
  deflate(x);
  x.normalize();

  Eigen::VectorXd y(n);
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (unsigned it = 1; it <= iterations; ++it) {
    y.noalias() = sign * (a * x);
    y += shift * x;
    const double rayleigh = x.dot(y);
    deflate(y);
    const double norm = y.norm();
    if (norm == 0.0) return {rayleigh, it};
    x = y / norm;
    if (std::abs(rayleigh - previous) <= tolerance) return {rayleigh, it};
    previous = rayleigh;
  }
  throw ConvergenceError("power iteration did not converge within " +
                         std::to_string(iterations) + " iterations");
}

}  // namespace

SpectralEstimate estimate_spectral_gap(const HMultigraph& h, unsigned iterations,
                                       std::uint64_t seed, double tolerance) {
  if (h.size() < 2) throw std::invalid_argument("spectral estimate needs at least two nodes");
  const auto a = adjacency_matrix(h);
  const double d = h.degree();

  const auto top = deflated_power(a, 1.0, d, iterations,
                                  derive_seed(seed, {streams::kSpectral, 1}), tolerance);
  const auto bottom = deflated_power(a, -1.0, d, iterations,
                                     derive_seed(seed, {streams::kSpectral, 2}), tolerance);

  SpectralEstimate est;
  est.lambda2 = top.value - d;
  const double lambda_min = d - bottom.value;
  est.lambda_abs = std::max(std::abs(est.lambda2), std::abs(lambda_min));
  est.h_lower = std::max(0.0, (d - std::abs(est.lambda2)) / 2.0);
  est.iterations = top.iterations + bottom.iterations;
  return est;
}

}  // namespace byzcount
