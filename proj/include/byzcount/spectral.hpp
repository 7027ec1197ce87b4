#pragma once

#include <cstdint>
#include <stdexcept>

#include <Eigen/Sparse>

#include "byzcount/graph.hpp"

namespace byzcount {

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpectralEstimate {
  // Second-largest adjacency eigenvalue, signed.
  double lambda2 = 0.0;
  // Largest |eigenvalue| orthogonal to the all-ones vector.
  double lambda_abs = 0.0;
  // (d - |lambda2|) / 2, clamped at 0
  double h_lower = 0.0;
  unsigned iterations = 0;
};

// Adjacency matrix of H, parallel edges counted with multiplicity.
Eigen::SparseMatrix<double> adjacency_matrix(const HMultigraph& h);

// Power iteration on A + d I, deflated against the all-ones vector, for the
// top of the non-trivial spectrum; a second run on d I - A gives the bottom.
// Throws ConvergenceError if successive Rayleigh quotients still differ by
// more than `tolerance` after `iterations` steps.
SpectralEstimate estimate_spectral_gap(const HMultigraph& h, unsigned iterations,
                                       std::uint64_t seed, double tolerance = 1e-9);

}  // namespace byzcount
