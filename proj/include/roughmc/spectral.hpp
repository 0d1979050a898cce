#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "roughmc/potentials.hpp"
#include "roughmc/samplers.hpp"

namespace roughmc {

struct Grid1D {
  double a = -1.0;
  double b = 1.0;
  std::size_t points = 8;

  double spacing() const { return (b - a) / static_cast<double>(points - 1); }
  double x(std::size_t i) const { return a + spacing() * static_cast<double>(i); }
  void validate() const;

  /// Grid over the region where beta (v0 - min v0) <= 25 + beta osc(v1).
  static Grid1D covering(const PotentialSpec& spec, double beta, std::size_t points);
};

/// Row-major G x G row-stochastic matrix with its stationary weights.
struct TransitionMatrix {
  std::size_t size = 0;
  std::vector<double> entries;
  /// Discrete stationary law, proportional to e^{-beta V(x_i)}, summing to 1.
  std::vector<double> weights;
  std::vector<double> log_weights;
  Grid1D grid;
  Method method = Method::RWM;
  double sigma = 0.0;
  double epsilon = 0.0;

  double operator()(std::size_t i, std::size_t j) const { return entries[i * size + j]; }
  std::span<const double> row(std::size_t i) const {
    return {entries.data() + i * size, size};
  }
};

/// Off-diagonal T_ij = q(x_i -> x_j) F(R(x_i, x_j)) h; the diagonal takes the
/// remaining mass. Rows are filled in parallel. Throws NumericalError naming
/// the violated tolerance when the grid is too coarse (negative diagonal,
/// row sum or reversibility off by more than 1e-10, h > eps / 4 on a rough
/// landscape, or a window narrower than 8 standard deviations of mu0).
TransitionMatrix discretize_kernel(const SamplerConfig& cfg, const PotentialSpec& spec,
                                   const Grid1D& grid);
/// Single-threaded reference for discretize_kernel; identical output.
TransitionMatrix discretize_kernel_serial(const SamplerConfig& cfg, const PotentialSpec& spec,
                                          const Grid1D& grid);

/// Throws NumericalError if a row sum or w_i T_ij = w_j T_ji is off by more
/// than `tol`.
void check_transition_matrix(const TransitionMatrix& t, double tol = 1e-10);

struct GapResult {
  double lambda1 = 1.0;
  double lambda2 = 0.0;
  double gap = 0.0;
  /// Ascending eigenvalues of the symmetrized matrix (when requested).
  std::vector<double> spectrum;
  /// Right eigenvector for lambda2 as a grid function (when requested).
  std::vector<double> second_vector;
};

struct GapOptions {
  bool full_spectrum = false;
  bool second_vector = false;
};

/// gap = 1 - lambda2 of S = D^{1/2} T D^{-1/2}, D = diag(w), by a dense
/// symmetric eigensolve.
GapResult spectral_gap(const TransitionMatrix& t, const GapOptions& options = {});

/// E|f(X_1) - f(X_0)|^2 / (2 Var f) in stationarity; always >= gap.
double dirichlet_upper_bound(const TransitionMatrix& t, std::span<const double> f);

/// 2 P(X_1 not in K | X_0 in K) under the stationary weights.
/// Requires 0 < mu(K) < 1/2.
double conductance_bound(const TransitionMatrix& t, std::span<const std::size_t> k);

/// Grid indices whose node satisfies `pred`.
std::vector<std::size_t> grid_set(const Grid1D& grid, const std::function<bool(double)>& pred);

/// (1_K - mu(K)) / sqrt(mu(K) (1 - mu(K))), the unit-variance indicator of K.
std::vector<double> conductance_observable(const TransitionMatrix& t,
                                           std::span<const std::size_t> k);

struct RefinementCheck {
  double gap_coarse = 0.0;
  double gap_fine = 0.0;
  double relative_change = 0.0;
  bool stable = false;
};

/// Recomputes the gap on a grid with 2G - 1 points; unstable when the gap
/// moves by more than `tol` relative.
RefinementCheck check_refinement(const SamplerConfig& cfg, const PotentialSpec& spec,
                                 const Grid1D& grid, double tol = 0.02);

}  // namespace roughmc
