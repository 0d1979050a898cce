#include "roughmc/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "roughmc/quadrature.hpp"

namespace roughmc {

namespace {

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double e : v) s += std::exp(e - m);
  return m + std::log(s);
}

// Everything a row needs, precomputed once per grid point.
struct KernelPrecompute {
  std::size_t size = 0;
  double h = 0.0;
  bool gaussian = true;
  double inv_two_var = 0.0;  // beta / (2 sigma^2)
  double log_norm = 0.0;     // log(h) - log sqrt(2 pi sigma^2 / beta)
  std::vector<double> x;
  std::vector<double> drift;
  std::vector<double> log_w;
  std::vector<double> log_u;  // independence proposal log-probabilities

  double log_proposal(std::size_t i, std::size_t j) const {
    if (!gaussian) return log_u[j];
    const double r = x[j] - x[i] - drift[i];
    return log_norm - inv_two_var * r * r;
  }
};

KernelPrecompute precompute(const SamplerConfig& cfg, const PotentialSpec& spec,
                            const Grid1D& grid) {
  cfg.validate();
  grid.validate();
  if (spec.dimension() != 1)
    throw std::invalid_argument("discretize_kernel: only one-dimensional potentials");
  const double h = grid.spacing();
  if (spec.has_rough_part() && h > spec.epsilon() / 4.0) {
    std::ostringstream msg;
    msg << "grid too coarse: spacing " << h << " exceeds eps/4 = " << spec.epsilon() / 4.0;
    throw NumericalError(msg.str());
  }

  KernelPrecompute pre;
  pre.size = grid.points;
  pre.h = h;
  pre.x.resize(pre.size);
  pre.log_w.resize(pre.size);
  std::vector<double> log_w0(pre.size);
  for (std::size_t i = 0; i < pre.size; ++i) {
    pre.x[i] = grid.x(i);
    pre.log_w[i] = -cfg.beta * spec.coordinate(pre.x[i]).value;
    log_w0[i] = -cfg.beta * spec.coordinate_smooth(pre.x[i]).value;
  }
  const double z = log_sum_exp(pre.log_w);
  for (double& v : pre.log_w) v -= z;

  // The window has to hold most of mu0, measured by its standard deviation.
  const double z0 = log_sum_exp(log_w0);
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < pre.size; ++i) {
    const double p = std::exp(log_w0[i] - z0);
    mean += p * pre.x[i];
    second += p * pre.x[i] * pre.x[i];
  }
  const double sd = std::sqrt(std::max(0.0, second - mean * mean));
  if (grid.b - grid.a < 8.0 * sd) {
    std::ostringstream msg;
    msg << "grid too narrow: width " << grid.b - grid.a << " is below 8 sd of mu0 (" << 8.0 * sd
        << ")";
    throw NumericalError(msg.str());
  }

  pre.gaussian = cfg.method != Method::Independence;
  if (pre.gaussian) {
    const double var = cfg.sigma * cfg.sigma / cfg.beta;
    pre.inv_two_var = 1.0 / (2.0 * var);
    pre.log_norm = std::log(h) - 0.5 * std::log(2.0 * std::numbers::pi * var);
    pre.drift.resize(pre.size);
    for (std::size_t i = 0; i < pre.size; ++i) {
      const double xi = pre.x[i];
      proposal_drift(cfg, spec, std::span<const double>(&xi, 1),
                     std::span<double>(&pre.drift[i], 1));
    }
  } else {
    pre.log_u.resize(pre.size);
    for (std::size_t i = 0; i < pre.size; ++i) {
      const double xi = pre.x[i];
      pre.log_u[i] = -cfg.beta * cfg.auxiliary->energy(std::span<const double>(&xi, 1));
    }
    const double zu = log_sum_exp(pre.log_u);
    for (double& v : pre.log_u) v -= zu;
  }
  return pre;
}

void fill_row(const KernelPrecompute& pre, AcceptanceRule rule, std::size_t i, double* row) {
  double off = 0.0;
  for (std::size_t j = 0; j < pre.size; ++j) {
    if (j == i) continue;
    const double forward = pre.log_w[i] + pre.log_proposal(i, j);
    const double reverse = pre.log_w[j] + pre.log_proposal(j, i);
    // F(R) q_ij with R = reverse - forward; written so that w_i T_ij is
    // symmetric in (i, j) up to rounding.
    double t;
    if (rule == AcceptanceRule::Metropolis) {
      t = std::exp(std::min(forward, reverse) - pre.log_w[i]);
    } else {
      t = std::exp(pre.log_proposal(i, j)) * accept_prob(reverse - forward, rule);
    }
    row[j] = t;
    off += t;
  }
  row[i] = 1.0 - off;
}

void finish(TransitionMatrix& t, const KernelPrecompute& pre) {
  for (std::size_t i = 0; i < t.size; ++i) {
    if (t(i, i) < -1e-12) {
      std::ostringstream msg;
      msg << "grid too coarse: negative rejection mass " << t(i, i) << " in row " << i;
      throw NumericalError(msg.str());
    }
  }
  t.log_weights = pre.log_w;
  t.weights.resize(t.size);
  for (std::size_t i = 0; i < t.size; ++i) t.weights[i] = std::exp(pre.log_w[i]);
  check_transition_matrix(t);
}

TransitionMatrix make_matrix(const SamplerConfig& cfg, const PotentialSpec& spec,
                             const Grid1D& grid) {
  TransitionMatrix t;
  t.size = grid.points;
  t.entries.assign(t.size * t.size, 0.0);
  t.grid = grid;
  t.method = cfg.method;
  t.sigma = uses_sigma(cfg.method) ? cfg.sigma : 0.0;
  t.epsilon = spec.epsilon();
  return t;
}

}  // namespace

void Grid1D::validate() const {
  if (points < 8) throw std::invalid_argument("grid needs at least 8 points");
  if (!(b > a) || !std::isfinite(a) || !std::isfinite(b))
    throw std::invalid_argument("grid needs finite a < b");
}

Grid1D Grid1D::covering(const PotentialSpec& spec, double beta, std::size_t points) {
  const auto v0 = [&](double x) { return spec.coordinate_smooth(x).value; };
  const double osc = spec.osc_bound() / static_cast<double>(spec.dimension());
  const auto [lo, hi] = boltzmann_window(v0, beta, 25.0 + beta * osc);
  Grid1D g{lo, hi, points};
  g.validate();
  return g;
}

TransitionMatrix discretize_kernel(const SamplerConfig& cfg, const PotentialSpec& spec,
                                   const Grid1D& grid) {
  const KernelPrecompute pre = precompute(cfg, spec, grid);
  TransitionMatrix t = make_matrix(cfg, spec, grid);
  const auto n = static_cast<std::ptrdiff_t>(t.size);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    fill_row(pre, cfg.rule, static_cast<std::size_t>(i), t.entries.data() + i * n);
  finish(t, pre);
  return t;
}

TransitionMatrix discretize_kernel_serial(const SamplerConfig& cfg, const PotentialSpec& spec,
                                          const Grid1D& grid) {
  const KernelPrecompute pre = precompute(cfg, spec, grid);
  TransitionMatrix t = make_matrix(cfg, spec, grid);
  for (std::size_t i = 0; i < t.size; ++i)
    fill_row(pre, cfg.rule, i, t.entries.data() + i * t.size);
  finish(t, pre);
  return t;
}

void check_transition_matrix(const TransitionMatrix& t, double tol) {
  for (std::size_t i = 0; i < t.size; ++i) {
    double sum = 0.0;
    for (double v : t.row(i)) sum += v;
    if (std::abs(sum - 1.0) > tol) {
      std::ostringstream msg;
      msg << "grid too coarse: row " << i << " sums to " << sum << ", tolerance " << tol;
      throw NumericalError(msg.str());
    }
  }
  for (std::size_t i = 0; i < t.size; ++i) {
    for (std::size_t j = i + 1; j < t.size; ++j) {
      const double fwd = t.weights[i] * t(i, j);
      const double bwd = t.weights[j] * t(j, i);
      if (std::abs(fwd - bwd) > tol * std::max({fwd, bwd, std::numeric_limits<double>::min()})) {
        std::ostringstream msg;
        msg << "grid too coarse: reversibility violated at (" << i << ", " << j
            << "), relative tolerance " << tol;
        throw NumericalError(msg.str());
      }
    }
  }
}

GapResult spectral_gap(const TransitionMatrix& t, const GapOptions& options) {
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto n = static_cast<Eigen::Index>(t.size);
  Eigen::Map<const RowMatrix> tm(t.entries.data(), n, n);
  Eigen::Map<const Eigen::VectorXd> lw(t.log_weights.data(), n);
  const Eigen::VectorXd half = (0.5 * lw.array()).exp();
  const Eigen::VectorXd inv_half = (-0.5 * lw.array()).exp();
  Eigen::MatrixXd s = half.asDiagonal() * tm * inv_half.asDiagonal();
  s = 0.5 * (s + s.transpose()).eval();

  const bool vectors = options.second_vector;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      s, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("eigensolver did not converge");
  const Eigen::VectorXd& ev = solver.eigenvalues();

  GapResult r;
  r.lambda1 = ev(n - 1);
  r.lambda2 = ev(n - 2);
  r.gap = 1.0 - r.lambda2;
  if (std::abs(r.lambda1 - 1.0) > 1e-8) {
    std::ostringstream msg;
    msg << "leading eigenvalue " << r.lambda1 << " differs from 1 by more than 1e-8";
    throw NumericalError(msg.str());
  }
  if (options.full_spectrum) r.spectrum.assign(ev.data(), ev.data() + n);
  if (vectors) {
    const Eigen::VectorXd f = inv_half.cwiseProduct(solver.eigenvectors().col(n - 2));
    r.second_vector.assign(f.data(), f.data() + n);
  }
  return r;
}

double dirichlet_upper_bound(const TransitionMatrix& t, std::span<const double> f) {
  if (f.size() != t.size) throw std::invalid_argument("dirichlet_upper_bound: size mismatch");
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < t.size; ++i) {
    mean += t.weights[i] * f[i];
    second += t.weights[i] * f[i] * f[i];
  }
  const double var = second - mean * mean;
  if (!(var > 1e-14 * second)) throw std::invalid_argument("dirichlet_upper_bound: f is constant");
  double form = 0.0;
  const auto n = static_cast<std::ptrdiff_t>(t.size);
#pragma omp parallel for reduction(+ : form) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    double row = 0.0;
    for (std::size_t j = 0; j < t.size; ++j) {
      const double d = f[j] - f[iu];
      row += t(iu, j) * d * d;
    }
    form += t.weights[iu] * row;
  }
  return form / (2.0 * var);
}

namespace {

std::vector<char> set_mask(const TransitionMatrix& t, std::span<const std::size_t> k,
                           double& mass) {
  std::vector<char> in(t.size, 0);
  mass = 0.0;
  for (std::size_t i : k) {
    if (i >= t.size) throw std::invalid_argument("set index outside the grid");
    if (!in[i]) mass += t.weights[i];
    in[i] = 1;
  }
  return in;
}

}  // namespace

double conductance_bound(const TransitionMatrix& t, std::span<const std::size_t> k) {
  double mass = 0.0;
  const std::vector<char> in = set_mask(t, k, mass);
  if (!(mass > 0.0 && mass < 0.5))
    throw std::invalid_argument("conductance_bound: mu(K) must lie in (0, 1/2), got " +
                                std::to_string(mass));
  double escape = 0.0;
  for (std::size_t i = 0; i < t.size; ++i) {
    if (!in[i]) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < t.size; ++j)
      if (!in[j]) row += t(i, j);
    escape += t.weights[i] * row;
  }
  return 2.0 * escape / mass;
}

std::vector<std::size_t> grid_set(const Grid1D& grid, const std::function<bool(double)>& pred) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < grid.points; ++i)
    if (pred(grid.x(i))) out.push_back(i);
  return out;
}

std::vector<double> conductance_observable(const TransitionMatrix& t,
                                           std::span<const std::size_t> k) {
  double mass = 0.0;
  const std::vector<char> in = set_mask(t, k, mass);
  if (!(mass > 0.0 && mass < 1.0))
    throw std::invalid_argument("conductance_observable: mu(K) must lie in (0, 1)");
  const double scale = 1.0 / std::sqrt(mass * (1.0 - mass));
  std::vector<double> f(t.size);
  for (std::size_t i = 0; i < t.size; ++i) f[i] = ((in[i] ? 1.0 : 0.0) - mass) * scale;
  return f;
}

RefinementCheck check_refinement(const SamplerConfig& cfg, const PotentialSpec& spec,
                                 const Grid1D& grid, double tol) {
  RefinementCheck c;
  c.gap_coarse = spectral_gap(discretize_kernel(cfg, spec, grid)).gap;
  const Grid1D fine{grid.a, grid.b, 2 * grid.points - 1};
  c.gap_fine = spectral_gap(discretize_kernel(cfg, spec, fine)).gap;
  c.relative_change = std::abs(c.gap_fine - c.gap_coarse) / c.gap_fine;
  c.stable = c.relative_change < tol;
  return c;
}

}  // namespace roughmc
