#include "roughmc/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace roughmc {

namespace {

Derivatives smooth_terms(SmoothKind kind, double x) {
  switch (kind) {
    case SmoothKind::Harmonic:
      return {0.5 * x * x, x, 1.0, 0.0};
    case SmoothKind::DoubleWell: {
      const double s = x * x - 1.0;
      return {s * s, 4.0 * x * s, 12.0 * x * x - 4.0, 24.0 * x};
    }
  }
  return {};
}

}  // namespace

std::string_view to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::SeparableRough:
      return "separable_rough";
    case PotentialKind::RandomMultiscale:
      return "random_multiscale";
    case PotentialKind::Quadratic:
      return "quadratic";
  }
  return "unknown";
}

std::string_view to_string(SmoothKind kind) {
  return kind == SmoothKind::Harmonic ? "harmonic" : "double_well";
}

SmoothKind parse_smooth_kind(std::string_view name) {
  if (name == "harmonic") return SmoothKind::Harmonic;
  if (name == "double_well") return SmoothKind::DoubleWell;
  throw std::invalid_argument("unknown smooth potential kind: " + std::string(name));
}

PotentialSpec PotentialSpec::separable_rough(SmoothKind smooth, std::size_t n, double eps,
                                             double amplitude) {
  if (n == 0) throw std::invalid_argument("potential dimension must be >= 1");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("epsilon must be > 0");
  if (!std::isfinite(amplitude)) throw std::invalid_argument("amplitude must be finite");
  PotentialSpec p;
  p.kind_ = PotentialKind::SeparableRough;
  p.smooth_ = smooth;
  p.n_ = n;
  p.eps_ = eps;
  p.amplitude_ = amplitude;
  return p;
}

PotentialSpec PotentialSpec::random_multiscale(std::vector<double> coefficients,
                                               std::vector<double> wavenumbers) {
  if (coefficients.size() != wavenumbers.size())
    throw std::invalid_argument("random multiscale: coefficient/wavenumber count mismatch");
  if (coefficients.empty()) throw std::invalid_argument("random multiscale: need >= 1 mode");
  for (double k : wavenumbers)
    if (!(k > 0.0) || !std::isfinite(k))
      throw std::invalid_argument("random multiscale: wavenumbers must be positive");
  PotentialSpec p;
  p.kind_ = PotentialKind::RandomMultiscale;
  p.smooth_ = SmoothKind::DoubleWell;
  p.n_ = 1;
  p.eps_ = 1.0 / *std::max_element(wavenumbers.begin(), wavenumbers.end());
  p.coefficients_ = std::move(coefficients);
  p.wavenumbers_ = std::move(wavenumbers);
  return p;
}

PotentialSpec PotentialSpec::quadratic(std::size_t n, double curvature, double offset) {
  if (n == 0) throw std::invalid_argument("potential dimension must be >= 1");
  if (!(curvature >= 0.0) || !std::isfinite(curvature))
    throw std::invalid_argument("quadratic curvature must be finite and >= 0");
  PotentialSpec p;
  p.kind_ = PotentialKind::Quadratic;
  p.n_ = n;
  p.eps_ = std::numeric_limits<double>::infinity();
  p.curvature_ = curvature;
  p.offset_ = offset;
  return p;
}

bool PotentialSpec::has_rough_part() const {
  switch (kind_) {
    case PotentialKind::SeparableRough:
      return amplitude_ != 0.0;
    case PotentialKind::RandomMultiscale:
      return true;
    case PotentialKind::Quadratic:
      return false;
  }
  return false;
}

bool PotentialSpec::is_trapping() const {
  return kind_ != PotentialKind::Quadratic || curvature_ > 0.0;
}

void PotentialSpec::check_dimension(std::size_t size) const {
  if (size != n_)
    throw std::invalid_argument("dimension mismatch: potential has n=" + std::to_string(n_) +
                                ", got vector of length " + std::to_string(size));
}

Derivatives PotentialSpec::coordinate_smooth(double x) const {
  switch (kind_) {
    case PotentialKind::SeparableRough:
      return smooth_terms(smooth_, x);
    case PotentialKind::RandomMultiscale:
      return smooth_terms(SmoothKind::DoubleWell, x);
    case PotentialKind::Quadratic:
      // The offset is split evenly so that coordinate terms sum to V.
      return {0.5 * curvature_ * x * x + offset_ / static_cast<double>(n_), curvature_ * x,
              curvature_, 0.0};
  }
  return {};
}

Derivatives PotentialSpec::coordinate_rough(double x) const {
  switch (kind_) {
    case PotentialKind::SeparableRough: {
      if (amplitude_ == 0.0) return {};
      const double inv = 1.0 / eps_;
      const double s = std::sin(x * inv);
      const double c = std::cos(x * inv);
      const double a1 = amplitude_ * inv;
      const double a2 = a1 * inv;
      return {amplitude_ * c, -a1 * s, -a2 * c, a2 * inv * s};
    }
    case PotentialKind::RandomMultiscale: {
      Derivatives d;
      for (std::size_t j = 0; j < coefficients_.size(); ++j) {
        const double c = coefficients_[j];
        const double k = wavenumbers_[j];
        const double sn = std::sin(k * x);
        const double cs = std::cos(k * x);
        d.value += c * cs;
        d.d1 -= c * k * sn;
        d.d2 -= c * k * k * cs;
        d.d3 += c * k * k * k * sn;
      }
      return d;
    }
    case PotentialKind::Quadratic:
      return {};
  }
  return {};
}

Derivatives PotentialSpec::coordinate(double x) const {
  const Derivatives s = coordinate_smooth(x);
  const Derivatives r = coordinate_rough(x);
  return {s.value + r.value, s.d1 + r.d1, s.d2 + r.d2, s.d3 + r.d3};
}

double PotentialSpec::energy(std::span<const double> x) const {
  check_dimension(x.size());
  double total = 0.0;
  switch (kind_) {
    case PotentialKind::SeparableRough: {
      const double inv = 1.0 / eps_;
      for (double xi : x) {
        total += smooth_terms(smooth_, xi).value;
        if (amplitude_ != 0.0) total += amplitude_ * std::cos(xi * inv);
      }
      return total;
    }
    case PotentialKind::RandomMultiscale:
      return coordinate(x[0]).value;
    case PotentialKind::Quadratic:
      for (double xi : x) total += xi * xi;
      return 0.5 * curvature_ * total + offset_;
  }
  return total;
}

double PotentialSpec::energy_and_gradient(std::span<const double> x, std::span<double> out) const {
  check_dimension(x.size());
  check_dimension(out.size());
  double total = 0.0;
  switch (kind_) {
    case PotentialKind::SeparableRough: {
      const double inv = 1.0 / eps_;
      const double a1 = amplitude_ * inv;
      for (std::size_t i = 0; i < n_; ++i) {
        const Derivatives s = smooth_terms(smooth_, x[i]);
        double v = s.value;
        double g = s.d1;
        if (amplitude_ != 0.0) {
          const double arg = x[i] * inv;
          v += amplitude_ * std::cos(arg);
          g -= a1 * std::sin(arg);
        }
        total += v;
        out[i] = g;
      }
      return total;
    }
    case PotentialKind::RandomMultiscale: {
      const Derivatives d = coordinate(x[0]);
      out[0] = d.d1;
      return d.value;
    }
    case PotentialKind::Quadratic:
      for (std::size_t i = 0; i < n_; ++i) {
        total += x[i] * x[i];
        out[i] = curvature_ * x[i];
      }
      return 0.5 * curvature_ * total + offset_;
  }
  return total;
}

void PotentialSpec::gradient(std::span<const double> x, std::span<double> out) const {
  energy_and_gradient(x, out);
}

double PotentialSpec::smooth_energy(std::span<const double> x) const {
  check_dimension(x.size());
  double total = 0.0;
  for (double xi : x) total += coordinate_smooth(xi).value;
  return total;
}

double PotentialSpec::smooth_energy_and_gradient(std::span<const double> x,
                                                 std::span<double> out) const {
  check_dimension(x.size());
  check_dimension(out.size());
  double total = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const Derivatives s = coordinate_smooth(x[i]);
    total += s.value;
    out[i] = s.d1;
  }
  return total;
}

void PotentialSpec::smooth_gradient(std::span<const double> x, std::span<double> out) const {
  smooth_energy_and_gradient(x, out);
}

double PotentialSpec::rough_energy(std::span<const double> x) const {
  check_dimension(x.size());
  double total = 0.0;
  for (double xi : x) total += coordinate_rough(xi).value;
  return total;
}

double PotentialSpec::osc_bound() const {
  switch (kind_) {
    case PotentialKind::SeparableRough:
      return 2.0 * static_cast<double>(n_) * std::abs(amplitude_);
    case PotentialKind::RandomMultiscale: {
      double sum = 0.0;
      for (double c : coefficients_) sum += std::abs(c);
      return 2.0 * sum;
    }
    case PotentialKind::Quadratic:
      return 0.0;
  }
  return 0.0;
}

PotentialSpec PotentialSpec::smooth_part() const {
  PotentialSpec p = *this;
  switch (kind_) {
    case PotentialKind::SeparableRough:
      p.amplitude_ = 0.0;
      break;
    case PotentialKind::RandomMultiscale:
      // (x^2 - 1)^2 is the double-well separable form with no rough term.
      return separable_rough(SmoothKind::DoubleWell, 1, eps_, 0.0);
    case PotentialKind::Quadratic:
      break;
  }
  return p;
}

PotentialSpec draw_random_multiscale(int modes, std::uint64_t seed) {
  if (modes <= 0) throw std::invalid_argument("random multiscale: mode count must be >= 1");
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> coef(-0.1, 0.1);
  std::uniform_real_distribution<double> log10k(1.0, 3.0);
  std::vector<double> c(static_cast<std::size_t>(modes));
  std::vector<double> k(static_cast<std::size_t>(modes));
  for (int j = 0; j < modes; ++j) {
    c[static_cast<std::size_t>(j)] = coef(engine);
    k[static_cast<std::size_t>(j)] = std::pow(10.0, log10k(engine));
  }
  return PotentialSpec::random_multiscale(std::move(c), std::move(k));
}

}  // namespace roughmc
