#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "roughmc/potentials.hpp"
#include "roughmc/rng.hpp"
#include "roughmc/samplers.hpp"

namespace roughmc {

struct InverseCdfOptions {
  /// Uniform quantile levels u_k = k / (levels - 1) kept in the table.
  std::size_t levels = 4096;
  /// Nodes of the cumulative quadrature behind the table.
  std::size_t fine_points = 65536;
  /// Domain; when lower >= upper it is sized automatically to the region
  /// where beta (v - min v) <= 50.
  double lower = 0.0;
  double upper = 0.0;
};

/// Monotone piecewise-linear inverse CDF of the density e^{-beta v} on an
/// interval.
class TabulatedInverseCdf {
 public:
  /// Throws NumericalError when the tabulated CDF is not strictly monotone.
  static TabulatedInverseCdf build(const std::function<double(double)>& v, double beta,
                                   const InverseCdfOptions& options = {});

  /// Table for one coordinate term of `spec` (smooth part only when `smooth_only`).
  static TabulatedInverseCdf build(const PotentialSpec& spec, double beta, bool smooth_only,
                                   const InverseCdfOptions& options = {});

  double inverse(double u) const;
  /// Quadrature CDF at x (0 below the domain, 1 above).
  double cdf(double x) const;
  double sample(Rng& rng) const { return inverse(rng.uniform()); }

  double lower() const { return fine_x_.front(); }
  double upper() const { return fine_x_.back(); }
  double beta() const { return beta_; }
  const std::vector<double>& levels() const { return levels_; }
  const std::vector<double>& positions() const { return positions_; }

 private:
  TabulatedInverseCdf() = default;
  double fine_inverse(double u) const;

  double beta_ = 1.0;
  std::vector<double> fine_x_;
  std::vector<double> fine_cdf_;
  std::vector<double> levels_;
  std::vector<double> positions_;
};

/// i.i.d. coordinates from one shared table: draws from a separable density.
class ProductInverseCdfSampler : public AuxiliarySampler {
 public:
  explicit ProductInverseCdfSampler(std::shared_ptr<const TabulatedInverseCdf> table)
      : table_(std::move(table)) {}
  void sample(Rng& rng, std::span<double> out) const override;
  const TabulatedInverseCdf& table() const { return *table_; }

 private:
  std::shared_ptr<const TabulatedInverseCdf> table_;
};

/// Fills the auxiliary handles of `cfg` with U = V0 of `spec` and a product
/// inverse-CDF sampler for e^{-beta V0}.
void attach_smooth_auxiliary(SamplerConfig& cfg, const PotentialSpec& spec,
                             const InverseCdfOptions& options = {});

/// Inner-chain proposal. Both flow the quadratic coupling exactly and freeze a
/// gradient over the step: SmoothDrift uses grad V0 and leaves the rough part
/// to the accept test, Langevin uses grad V, which stalls on rough V once
/// gamma |grad V| exceeds the proposal width.
enum class InnerProposal { SmoothDrift, Langevin };

struct LocalEntropyConfig {
  double gamma = 0.05;
  double beta = 1.0;
  std::size_t samples = 100;
  double dt = 1.0;
  std::size_t inner_steps = 4;
  InnerProposal proposal = InnerProposal::SmoothDrift;
  void validate() const;
};

struct LocalEntropyValue {
  double value = 0.0;
  double stderr = 0.0;
};

/// -beta^{-1} log mean_j e^{-beta V(x + Y_j)}, Y_j ~ N(0, gamma / beta I),
/// evaluated with a log-sum-exp shift. The standard error is the delta-method
/// estimate from the spread of the summands.
LocalEntropyValue local_entropy_value(const PotentialSpec& v, std::span<const double> x,
                                      const LocalEntropyConfig& cfg, Rng& rng);

struct LocalEntropyGradient {
  std::vector<double> gradient;
  std::vector<double> stderr;
  double inner_accept_rate = 0.0;
  /// Inner-chain acceptance fell below 1%; the estimate is unreliable.
  bool collapsed = false;
};

/// gamma^{-1} (x - mean_j Y_j) with Y_j the endpoint of an auxiliary chain
/// started at x. Samples run in parallel, each on its own derived stream.
LocalEntropyGradient local_entropy_gradient(const PotentialSpec& v, std::span<const double> x,
                                            const LocalEntropyConfig& cfg, Rng& rng);
/// Single-threaded reference; identical output for the same rng state.
LocalEntropyGradient local_entropy_gradient_serial(const PotentialSpec& v,
                                                   std::span<const double> x,
                                                   const LocalEntropyConfig& cfg, Rng& rng);

/// One Metropolis-adjusted step for e^{-beta (V(y) + |x - y|^2 / (2 gamma))}:
/// the quadratic part flows exactly, grad `drift` is frozen over the step.
/// Updates y in place and returns whether the move was accepted.
bool auxiliary_diffusion_step(std::span<double> y, std::span<const double> x,
                              const PotentialSpec& v, const PotentialSpec& drift, double gamma,
                              double beta, double dt, Rng& rng);

/// Same with drift = v.
bool auxiliary_diffusion_step(std::span<double> y, std::span<const double> x,
                              const PotentialSpec& v, double gamma, double beta, double dt,
                              Rng& rng);

}  // namespace roughmc
