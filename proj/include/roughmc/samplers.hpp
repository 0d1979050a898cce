#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "roughmc/potentials.hpp"
#include "roughmc/rng.hpp"

namespace roughmc {

enum class Method { RWM, MALA, TamedMALA, ModifiedMALA, Independence };

enum class AcceptanceRule {
  Metropolis,  // F(r) = min(1, e^r)
  Barker,      // F(r) = 1 / (1 + e^{-r})
};

std::string_view to_string(Method method);
std::string_view to_string(AcceptanceRule rule);
Method parse_method(std::string_view name);
AcceptanceRule parse_rule(std::string_view name);

/// Methods whose proposal depends on a step scale sigma.
bool uses_sigma(Method method);

/// Source of i.i.d. draws from the auxiliary density e^{-beta U}.
class AuxiliarySampler {
 public:
  virtual ~AuxiliarySampler() = default;
  virtual void sample(Rng& rng, std::span<double> out) const = 0;
};

struct SamplerConfig {
  Method method = Method::RWM;
  double sigma = 1.0;
  double beta = 1.0;
  AcceptanceRule rule = AcceptanceRule::Metropolis;
  /// Taming parameter; the tamed drift never exceeds sigma^2 / (2 tame_delta).
  double tame_delta = 0.0;
  /// Auxiliary potential U (ModifiedMALA drift, Independence proposal density).
  std::shared_ptr<const PotentialSpec> auxiliary;
  /// Draws from e^{-beta U} (Independence only).
  std::shared_ptr<const AuxiliarySampler> auxiliary_sampler;

  /// Throws std::invalid_argument when a parameter or handle required by the
  /// method is missing or out of range.
  void validate() const;
};

struct ChainState {
  std::vector<double> x;
  double energy = 0.0;
  /// U(x); only maintained for the Independence sampler.
  double aux_energy = 0.0;
  /// grad V(x) for MALA/TamedMALA, grad U(x) for ModifiedMALA, empty otherwise.
  std::vector<double> gradient;
  std::uint64_t step_index = 0;
};

struct StepRecord {
  bool accepted = false;
  /// Proposal energy (or ratio) was not finite; counted as a rejection.
  bool nonfinite = false;
  double log_ratio = 0.0;
  double sq_displacement = 0.0;
  double proposal_sq_displacement = 0.0;
};

struct Proposal {
  std::vector<double> y;
  /// log q(y -> x) - log q(x -> y).
  double log_q_ratio = 0.0;
};

/// Builds the cached state at x0. Throws on dimension mismatch.
ChainState make_state(const SamplerConfig& cfg, const PotentialSpec& potential,
                      std::span<const double> x0);

/// Acceptance probability F(R); R is clamped to [-700, 700] first.
double accept_prob(double log_ratio, AcceptanceRule rule);

/// Drift d(x) added to x by the proposal (zero for RWM and Independence).
void proposal_drift(const SamplerConfig& cfg, const PotentialSpec& potential,
                    std::span<const double> x, std::span<double> out);

Proposal propose(const ChainState& state, const SamplerConfig& cfg,
                 const PotentialSpec& potential, Rng& rng);

/// beta [V(x) - V(y)] + log q(y -> x) / q(x -> y), assembled per method.
double log_accept_ratio(std::span<const double> x, std::span<const double> y,
                        const SamplerConfig& cfg, const PotentialSpec& potential);

/// Scratch buffers for allocation-free stepping.
struct StepWorkspace {
  std::vector<double> y;
  std::vector<double> noise;
  std::vector<double> drift_x;
  std::vector<double> drift_y;
  std::vector<double> gradient_y;
};

/// One Metropolis-Hastings transition, in place. On rejection `state` is
/// left untouched apart from the step index.
StepRecord step(ChainState& state, const SamplerConfig& cfg, const PotentialSpec& potential,
                Rng& rng, StepWorkspace& work);
StepRecord step(ChainState& state, const SamplerConfig& cfg, const PotentialSpec& potential,
                Rng& rng);

struct ChainOptions {
  std::uint64_t steps = 0;
  std::uint64_t burn_in = 0;
  /// Keep every `thin`-th position in the trace (0 disables the trace).
  std::uint64_t thin = 0;
  bool keep_records = false;
  /// Batches for the batch-means standard error; 0 picks floor(sqrt(N)).
  std::uint64_t batches = 0;
  /// Called after every step, including burn-in.
  std::function<void(const ChainState&, const StepRecord&)> observer;
};

struct ChainDiagnostics {
  /// MSD over post-burn-in steps and its batch-means standard error.
  double msd = 0.0;
  double msd_stderr = 0.0;
  /// MSD over the whole run including burn-in.
  double msd_full = 0.0;
  double accept_rate = 0.0;
  double accept_rate_full = 0.0;
  std::uint64_t nonfinite = 0;
  std::uint64_t steps = 0;
  std::uint64_t burn_in = 0;
  std::vector<StepRecord> records;
  std::vector<std::vector<double>> trace;
  ChainState final_state;
};

/// Runs `steps` transitions from x0. Deterministic in `seed`.
ChainDiagnostics run_chain(const SamplerConfig& cfg, const PotentialSpec& potential,
                           std::span<const double> x0, const ChainOptions& options,
                           std::uint64_t seed);

/// Mean and batch-means standard error of a series.
struct BatchMeans {
  double mean = 0.0;
  double stderr = 0.0;
};
BatchMeans batch_means(std::span<const double> series, std::uint64_t batches = 0);

}  // namespace roughmc
