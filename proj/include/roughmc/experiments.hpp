#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "roughmc/potentials.hpp"
#include "roughmc/samplers.hpp"
#include "roughmc/smoothing.hpp"

namespace roughmc {

/// Potential family as written in a config file; builds a PotentialSpec per
/// (n, eps) cell.
struct PotentialConfig {
  PotentialKind kind = PotentialKind::SeparableRough;
  SmoothKind smooth = SmoothKind::Harmonic;
  double amplitude = 0.125;
  // random multiscale: either drawn from (modes, seed) or given explicitly.
  int modes = 10;
  std::uint64_t seed = 0;
  std::vector<double> coefficients;
  std::vector<double> wavenumbers;
  // quadratic: V = (curvature / 2) |x|^2 + offset, curvature = 1 / eps when
  // curvature_from_epsilon is set.
  double curvature = 1.0;
  double offset = 0.0;
  bool curvature_from_epsilon = false;

  PotentialSpec make(std::size_t n, double eps) const;
  static PotentialConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

enum class SigmaGridMode {
  Explicit,   // listed values
  LogRange,   // `count` log-spaced values on [lo, hi]
  EpsScaled,  // c * eps^alpha for each c in `c_values`
  Auto,       // coarse 4/decade scan, then 16/decade around the coarse argmax
};

struct SigmaGrid {
  SigmaGridMode mode = SigmaGridMode::Explicit;
  std::vector<double> values;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double alpha = 1.0;
  std::vector<double> c_values;
  // Auto: the coarse scan spans [min(c eps, c sqrt(eps)) 10^-below,
  // max(c eps, c sqrt(eps)) 10^above].
  double center_c = 1.0;
  double decades_below = 1.0;
  double decades_above = 1.0;

  /// Grid for one eps; for Auto this is the coarse scan.
  std::vector<double> resolve(double eps) const;
  static SigmaGrid from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Starting point of every chain.
enum class StartPoint { Auto, Zero, MinusOne };

struct SweepConfig {
  int schema_version = 1;
  std::vector<Method> methods;
  PotentialConfig potential;
  double beta = 5.0;
  std::vector<std::size_t> dims;
  std::vector<double> eps;
  SigmaGrid sigma;
  std::uint64_t steps = 1'000'000;
  /// Defaults to steps / 10.
  std::optional<std::uint64_t> burn_in;
  std::size_t replicas = 1;
  std::uint64_t master_seed = 0;
  StartPoint start = StartPoint::Auto;
  AcceptanceRule rule = AcceptanceRule::Metropolis;
  double tame_delta = 0.1;
  std::string csv_path;
  std::string json_path;
  bool merge_replicas = true;
  /// Wall time is written as 0 unless set, so that replays are byte-identical.
  bool record_walltime = false;

  std::uint64_t effective_burn_in() const { return burn_in ? *burn_in : steps / 10; }
  std::vector<double> start_point(std::size_t n) const;
  /// Throws std::invalid_argument on any inconsistency.
  void validate() const;
  static SweepConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

SweepConfig load_sweep_config(const std::string& path);

struct SweepRecord {
  Method method = Method::RWM;
  std::size_t n = 1;
  double epsilon = 0.0;
  /// 0 for the sigma-free independence sampler.
  double sigma = 0.0;
  double msd = 0.0;
  double msd_stderr = 0.0;
  double msd_full = 0.0;
  double accept_rate = 0.0;
  std::uint64_t nonfinite = 0;
  std::uint64_t seed = 0;
  /// -1 once replicas are merged.
  int replica = -1;
  double walltime_s = 0.0;
  /// Non-empty when the cell's chain threw; the sweep carries on.
  std::string error;
};

/// Runs every (method, n, eps, sigma, replica) cell; cells run in parallel
/// with seeds derived from the master seed and the cell identity.
std::vector<SweepRecord> run_sigma_sweep(const SweepConfig& cfg);
/// Single-threaded reference; identical records (wall time aside).
std::vector<SweepRecord> run_sigma_sweep_serial(const SweepConfig& cfg);

/// Averages replicas of each cell; stderr = sqrt(sum se^2) / R.
std::vector<SweepRecord> merge_replicas(const std::vector<SweepRecord>& records);

struct OptimalSigma {
  Method method = Method::RWM;
  std::size_t n = 1;
  double epsilon = 0.0;
  double sigma = 0.0;
  double msd = 0.0;
  double msd_stderr = 0.0;
  double accept_rate = 0.0;
  /// Argmax sits at the first or last grid point.
  bool endpoint = false;
  /// Every MSD on the grid is zero.
  bool stagnant = false;
  bool sigma_free = false;
};

/// Argmax of MSD over the sigma grid of one (method, n, eps); ties go to the
/// smaller sigma. Needs >= 3 grid points unless the method is sigma-free.
OptimalSigma optimal_sigma(const std::vector<SweepRecord>& records);

/// optimal_sigma for every (method, n, eps) group, in first-seen order.
std::vector<OptimalSigma> optimal_sigmas(const std::vector<SweepRecord>& records);

struct ScalingFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
};

/// Least-squares slope of log sigma* against log eps; needs >= 4 points.
ScalingFit scaling_fit(const std::vector<double>& eps, const std::vector<double>& sigma_star);

struct AmplificationRow {
  double epsilon = 0.0;
  std::size_t n = 1;
  Method method = Method::RWM;
  double sigma = 0.0;
  double msd = 0.0;
  double ratio = 0.0;
};

/// Optimal MSD of each method over the RWM optimum at the same (n, eps).
/// Throws std::invalid_argument if a group lacks RWM records.
std::vector<AmplificationRow> amplification_table(const std::vector<SweepRecord>& records);

void write_records_csv(std::ostream& out, const std::vector<SweepRecord>& records);
void write_records_csv(const std::string& path, const std::vector<SweepRecord>& records);
std::vector<SweepRecord> read_records_csv(std::istream& in);
std::vector<SweepRecord> read_records_csv(const std::string& path);

void write_amplification_csv(std::ostream& out, const std::vector<AmplificationRow>& rows);
std::string render_amplification_text(const std::vector<AmplificationRow>& rows);

/// Full config (with drawn random coefficients), records and optima.
nlohmann::json sweep_summary(const SweepConfig& cfg, const std::vector<SweepRecord>& records);
void write_json(const std::string& path, const nlohmann::json& j);

/// Config of the `gap` subcommand.
struct GapConfig {
  int schema_version = 1;
  std::vector<Method> methods;
  PotentialConfig potential;
  double beta = 5.0;
  std::vector<double> eps;
  SigmaGrid sigma;
  /// Grid window; when a >= b the window is sized from mu0.
  double a = 0.0;
  double b = 0.0;
  std::size_t points = 1024;
  AcceptanceRule rule = AcceptanceRule::Metropolis;
  double tame_delta = 0.1;
  /// Conductance set K = {|x| > threshold}.
  double conductance_threshold = 1.0;
  std::string csv_path;

  static GapConfig from_json(const nlohmann::json& j);
};

struct GapRecord {
  Method method = Method::RWM;
  double epsilon = 0.0;
  double sigma = 0.0;
  std::size_t points = 0;
  double gap = 0.0;
  double lambda2 = 0.0;
  /// NaN when mu(K) falls outside (0, 1/2).
  double conductance_bound = 0.0;
};

std::vector<GapRecord> run_gap_sweep(const GapConfig& cfg);
void write_gap_csv(std::ostream& out, const std::vector<GapRecord>& records);

/// Config of the `smooth` subcommand (one-dimensional potentials).
struct SmoothConfig {
  int schema_version = 1;
  PotentialConfig potential;
  double eps = 1.0;
  double gamma = 0.05;
  double beta = 1.0;
  std::size_t samples = 1000;
  double dt = 1.0;
  std::size_t inner_steps = 4;
  InnerProposal proposal = InnerProposal::SmoothDrift;
  double x_start = -1.5;
  double x_stop = 1.5;
  std::size_t x_count = 61;
  std::uint64_t seed = 0;
  std::string csv_path;

  static SmoothConfig from_json(const nlohmann::json& j);
};

struct SmoothRow {
  double x = 0.0;
  double value = 0.0;
  double gradient = 0.0;
  double value_stderr = 0.0;
  double gradient_stderr = 0.0;
  bool collapsed = false;
};

std::vector<SmoothRow> run_smoothing(const SmoothConfig& cfg);
void write_smooth_csv(std::ostream& out, const std::vector<SmoothRow>& rows);

/// Named closed-form and quadrature results.
nlohmann::json analytic_summary();

}  // namespace roughmc
