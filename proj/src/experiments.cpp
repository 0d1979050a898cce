#include "roughmc/experiments.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "roughmc/analytic.hpp"
#include "roughmc/smoothing.hpp"
#include "roughmc/spectral.hpp"

namespace roughmc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr char kCsvHeader[] = "method,n,epsilon,sigma,msd,msd_stderr,accept_rate,nonfinite,seed,walltime_s";

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<Method> parse_methods(const nlohmann::json& j) {
  std::vector<Method> out;
  for (const auto& m : j) out.push_back(parse_method(m.get<std::string>()));
  return out;
}

nlohmann::json methods_json(const std::vector<Method>& methods) {
  nlohmann::json out = nlohmann::json::array();
  for (Method m : methods) out.push_back(std::string(to_string(m)));
  return out;
}

void check_schema(const nlohmann::json& j) {
  const int version = j.value("schema_version", 0);
  if (version != 1)
    throw std::invalid_argument("unsupported config schema_version " + std::to_string(version) +
                                " (expected 1)");
}

std::string_view to_string(StartPoint s) {
  switch (s) {
    case StartPoint::Auto:
      return "auto";
    case StartPoint::Zero:
      return "zero";
    case StartPoint::MinusOne:
      return "minus_one";
  }
  return "auto";
}

StartPoint parse_start(const std::string& s) {
  if (s == "auto") return StartPoint::Auto;
  if (s == "zero") return StartPoint::Zero;
  if (s == "minus_one") return StartPoint::MinusOne;
  throw std::invalid_argument("unknown start point: " + s);
}

std::string_view to_string(SigmaGridMode m) {
  switch (m) {
    case SigmaGridMode::Explicit:
      return "explicit";
    case SigmaGridMode::LogRange:
      return "log_range";
    case SigmaGridMode::EpsScaled:
      return "eps_scaled";
    case SigmaGridMode::Auto:
      return "auto";
  }
  return "explicit";
}

// Auto grids live on the lattice sigma_k = 10^{k/16}.
constexpr int kFinePerDecade = 16;
constexpr int kCoarseStride = 4;

double lattice_sigma(int k) { return std::pow(10.0, static_cast<double>(k) / kFinePerDecade); }
int lattice_index(double sigma) {
  return static_cast<int>(std::lround(kFinePerDecade * std::log10(sigma)));
}

}  // namespace

// ---- potential config -------------------------------------------------------

PotentialSpec PotentialConfig::make(std::size_t n, double eps) const {
  switch (kind) {
    case PotentialKind::SeparableRough:
      return PotentialSpec::separable_rough(smooth, n, eps, amplitude);
    case PotentialKind::RandomMultiscale:
      if (n != 1) throw std::invalid_argument("random multiscale potential is one-dimensional");
      if (coefficients.empty()) return draw_random_multiscale(modes, seed);
      return PotentialSpec::random_multiscale(coefficients, wavenumbers);
    case PotentialKind::Quadratic:
      return PotentialSpec::quadratic(n, curvature_from_epsilon ? 1.0 / eps : curvature, offset);
  }
  throw std::invalid_argument("unknown potential kind");
}

PotentialConfig PotentialConfig::from_json(const nlohmann::json& j) {
  PotentialConfig p;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "separable_rough") {
    p.kind = PotentialKind::SeparableRough;
    p.smooth = parse_smooth_kind(j.value("smooth", std::string("harmonic")));
    p.amplitude = j.value("amplitude", 0.125);
  } else if (kind == "random_multiscale") {
    p.kind = PotentialKind::RandomMultiscale;
    p.smooth = SmoothKind::DoubleWell;
    if (j.contains("coefficients")) {
      p.coefficients = j.at("coefficients").get<std::vector<double>>();
      p.wavenumbers = j.at("wavenumbers").get<std::vector<double>>();
      p.modes = static_cast<int>(p.coefficients.size());
    } else {
      p.modes = j.value("modes", 10);
      p.seed = j.value("seed", std::uint64_t{0});
      const PotentialSpec drawn = draw_random_multiscale(p.modes, p.seed);
      p.coefficients = drawn.coefficients();
      p.wavenumbers = drawn.wavenumbers();
    }
    p.seed = j.value("seed", p.seed);
  } else if (kind == "quadratic") {
    p.kind = PotentialKind::Quadratic;
    p.curvature = j.value("curvature", 1.0);
    p.offset = j.value("offset", 0.0);
    p.curvature_from_epsilon = j.value("curvature_from_epsilon", false);
  } else {
    throw std::invalid_argument("unknown potential kind: " + kind);
  }
  return p;
}

nlohmann::json PotentialConfig::to_json() const {
  nlohmann::json j;
  j["kind"] = std::string(to_string(kind));
  switch (kind) {
    case PotentialKind::SeparableRough:
      j["smooth"] = std::string(to_string(smooth));
      j["amplitude"] = amplitude;
      break;
    case PotentialKind::RandomMultiscale:
      j["modes"] = modes;
      j["seed"] = seed;
      j["coefficients"] = coefficients;
      j["wavenumbers"] = wavenumbers;
      break;
    case PotentialKind::Quadratic:
      j["curvature"] = curvature;
      j["offset"] = offset;
      j["curvature_from_epsilon"] = curvature_from_epsilon;
      break;
  }
  return j;
}

// ---- sigma grid -------------------------------------------------------------

std::vector<double> SigmaGrid::resolve(double eps) const {
  std::vector<double> out;
  switch (mode) {
    case SigmaGridMode::Explicit:
      out = values;
      break;
    case SigmaGridMode::LogRange: {
      if (count < 2 || !(lo > 0.0) || !(hi > lo))
        throw std::invalid_argument("log_range sigma grid needs 0 < lo < hi and count >= 2");
      const double step = std::log(hi / lo) / static_cast<double>(count - 1);
      for (std::size_t i = 0; i < count; ++i)
        out.push_back(lo * std::exp(step * static_cast<double>(i)));
      break;
    }
    case SigmaGridMode::EpsScaled:
      for (double c : c_values) out.push_back(c * std::pow(eps, alpha));
      break;
    case SigmaGridMode::Auto: {
      const double a = center_c * eps;
      const double b = center_c * std::sqrt(eps);
      const double low = std::min(a, b) * std::pow(10.0, -decades_below);
      const double high = std::max(a, b) * std::pow(10.0, decades_above);
      const int k0 = static_cast<int>(std::floor(kFinePerDecade * std::log10(low) / kCoarseStride)) *
                     kCoarseStride;
      const int k1 = static_cast<int>(std::ceil(kFinePerDecade * std::log10(high) / kCoarseStride)) *
                     kCoarseStride;
      for (int k = k0; k <= k1; k += kCoarseStride) out.push_back(lattice_sigma(k));
      break;
    }
  }
  for (double s : out)
    if (!(s > 0.0) || !std::isfinite(s))
      throw std::invalid_argument("sigma grid values must be finite and > 0");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SigmaGrid SigmaGrid::from_json(const nlohmann::json& j) {
  SigmaGrid g;
  if (j.is_array()) {
    g.values = j.get<std::vector<double>>();
    return g;
  }
  const std::string mode = j.value("mode", std::string("explicit"));
  if (mode == "explicit") {
    g.mode = SigmaGridMode::Explicit;
    g.values = j.at("values").get<std::vector<double>>();
  } else if (mode == "log_range") {
    g.mode = SigmaGridMode::LogRange;
    g.lo = j.at("lo").get<double>();
    g.hi = j.at("hi").get<double>();
    g.count = j.at("count").get<std::size_t>();
  } else if (mode == "eps_scaled") {
    g.mode = SigmaGridMode::EpsScaled;
    g.alpha = j.value("alpha", 1.0);
    g.c_values = j.at("c").get<std::vector<double>>();
  } else if (mode == "auto") {
    g.mode = SigmaGridMode::Auto;
    g.center_c = j.value("c", 1.0);
    g.decades_below = j.value("decades_below", 1.0);
    g.decades_above = j.value("decades_above", 1.0);
  } else {
    throw std::invalid_argument("unknown sigma grid mode: " + mode);
  }
  return g;
}

nlohmann::json SigmaGrid::to_json() const {
  nlohmann::json j;
  j["mode"] = std::string(to_string(mode));
  switch (mode) {
    case SigmaGridMode::Explicit:
      j["values"] = values;
      break;
    case SigmaGridMode::LogRange:
      j["lo"] = lo;
      j["hi"] = hi;
      j["count"] = count;
      break;
    case SigmaGridMode::EpsScaled:
      j["alpha"] = alpha;
      j["c"] = c_values;
      break;
    case SigmaGridMode::Auto:
      j["c"] = center_c;
      j["decades_below"] = decades_below;
      j["decades_above"] = decades_above;
      break;
  }
  return j;
}

// ---- sweep config -----------------------------------------------------------

std::vector<double> SweepConfig::start_point(std::size_t n) const {
  StartPoint s = start;
  if (s == StartPoint::Auto) {
    const bool well = potential.kind == PotentialKind::RandomMultiscale ||
                      (potential.kind == PotentialKind::SeparableRough &&
                       potential.smooth == SmoothKind::DoubleWell);
    s = well ? StartPoint::MinusOne : StartPoint::Zero;
  }
  return std::vector<double>(n, s == StartPoint::MinusOne ? -1.0 : 0.0);
}

void SweepConfig::validate() const {
  if (schema_version != 1) throw std::invalid_argument("schema_version must be 1");
  if (methods.empty() || dims.empty() || eps.empty())
    throw std::invalid_argument("methods, dims and eps must be non-empty");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  for (std::size_t n : dims)
    if (n == 0) throw std::invalid_argument("dimensions must be >= 1");
  for (double e : eps)
    if (!(e > 0.0)) throw std::invalid_argument("eps values must be > 0");
  if (steps <= effective_burn_in()) throw std::invalid_argument("steps must exceed burn_in");
  if (replicas == 0) throw std::invalid_argument("replicas must be >= 1");
  const bool needs_sigma = std::any_of(methods.begin(), methods.end(), uses_sigma);
  if (needs_sigma)
    for (double e : eps) (void)sigma.resolve(e);
  for (Method m : methods)
    if (m == Method::TamedMALA && !(tame_delta > 0.0))
      throw std::invalid_argument("TamedMALA requires tame_delta > 0");
  if (potential.kind == PotentialKind::RandomMultiscale)
    for (std::size_t n : dims)
      if (n != 1) throw std::invalid_argument("random multiscale potential is one-dimensional");
}

SweepConfig SweepConfig::from_json(const nlohmann::json& j) {
  check_schema(j);
  SweepConfig c;
  c.methods = parse_methods(j.at("methods"));
  c.potential = PotentialConfig::from_json(j.at("potential"));
  c.beta = j.value("beta", 5.0);
  c.dims = j.value("dims", std::vector<std::size_t>{1});
  if (c.potential.kind == PotentialKind::RandomMultiscale)
    c.eps = {c.potential.make(1, 1.0).epsilon()};
  else
    c.eps = j.at("eps").get<std::vector<double>>();
  if (j.contains("sigma")) c.sigma = SigmaGrid::from_json(j.at("sigma"));
  c.steps = j.value("steps", c.steps);
  if (j.contains("burn_in")) c.burn_in = j.at("burn_in").get<std::uint64_t>();
  c.replicas = j.value("replicas", c.replicas);
  c.master_seed = j.value("master_seed", c.master_seed);
  c.start = parse_start(j.value("start", std::string("auto")));
  c.rule = parse_rule(j.value("rule", std::string("metropolis")));
  c.tame_delta = j.value("tame_delta", c.tame_delta);
  c.csv_path = j.value("csv", std::string());
  c.json_path = j.value("json", std::string());
  c.merge_replicas = j.value("merge_replicas", c.merge_replicas);
  c.record_walltime = j.value("record_walltime", c.record_walltime);
  c.validate();
  return c;
}

nlohmann::json SweepConfig::to_json() const {
  nlohmann::json j;
  j["schema_version"] = schema_version;
  j["methods"] = methods_json(methods);
  j["potential"] = potential.to_json();
  j["beta"] = beta;
  j["dims"] = dims;
  j["eps"] = eps;
  j["sigma"] = sigma.to_json();
  j["steps"] = steps;
  j["burn_in"] = effective_burn_in();
  j["replicas"] = replicas;
  j["master_seed"] = master_seed;
  j["start"] = std::string(to_string(start));
  j["rule"] = std::string(to_string(rule));
  j["tame_delta"] = tame_delta;
  j["csv"] = csv_path;
  j["json"] = json_path;
  j["merge_replicas"] = merge_replicas;
  j["record_walltime"] = record_walltime;
  return j;
}

SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return SweepConfig::from_json(nlohmann::json::parse(in));
}

// ---- sweep ------------------------------------------------------------------

namespace {

struct Cell {
  std::size_t method = 0;  // index into cfg.methods
  std::size_t dim = 0;     // index into cfg.dims
  std::size_t eps = 0;     // index into cfg.eps
  double sigma = 0.0;
  std::size_t replica = 0;
};

struct Landscape {
  std::shared_ptr<const PotentialSpec> spec;
  std::shared_ptr<const PotentialSpec> auxiliary;
  std::shared_ptr<const AuxiliarySampler> sampler;
};

using LandscapeTable = std::vector<std::vector<Landscape>>;  // [dim][eps]

LandscapeTable build_landscapes(const SweepConfig& cfg) {
  const bool needs_aux = std::any_of(cfg.methods.begin(), cfg.methods.end(), [](Method m) {
    return m == Method::ModifiedMALA || m == Method::Independence;
  });
  LandscapeTable table(cfg.dims.size(), std::vector<Landscape>(cfg.eps.size()));
  for (std::size_t d = 0; d < cfg.dims.size(); ++d) {
    for (std::size_t e = 0; e < cfg.eps.size(); ++e) {
      Landscape& l = table[d][e];
      l.spec = std::make_shared<const PotentialSpec>(cfg.potential.make(cfg.dims[d], cfg.eps[e]));
      if (needs_aux) {
        SamplerConfig tmp;
        tmp.beta = cfg.beta;
        attach_smooth_auxiliary(tmp, *l.spec);
        l.auxiliary = tmp.auxiliary;
        l.sampler = tmp.auxiliary_sampler;
      }
    }
  }
  return table;
}

std::uint64_t cell_seed(const SweepConfig& cfg, const Cell& c) {
  std::uint64_t s = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(cfg.methods[c.method]));
  s = derive_seed(s, cfg.dims[c.dim]);
  s = derive_seed(s, c.eps);
  s = derive_seed(s, std::bit_cast<std::uint64_t>(c.sigma));
  return derive_seed(s, c.replica);
}

SweepRecord run_cell(const SweepConfig& cfg, const LandscapeTable& land, const Cell& c) {
  const Landscape& l = land[c.dim][c.eps];
  SweepRecord r;
  r.method = cfg.methods[c.method];
  r.n = cfg.dims[c.dim];
  r.epsilon = cfg.eps[c.eps];
  r.sigma = c.sigma;
  r.replica = static_cast<int>(c.replica);
  r.seed = cell_seed(cfg, c);

  SamplerConfig sc;
  sc.method = r.method;
  sc.sigma = uses_sigma(r.method) ? c.sigma : 1.0;
  sc.beta = cfg.beta;
  sc.rule = cfg.rule;
  sc.tame_delta = cfg.tame_delta;
  sc.auxiliary = l.auxiliary;
  sc.auxiliary_sampler = l.sampler;
  ChainOptions opt;
  opt.steps = cfg.steps;
  opt.burn_in = cfg.effective_burn_in();

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const std::vector<double> x0 = cfg.start_point(r.n);
    const ChainDiagnostics d = run_chain(sc, *l.spec, x0, opt, r.seed);
    r.msd = d.msd;
    r.msd_stderr = d.msd_stderr;
    r.msd_full = d.msd_full;
    r.accept_rate = d.accept_rate;
    r.nonfinite = d.nonfinite;
  } catch (const std::exception& e) {
    r.msd = r.msd_stderr = r.msd_full = r.accept_rate = kNaN;
    r.error = e.what();
  }
  if (cfg.record_walltime)
    r.walltime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<SweepRecord> run_cells(const SweepConfig& cfg, const LandscapeTable& land,
                                   const std::vector<Cell>& cells, bool parallel) {
  std::vector<SweepRecord> out(cells.size());
  const auto count = static_cast<std::ptrdiff_t>(cells.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i)
      out[static_cast<std::size_t>(i)] = run_cell(cfg, land, cells[static_cast<std::size_t>(i)]);
  } else {
    for (std::size_t i = 0; i < cells.size(); ++i) out[i] = run_cell(cfg, land, cells[i]);
  }
  return out;
}

// Mean MSD per sigma (over replicas) of one group; errored cells are skipped.
int coarse_argmax(const std::vector<SweepRecord>& group) {
  std::map<double, std::pair<double, int>> by_sigma;
  for (const SweepRecord& r : group) {
    auto& [sum, count] = by_sigma[r.sigma];
    if (!std::isnan(r.msd)) {
      sum += r.msd;
      ++count;
    }
  }
  double best = -1.0;
  double best_sigma = group.front().sigma;
  for (const auto& [sigma, acc] : by_sigma) {
    const double m = acc.second ? acc.first / acc.second : -1.0;
    if (m > best) {
      best = m;
      best_sigma = sigma;
    }
  }
  return lattice_index(best_sigma);
}

std::vector<SweepRecord> sweep(const SweepConfig& cfg, bool parallel) {
  cfg.validate();
  const LandscapeTable land = build_landscapes(cfg);
  std::vector<Cell> cells;
  for (std::size_t m = 0; m < cfg.methods.size(); ++m)
    for (std::size_t d = 0; d < cfg.dims.size(); ++d)
      for (std::size_t e = 0; e < cfg.eps.size(); ++e) {
        const std::vector<double> sigmas =
            uses_sigma(cfg.methods[m]) ? cfg.sigma.resolve(cfg.eps[e]) : std::vector<double>{0.0};
        for (double s : sigmas)
          for (std::size_t r = 0; r < cfg.replicas; ++r) cells.push_back({m, d, e, s, r});
      }
  std::vector<SweepRecord> records = run_cells(cfg, land, cells, parallel);

  if (cfg.sigma.mode == SigmaGridMode::Auto) {
    // Refine at 16/decade within two coarse steps of each group's coarse optimum.
    std::vector<Cell> fine;
    std::size_t begin = 0;
    while (begin < cells.size()) {
      std::size_t end = begin;
      while (end < cells.size() && cells[end].method == cells[begin].method &&
             cells[end].dim == cells[begin].dim && cells[end].eps == cells[begin].eps)
        ++end;
      if (uses_sigma(cfg.methods[cells[begin].method])) {
        const std::vector<SweepRecord> group(records.begin() + static_cast<std::ptrdiff_t>(begin),
                                             records.begin() + static_cast<std::ptrdiff_t>(end));
        const int k0 = coarse_argmax(group);
        for (int k = k0 - 2 * kCoarseStride; k <= k0 + 2 * kCoarseStride; ++k) {
          if (k % kCoarseStride == 0) continue;
          for (std::size_t r = 0; r < cfg.replicas; ++r)
            fine.push_back({cells[begin].method, cells[begin].dim, cells[begin].eps,
                            lattice_sigma(k), r});
        }
      }
      begin = end;
    }
    std::vector<SweepRecord> refined = run_cells(cfg, land, fine, parallel);
    cells.insert(cells.end(), fine.begin(), fine.end());
    records.insert(records.end(), refined.begin(), refined.end());
  }

  std::vector<std::size_t> order(cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Cell& x = cells[a];
    const Cell& y = cells[b];
    return std::tie(x.method, x.dim, x.eps, x.sigma, x.replica) <
           std::tie(y.method, y.dim, y.eps, y.sigma, y.replica);
  });
  std::vector<SweepRecord> sorted;
  sorted.reserve(order.size());
  for (std::size_t i : order) sorted.push_back(records[i]);
  for (const SweepRecord& r : sorted)
    if (!r.error.empty())
      std::fprintf(stderr, "warning: cell %s n=%zu eps=%g sigma=%g failed: %s\n",
                   std::string(to_string(r.method)).c_str(), r.n, r.epsilon, r.sigma,
                   r.error.c_str());
  return cfg.merge_replicas ? merge_replicas(sorted) : sorted;
}

}  // namespace

std::vector<SweepRecord> run_sigma_sweep(const SweepConfig& cfg) { return sweep(cfg, true); }
std::vector<SweepRecord> run_sigma_sweep_serial(const SweepConfig& cfg) {
  return sweep(cfg, false);
}

std::vector<SweepRecord> merge_replicas(const std::vector<SweepRecord>& records) {
  std::vector<SweepRecord> out;
  std::size_t i = 0;
  while (i < records.size()) {
    const SweepRecord& first = records[i];
    std::size_t j = i;
    SweepRecord m = first;
    double msd = 0.0, full = 0.0, acc = 0.0, se2 = 0.0, wall = 0.0;
    std::uint64_t nonfinite = 0;
    std::string error;
    for (; j < records.size(); ++j) {
      const SweepRecord& r = records[j];
      if (r.method != first.method || r.n != first.n || r.epsilon != first.epsilon ||
          r.sigma != first.sigma)
        break;
      msd += r.msd;
      full += r.msd_full;
      acc += r.accept_rate;
      se2 += r.msd_stderr * r.msd_stderr;
      wall += r.walltime_s;
      nonfinite += r.nonfinite;
      if (error.empty()) error = r.error;
    }
    const double count = static_cast<double>(j - i);
    m.msd = msd / count;
    m.msd_full = full / count;
    m.accept_rate = acc / count;
    m.msd_stderr = std::sqrt(se2) / count;
    m.walltime_s = wall;
    m.nonfinite = nonfinite;
    m.replica = -1;
    m.error = error;
    out.push_back(m);
    i = j;
  }
  return out;
}

// ---- optimal sigma, scaling, amplification ---------------------------------

OptimalSigma optimal_sigma(const std::vector<SweepRecord>& records) {
  if (records.empty()) throw std::invalid_argument("optimal_sigma: no records");
  const SweepRecord& head = records.front();
  for (const SweepRecord& r : records)
    if (r.method != head.method || r.n != head.n || r.epsilon != head.epsilon)
      throw std::invalid_argument("optimal_sigma: records span several (method, n, eps) groups");
  std::vector<SweepRecord> merged = records;
  std::stable_sort(merged.begin(), merged.end(),
                   [](const SweepRecord& a, const SweepRecord& b) { return a.sigma < b.sigma; });
  merged = merge_replicas(merged);

  OptimalSigma o;
  o.method = head.method;
  o.n = head.n;
  o.epsilon = head.epsilon;
  if (!uses_sigma(head.method)) {
    if (merged.size() != 1)
      throw std::invalid_argument("optimal_sigma: sigma-free method must have a single record");
    o.sigma_free = true;
    o.msd = merged[0].msd;
    o.msd_stderr = merged[0].msd_stderr;
    o.accept_rate = merged[0].accept_rate;
    o.stagnant = !(o.msd > 0.0);
    return o;
  }
  if (merged.size() < 3) throw std::invalid_argument("optimal_sigma: need >= 3 grid points");
  std::size_t best = merged.size();
  for (std::size_t i = 0; i < merged.size(); ++i) {
    if (std::isnan(merged[i].msd)) continue;
    if (best == merged.size() || merged[i].msd > merged[best].msd) best = i;
  }
  if (best == merged.size() || !(merged[best].msd > 0.0)) {
    o.stagnant = true;
    o.sigma = merged.front().sigma;
    return o;
  }
  o.sigma = merged[best].sigma;
  o.msd = merged[best].msd;
  o.msd_stderr = merged[best].msd_stderr;
  o.accept_rate = merged[best].accept_rate;
  o.endpoint = best == 0 || best + 1 == merged.size();
  return o;
}

std::vector<OptimalSigma> optimal_sigmas(const std::vector<SweepRecord>& records) {
  std::vector<std::tuple<Method, std::size_t, double>> keys;
  std::map<std::tuple<Method, std::size_t, double>, std::vector<SweepRecord>> groups;
  for (const SweepRecord& r : records) {
    const auto key = std::make_tuple(r.method, r.n, r.epsilon);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(r);
  }
  std::vector<OptimalSigma> out;
  for (const auto& key : keys) out.push_back(optimal_sigma(groups[key]));
  return out;
}

ScalingFit scaling_fit(const std::vector<double>& eps, const std::vector<double>& sigma_star) {
  if (eps.size() != sigma_star.size()) throw std::invalid_argument("scaling_fit: size mismatch");
  if (eps.size() < 4) throw std::invalid_argument("scaling_fit: need >= 4 points");
  const auto n = static_cast<double>(eps.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || !(sigma_star[i] > 0.0))
      throw std::invalid_argument("scaling_fit: values must be > 0");
    mx += std::log(eps[i]);
    my += std::log(sigma_star[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double dx = std::log(eps[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(sigma_star[i]) - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("scaling_fit: eps values must differ");
  ScalingFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double r = std::log(sigma_star[i]) - f.intercept - f.slope * std::log(eps[i]);
    rss += r * r;
  }
  f.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  return f;
}

std::vector<AmplificationRow> amplification_table(const std::vector<SweepRecord>& records) {
  const std::vector<OptimalSigma> optima = optimal_sigmas(records);
  std::vector<std::pair<std::size_t, double>> groups;
  for (const OptimalSigma& o : optima)
    if (std::find(groups.begin(), groups.end(), std::make_pair(o.n, o.epsilon)) == groups.end())
      groups.emplace_back(o.n, o.epsilon);
  std::vector<AmplificationRow> rows;
  for (const auto& [n, eps] : groups) {
    const auto base = std::find_if(optima.begin(), optima.end(), [&](const OptimalSigma& o) {
      return o.method == Method::RWM && o.n == n && o.epsilon == eps;
    });
    if (base == optima.end()) {
      std::ostringstream msg;
      msg << "amplification_table: missing RWM baseline for n=" << n << ", eps=" << eps;
      throw std::invalid_argument(msg.str());
    }
    rows.push_back({eps, n, Method::RWM, base->sigma, base->msd, 1.0});
    for (const OptimalSigma& o : optima) {
      if (o.n != n || o.epsilon != eps || o.method == Method::RWM) continue;
      rows.push_back({eps, n, o.method, o.sigma, o.msd, o.msd / base->msd});
    }
  }
  return rows;
}

// ---- I/O --------------------------------------------------------------------

void write_records_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  out << kCsvHeader << '\n';
  for (const SweepRecord& r : records)
    out << to_string(r.method) << ',' << r.n << ',' << fmt(r.epsilon) << ',' << fmt(r.sigma) << ','
        << fmt(r.msd) << ',' << fmt(r.msd_stderr) << ',' << fmt(r.accept_rate) << ','
        << r.nonfinite << ',' << r.seed << ',' << fmt(r.walltime_s) << '\n';
}

void write_records_csv(const std::string& path, const std::vector<SweepRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_records_csv(out, records);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<SweepRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw std::runtime_error("unexpected CSV header; expected: " + std::string(kCsvHeader));
  std::vector<SweepRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10)
      throw std::runtime_error("CSV line " + std::to_string(lineno) + ": expected 10 fields");
    try {
      SweepRecord r;
      r.method = parse_method(f[0]);
      r.n = std::stoull(f[1]);
      r.epsilon = std::stod(f[2]);
      r.sigma = std::stod(f[3]);
      r.msd = std::stod(f[4]);
      r.msd_stderr = std::stod(f[5]);
      r.accept_rate = std::stod(f[6]);
      r.nonfinite = std::stoull(f[7]);
      r.seed = std::stoull(f[8]);
      r.walltime_s = std::stod(f[9]);
      out.push_back(r);
    } catch (const std::exception& e) {
      throw std::runtime_error("CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<SweepRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  return read_records_csv(in);
}

void write_amplification_csv(std::ostream& out, const std::vector<AmplificationRow>& rows) {
  out << "epsilon,n,method,optimal_sigma,optimal_msd,ratio\n";
  for (const AmplificationRow& r : rows)
    out << fmt(r.epsilon) << ',' << r.n << ',' << to_string(r.method) << ',' << fmt(r.sigma) << ','
        << fmt(r.msd) << ',' << fmt(r.ratio) << '\n';
}

std::string render_amplification_text(const std::vector<AmplificationRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(12) << "epsilon" << std::setw(6) << "n" << std::setw(14)
      << "method" << std::right << std::setw(14) << "sigma*" << std::setw(14) << "MSD*"
      << std::setw(10) << "ratio" << '\n';
  for (const AmplificationRow& r : rows) {
    out << std::left << std::setw(12) << std::setprecision(6) << r.epsilon << std::setw(6) << r.n
        << std::setw(14) << to_string(r.method) << std::right << std::setw(14)
        << std::setprecision(5) << r.sigma << std::setw(14) << r.msd << std::setw(10)
        << std::fixed << std::setprecision(2) << r.ratio << std::defaultfloat << '\n';
  }
  return out.str();
}

nlohmann::json sweep_summary(const SweepConfig& cfg, const std::vector<SweepRecord>& records) {
  nlohmann::json j;
  j["config"] = cfg.to_json();
  nlohmann::json recs = nlohmann::json::array();
  for (const SweepRecord& r : records) {
    nlohmann::json e;
    e["method"] = std::string(to_string(r.method));
    e["n"] = r.n;
    e["epsilon"] = r.epsilon;
    e["sigma"] = r.sigma;
    e["msd"] = std::isnan(r.msd) ? nlohmann::json() : nlohmann::json(r.msd);
    e["msd_stderr"] = std::isnan(r.msd_stderr) ? nlohmann::json() : nlohmann::json(r.msd_stderr);
    e["msd_full"] = std::isnan(r.msd_full) ? nlohmann::json() : nlohmann::json(r.msd_full);
    e["accept_rate"] =
        std::isnan(r.accept_rate) ? nlohmann::json() : nlohmann::json(r.accept_rate);
    e["nonfinite"] = r.nonfinite;
    e["seed"] = r.seed;
    e["replica"] = r.replica;
    e["walltime_s"] = r.walltime_s;
    if (!r.error.empty()) e["error"] = r.error;
    recs.push_back(e);
  }
  j["records"] = recs;
  nlohmann::json optima = nlohmann::json::array();
  try {
    for (const OptimalSigma& o : optimal_sigmas(records)) {
      optima.push_back({{"method", std::string(to_string(o.method))},
                        {"n", o.n},
                        {"epsilon", o.epsilon},
                        {"sigma", o.sigma},
                        {"msd", o.msd},
                        {"msd_stderr", o.msd_stderr},
                        {"accept_rate", o.accept_rate},
                        {"endpoint", o.endpoint},
                        {"stagnant", o.stagnant},
                        {"sigma_free", o.sigma_free}});
    }
  } catch (const std::invalid_argument& e) {
    j["optima_error"] = e.what();
  }
  j["optima"] = optima;
  return j;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---- gap --------------------------------------------------------------------

GapConfig GapConfig::from_json(const nlohmann::json& j) {
  check_schema(j);
  GapConfig c;
  c.methods = parse_methods(j.at("methods"));
  c.potential = PotentialConfig::from_json(j.at("potential"));
  c.beta = j.value("beta", c.beta);
  if (c.potential.kind == PotentialKind::RandomMultiscale)
    c.eps = {c.potential.make(1, 1.0).epsilon()};
  else
    c.eps = j.at("eps").get<std::vector<double>>();
  if (j.contains("sigma")) c.sigma = SigmaGrid::from_json(j.at("sigma"));
  if (c.sigma.mode == SigmaGridMode::Auto)
    throw std::invalid_argument("gap: auto sigma grids are not supported");
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    c.a = g.value("a", 0.0);
    c.b = g.value("b", 0.0);
    c.points = g.value("points", c.points);
  }
  c.rule = parse_rule(j.value("rule", std::string("metropolis")));
  c.tame_delta = j.value("tame_delta", c.tame_delta);
  c.conductance_threshold = j.value("conductance_threshold", c.conductance_threshold);
  c.csv_path = j.value("csv", std::string());
  if (c.methods.empty() || c.eps.empty())
    throw std::invalid_argument("gap: methods and eps must be non-empty");
  return c;
}

std::vector<GapRecord> run_gap_sweep(const GapConfig& cfg) {
  std::vector<GapRecord> out;
  for (double eps : cfg.eps) {
    const PotentialSpec spec = cfg.potential.make(1, eps);
    const Grid1D grid =
        cfg.b > cfg.a ? Grid1D{cfg.a, cfg.b, cfg.points} : Grid1D::covering(spec, cfg.beta, cfg.points);
    const std::vector<std::size_t> k =
        grid_set(grid, [&](double x) { return std::abs(x) > cfg.conductance_threshold; });
    for (Method m : cfg.methods) {
      SamplerConfig sc;
      sc.method = m;
      sc.beta = cfg.beta;
      sc.rule = cfg.rule;
      sc.tame_delta = cfg.tame_delta;
      if (m == Method::ModifiedMALA || m == Method::Independence) attach_smooth_auxiliary(sc, spec);
      const std::vector<double> sigmas =
          uses_sigma(m) ? cfg.sigma.resolve(eps) : std::vector<double>{0.0};
      for (double s : sigmas) {
        if (uses_sigma(m)) sc.sigma = s;
        const TransitionMatrix t = discretize_kernel(sc, spec, grid);
        const GapResult g = spectral_gap(t);
        GapRecord r{m, eps, s, grid.points, g.gap, g.lambda2, kNaN};
        try {
          r.conductance_bound = conductance_bound(t, k);
        } catch (const std::invalid_argument&) {
        }
        out.push_back(r);
      }
    }
  }
  return out;
}

void write_gap_csv(std::ostream& out, const std::vector<GapRecord>& records) {
  out << "method,epsilon,sigma,G,gap,lambda2,conductance_bound\n";
  for (const GapRecord& r : records)
    out << to_string(r.method) << ',' << fmt(r.epsilon) << ',' << fmt(r.sigma) << ',' << r.points
        << ',' << fmt(r.gap) << ',' << fmt(r.lambda2) << ',' << fmt(r.conductance_bound) << '\n';
}

// ---- smoothing --------------------------------------------------------------

SmoothConfig SmoothConfig::from_json(const nlohmann::json& j) {
  check_schema(j);
  SmoothConfig c;
  c.potential = PotentialConfig::from_json(j.at("potential"));
  c.eps = j.value("eps", c.eps);
  c.gamma = j.value("gamma", c.gamma);
  c.beta = j.value("beta", c.beta);
  c.samples = j.value("samples", c.samples);
  c.dt = j.value("dt", c.dt);
  c.inner_steps = j.value("inner_steps", c.inner_steps);
  const std::string proposal = j.value("inner_proposal", std::string("smooth_drift"));
  if (proposal == "langevin")
    c.proposal = InnerProposal::Langevin;
  else if (proposal != "smooth_drift")
    throw std::invalid_argument("smooth: inner_proposal must be smooth_drift or langevin");
  if (j.contains("x")) {
    const auto& x = j.at("x");
    c.x_start = x.value("start", c.x_start);
    c.x_stop = x.value("stop", c.x_stop);
    c.x_count = x.value("count", c.x_count);
  }
  c.seed = j.value("seed", c.seed);
  c.csv_path = j.value("csv", std::string());
  if (c.x_count < 1) throw std::invalid_argument("smooth: x.count must be >= 1");
  return c;
}

std::vector<SmoothRow> run_smoothing(const SmoothConfig& cfg) {
  const PotentialSpec spec = cfg.potential.make(1, cfg.eps);
  LocalEntropyConfig le;
  le.gamma = cfg.gamma;
  le.beta = cfg.beta;
  le.samples = cfg.samples;
  le.dt = cfg.dt;
  le.inner_steps = cfg.inner_steps;
  le.proposal = cfg.proposal;
  le.validate();
  std::vector<SmoothRow> rows(cfg.x_count);
  for (std::size_t i = 0; i < cfg.x_count; ++i) {
    const double x =
        cfg.x_count == 1 ? cfg.x_start
                         : cfg.x_start + (cfg.x_stop - cfg.x_start) * static_cast<double>(i) /
                                             static_cast<double>(cfg.x_count - 1);
    Rng rng(derive_seed(cfg.seed, i));
    const double xs[1] = {x};
    const LocalEntropyValue v = local_entropy_value(spec, xs, le, rng);
    const LocalEntropyGradient g = local_entropy_gradient(spec, xs, le, rng);
    rows[i] = {x, v.value, g.gradient[0], v.stderr, g.stderr[0], g.collapsed};
  }
  return rows;
}

void write_smooth_csv(std::ostream& out, const std::vector<SmoothRow>& rows) {
  out << "x,v_gamma,grad_v_gamma,v_stderr,grad_stderr\n";
  for (const SmoothRow& r : rows)
    out << fmt(r.x) << ',' << fmt(r.value) << ',' << fmt(r.gradient) << ',' << fmt(r.value_stderr)
        << ',' << fmt(r.gradient_stderr) << '\n';
}

// ---- analytic ---------------------------------------------------------------

nlohmann::json analytic_summary() {
  nlohmann::json j;
  const Extremum d = optimal_delta();
  j["delta_star"] = d.argument;
  j["m_delta_star"] = d.value;
  j["a1_delta_star"] = a1_delta(d.argument);
  j["sigma_star_over_sqrt_eps"] = std::sqrt(2.0 * d.argument);
  const ScalingConstants rwm = optimal_scaling(1.0, 1.0);
  const ScalingConstants mala = optimal_scaling(1.0, 1.0 / 3.0);
  j["rwm_optimal_ell_sq"] = rwm.ell_sq;
  j["rwm_optimal_acceptance"] = rwm.acceptance;
  j["mala_optimal_ell_sq"] = mala.ell_sq;
  j["mala_optimal_acceptance"] = mala.acceptance;

  const double beta = 5.0;
  const PotentialSpec well = PotentialSpec::separable_rough(SmoothKind::DoubleWell, 1, 0x1p-9);
  const QuadratureConfig quad = boltzmann_quadrature(well, beta);
  const double mr = mu_r(-1.0, beta, well, quad);
  j["mu_r_minus_one"] = mr;
  j["mu_r_zero"] = mu_r(0.0, beta, well, quad);
  const double osc = beta * well.osc_bound();
  j["hoeffding_bound_n50"] = hoeffding_acceptance_bound(50.0, mr, osc);

  const PotentialSpec harmonic = PotentialSpec::separable_rough(SmoothKind::Harmonic, 1, 0x1p-6);
  const RatioBounds rb =
      density_ratio_bounds(harmonic, beta, boltzmann_quadrature(harmonic, beta));
  j["density_ratio_min_harmonic_eps_2^-6"] = rb.min_ratio;
  j["density_ratio_max_harmonic_eps_2^-6"] = rb.max_ratio;
  j["density_ratio_bound_low"] = std::exp(-beta * harmonic.osc_bound());
  j["density_ratio_bound_high"] = std::exp(beta * harmonic.osc_bound());
  return j;
}

}  // namespace roughmc
