#include "survmed/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "survmed/errors.hpp"

namespace survmed {

void validate_config(const ScenarioConfig& cfg) {
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("scenario '" + cfg.scenario_id + "': " + what);
  };
  if (!(cfg.weibull_shape > 0.0)) fail("Weibull shape must be positive");
  if (cfg.n < 50) fail("n must be at least 50");
  if (cfg.p < 1 || cfg.p > kMaxMediators) fail("p must lie in 1..10");
  if (cfg.a.size() != cfg.p || cfg.b.size() != cfg.p) {
    fail("a and b must have p entries");
  }
  if (!(cfg.target_censor_rate >= 0.0 && cfg.target_censor_rate <= 0.99)) {
    fail("target censor rate must lie in [0, 0.99]");
  }
  if (!(cfg.mediator_noise_sd >= 0.0)) fail("mediator noise sd must be >= 0");
}

Family parse_family(const std::string& id) {
  static constexpr std::array<std::pair<const char*, Family>, 7> kIds = {{
      {"S1", Family::S1}, {"S2", Family::S2}, {"M1", Family::M1},
      {"M2", Family::M2}, {"M3", Family::M3}, {"M4", Family::M4},
      {"M5", Family::M5}}};
  for (const auto& [name, f] : kIds) {
    if (id == name) return f;
  }
  throw std::invalid_argument("unknown scenario family '" + id + "'");
}

const char* to_string(Family f) {
  switch (f) {
    case Family::S1: return "S1";
    case Family::S2: return "S2";
    case Family::M1: return "M1";
    case Family::M2: return "M2";
    case Family::M3: return "M3";
    case Family::M4: return "M4";
    case Family::M5: return "M5";
  }
  return "?";
}

namespace {

ScenarioConfig single_mediator_base() {
  ScenarioConfig c;
  c.n = 2000;
  c.p = 1;
  c.a = {0.5};
  c.b = {-1.5};
  c.r = 2.0;
  return c;
}

ScenarioConfig multi_mediator_base(std::size_t p = 5) {
  ScenarioConfig c;
  c.n = 2000;
  c.p = p;
  c.a.assign(p, 1.0);
  c.b.assign(p, 0.5);
  c.r = 2.5;
  c.target_censor_rate = 0.85;
  return c;
}

void label(std::vector<ScenarioConfig>& grid, Family f, const char* axis) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "%s-%zu", to_string(f), i + 1);
    grid[i].scenario_id = id;
    grid[i].axis_name = axis;
  }
}

}  // namespace

std::vector<ScenarioConfig> make_scenarios(Family family) {
  std::vector<ScenarioConfig> grid;
  switch (family) {
    case Family::S1:
      for (double c : {0.05, 0.15, 0.20, 0.25, 0.35, 0.65, 0.85, 0.90, 0.95}) {
        auto cfg = single_mediator_base();
        cfg.target_censor_rate = c;
        cfg.axis_value = c;
        grid.push_back(cfg);
      }
      label(grid, family, "censor_rate");
      break;
    case Family::S2:
      for (std::size_t n : {200, 500, 1000, 2000, 5000}) {
        auto cfg = single_mediator_base();
        cfg.target_censor_rate = 0.25;
        cfg.n = n;
        cfg.axis_value = static_cast<double>(n);
        grid.push_back(cfg);
      }
      label(grid, family, "n");
      break;
    case Family::M1:
      for (double c : {0.05, 0.25, 0.65, 0.85, 0.95}) {
        auto cfg = multi_mediator_base();
        cfg.target_censor_rate = c;
        cfg.axis_value = c;
        grid.push_back(cfg);
      }
      label(grid, family, "censor_rate");
      break;
    case Family::M2:
      for (double a : {0.05, 0.25, 0.5, 1.0, 3.0, 5.0}) {
        auto cfg = multi_mediator_base();
        cfg.a.assign(cfg.p, a);
        cfg.axis_value = a;
        grid.push_back(cfg);
      }
      label(grid, family, "a");
      break;
    case Family::M3:
      for (double b : {0.01, 0.25, 0.5, 1.0, 2.0, 3.0}) {
        auto cfg = multi_mediator_base();
        cfg.b.assign(cfg.p, b);
        cfg.axis_value = b;
        grid.push_back(cfg);
      }
      label(grid, family, "b");
      break;
    case Family::M4:
      for (double r : {0.05, 0.5, 1.0, 2.0, 5.0, 10.0}) {
        auto cfg = multi_mediator_base();
        cfg.r = r;
        cfg.axis_value = r;
        grid.push_back(cfg);
      }
      label(grid, family, "r");
      break;
    case Family::M5:
      for (std::size_t p = 1; p <= 5; ++p) {
        auto cfg = multi_mediator_base(p);
        cfg.axis_value = static_cast<double>(p);
        grid.push_back(cfg);
      }
      label(grid, family, "p");
      break;
  }
  return grid;
}

double weibull_event_time(double u, double linear_predictor, double shape,
                          double eta) {
  return std::pow(-std::log(u) / std::exp(eta + linear_predictor), 1.0 / shape);
}

double expected_censor_rate(std::span<const double> event_times, double scale) {
  if (event_times.empty()) return 0.0;
  if (std::isinf(scale)) return 0.0;
  double total = 0.0;
  for (double t : event_times) total -= std::expm1(-t / scale);
  return total / static_cast<double>(event_times.size());
}

double calibrate_censor_scale(std::span<const double> event_times, double target) {
  if (target == 0.0) return std::numeric_limits<double>::infinity();
  if (!(target > 0.0 && target <= 0.99)) {
    throw std::invalid_argument("censor target must lie in (0, 0.99]");
  }
  double lo = -20.0;
  double hi = 20.0;
  // Censored fraction decreases in the censoring mean.
  if (!(expected_censor_rate(event_times, std::exp(lo)) > target &&
        expected_censor_rate(event_times, std::exp(hi)) < target)) {
    throw NumericalError("censoring calibration: target rate outside bracket");
  }
  double mid = 0.0;
  double rate = 0.0;
  for (int iter = 0; iter < 60; ++iter) {
    mid = 0.5 * (lo + hi);
    rate = expected_censor_rate(event_times, std::exp(mid));
    if (std::abs(rate - target) < 1e-6) break;
    (rate > target ? lo : hi) = mid;
  }
  if (std::abs(rate - target) > 0.005) {
    throw NumericalError("censoring calibration did not reach the target");
  }
  return std::exp(mid);
}

std::vector<SurvivalRecord> apply_censoring(std::span<const double> event_times,
                                            std::span<const double> censor_times) {
  if (event_times.size() != censor_times.size()) {
    throw std::invalid_argument("apply_censoring: length mismatch");
  }
  std::vector<SurvivalRecord> out(event_times.size());
  for (std::size_t i = 0; i < event_times.size(); ++i) {
    out[i].exit = std::min(event_times[i], censor_times[i]);
    out[i].event = event_times[i] <= censor_times[i];
  }
  return out;
}

std::vector<SurvivalRecord> apply_censoring(std::span<const double> event_times,
                                            double censor_scale, Rng& rng) {
  std::vector<double> censor(event_times.size(),
                             std::numeric_limits<double>::infinity());
  if (!std::isinf(censor_scale)) {
    for (double& c : censor) c = exponential(rng, censor_scale);
  }
  return apply_censoring(event_times, censor);
}

namespace {

struct Draws {
  Eigen::VectorXd x;
  Eigen::MatrixXd m;
  std::vector<double> times;
};

Draws draw_true_model(const ScenarioConfig& cfg, std::size_t n, Rng& rng) {
  Draws d;
  const auto rows = static_cast<Eigen::Index>(n);
  const auto p = static_cast<Eigen::Index>(cfg.p);
  d.x.resize(rows);
  d.m.resize(rows, p);
  d.times.resize(n);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double x = standard_normal(rng);
    double lp = cfg.r * x;
    d.x[i] = x;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const double m = cfg.a[jj] * x + cfg.mediator_noise_sd * standard_normal(rng);
      d.m(i, j) = m;
      lp += cfg.b[jj] * m;
    }
    d.times[static_cast<std::size_t>(i)] = weibull_event_time(
        uniform_open(rng), lp, cfg.weibull_shape, cfg.weibull_eta);
  }
  return d;
}

constexpr std::uint64_t kPilotStream = 0x8000000000000000ULL;

}  // namespace

double calibrate_censoring(const ScenarioConfig& cfg, std::size_t pilot_size) {
  validate_config(cfg);
  if (cfg.target_censor_rate == 0.0) return std::numeric_limits<double>::infinity();
  Rng rng = make_stream(cfg.seed, kPilotStream);
  const Draws pilot = draw_true_model(cfg, pilot_size, rng);
  return calibrate_censor_scale(pilot.times, cfg.target_censor_rate);
}

MediationDataset gen_dataset(const ScenarioConfig& cfg, double censor_scale,
                             Rng& rng) {
  validate_config(cfg);
  Draws d = draw_true_model(cfg, cfg.n, rng);
  MediationDataset ds;
  ds.outcomes = apply_censoring(d.times, censor_scale, rng);
  ds.exposure.values = std::move(d.x);
  ds.exposure.names = {"X"};
  ds.mediators.values = std::move(d.m);
  for (std::size_t j = 0; j < cfg.p; ++j) {
    ds.mediators.names.push_back("M" + std::to_string(j + 1));
  }
  return ds;
}

MediationDataset gen_dataset(const ScenarioConfig& cfg, Rng& rng) {
  return gen_dataset(cfg, calibrate_censoring(cfg), rng);
}

namespace {

constexpr std::array<const char*, 3> kCohortExposures = {"gender", "smoking",
                                                         "drinking"};
constexpr std::array<const char*, 6> kCohortMediators = {"BMI", "Fgluc", "HDL",
                                                         "LDL", "TC",    "TG"};
constexpr std::array<double, 3> kExposureProb = {0.45, 0.35, 0.55};
// Mediator shifts (in sd units) per exposure, rows follow kCohortMediators.
constexpr double kMediatorOnExposure[6][3] = {
    {0.20, 0.10, -0.10}, {0.30, 0.10, 0.00},  {-0.80, -0.30, 0.40},
    {0.20, 0.20, -0.10}, {0.00, 0.20, 0.10},  {0.40, 0.30, 0.10}};
constexpr std::array<double, 6> kMediatorMean = {26.0, 95.0, 50.0, 125.0, 200.0, 130.0};
constexpr std::array<double, 6> kMediatorSd = {4.0, 15.0, 14.0, 32.0, 36.0, 70.0};
constexpr std::array<double, 3> kExposureLogHazard = {0.5, 0.4, -0.1};
constexpr std::array<double, 6> kMediatorLogHazard = {0.15, 0.20, -0.35, 0.25, 0.05, 0.15};
constexpr double kAgeShape = 6.0;
constexpr double kAgeScale = 95.0;

struct CohortDraws {
  Eigen::MatrixXd x;
  Eigen::MatrixXd m;
  std::vector<double> entry;
  std::vector<double> age_at_event;
};

CohortDraws draw_cohort(std::size_t n, Rng& rng) {
  CohortDraws d;
  const auto rows = static_cast<Eigen::Index>(n);
  d.x.resize(rows, 3);
  d.m.resize(rows, 6);
  d.entry.resize(n);
  d.age_at_event.resize(n);
  for (Eigen::Index i = 0; i < rows; ++i) {
    std::array<double, 3> x{};
    for (std::size_t k = 0; k < 3; ++k) {
      x[k] = uniform_open(rng) < kExposureProb[k] ? 1.0 : 0.0;
      d.x(i, static_cast<Eigen::Index>(k)) = x[k];
    }
    std::array<double, 6> noise{};
    for (auto& e : noise) e = standard_normal(rng);
    // LDL and TC share most of their noise; HDL moves against TG.
    noise[4] = 0.8 * noise[3] + 0.6 * noise[4];
    noise[2] = -0.4 * noise[5] + std::sqrt(1.0 - 0.16) * noise[2];
    double lp = 0.0;
    for (std::size_t k = 0; k < 3; ++k) lp += kExposureLogHazard[k] * (x[k] - kExposureProb[k]);
    for (std::size_t j = 0; j < 6; ++j) {
      double z = noise[j];
      for (std::size_t k = 0; k < 3; ++k) {
        z += kMediatorOnExposure[j][k] * (x[k] - kExposureProb[k]);
      }
      lp += kMediatorLogHazard[j] * z;
      d.m(i, static_cast<Eigen::Index>(j)) = kMediatorMean[j] + kMediatorSd[j] * z;
    }
    const double entry = 30.0 + 30.0 * uniform_open(rng);
    // Age at event given survival to entry: invert the conditional
    // cumulative hazard (t/scale)^shape exp(lp).
    const double e = -std::log(uniform_open(rng));
    double age = kAgeScale * std::pow(std::pow(entry / kAgeScale, kAgeShape) +
                                          e * std::exp(-lp),
                                      1.0 / kAgeShape);
    if (!(age > entry)) age = std::nextafter(entry, std::numeric_limits<double>::infinity());
    const auto ii = static_cast<std::size_t>(i);
    d.entry[ii] = entry;
    d.age_at_event[ii] = age;
  }
  return d;
}

std::vector<double> residual_times(const CohortDraws& d) {
  std::vector<double> out(d.entry.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = d.age_at_event[i] - d.entry[i];
  return out;
}

}  // namespace

MediationDataset gen_cohort_dataset(const CohortConfig& cfg) {
  if (cfg.n < 50) throw std::invalid_argument("cohort n must be at least 50");
  Rng pilot_rng = make_stream(cfg.seed, kPilotStream);
  const double scale = calibrate_censor_scale(
      residual_times(draw_cohort(100000, pilot_rng)), cfg.target_censor_rate);

  Rng rng = make_stream(cfg.seed, 0);
  CohortDraws d = draw_cohort(cfg.n, rng);
  const auto follow_up = apply_censoring(residual_times(d), scale, rng);

  MediationDataset ds;
  ds.outcomes.resize(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    ds.outcomes[i].entry = d.entry[i];
    ds.outcomes[i].exit = follow_up[i].event ? d.age_at_event[i]
                                             : d.entry[i] + follow_up[i].exit;
    ds.outcomes[i].event = follow_up[i].event;
  }
  ds.exposure.values = std::move(d.x);
  ds.exposure.names.assign(kCohortExposures.begin(), kCohortExposures.end());
  ds.mediators.values = std::move(d.m);
  ds.mediators.names.assign(kCohortMediators.begin(), kCohortMediators.end());
  return ds;
}

}  // namespace survmed
