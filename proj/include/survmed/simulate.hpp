#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "survmed/random.hpp"
#include "survmed/survival_data.hpp"

namespace survmed {

/// True model for one simulation scenario:
///   X ~ N(0,1),  M_j = a_j X + eps_j,  eps_j ~ N(0, noise_sd^2),
///   hazard(t | X, M) = shape * t^(shape-1) * exp(eta + r X + sum_j b_j M_j).
struct ScenarioConfig {
  std::string scenario_id;
  std::string axis_name;   // which parameter the family varies
  double axis_value = 0.0;
  std::size_t n = 2000;
  std::size_t p = 1;
  std::vector<double> a;
  std::vector<double> b;
  double r = 0.0;
  double weibull_shape = 2.0;
  double weibull_eta = -5.0;
  double target_censor_rate = 0.0;
  double mediator_noise_sd = 1.0;
  std::size_t replications = 1000;
  std::uint64_t seed = 1;
};

/// Throws std::invalid_argument on a config outside the supported range.
void validate_config(const ScenarioConfig& cfg);

enum class Family { S1, S2, M1, M2, M3, M4, M5 };

Family parse_family(const std::string& id);
const char* to_string(Family f);

/// The exact parameter grid of a scenario family, one config per axis point.
std::vector<ScenarioConfig> make_scenarios(Family family);

/// Inverse-transform draw from the Weibull proportional-hazards model:
/// T = (-log U / exp(eta + lp))^(1/shape).
double weibull_event_time(double u, double linear_predictor, double shape,
                          double eta);

/// Scale theta of Exponential(mean theta) censoring whose expected censored
/// fraction over `event_times` equals `target`. Bisection on log theta over
/// [-20, 20]. Target 0 gives +infinity (no censoring).
double calibrate_censor_scale(std::span<const double> event_times, double target);

/// Calibrates on a 100000-draw pilot sample of cfg's true model.
double calibrate_censoring(const ScenarioConfig& cfg,
                           std::size_t pilot_size = 100000);

/// Expected censored fraction when censoring times have mean `scale`.
double expected_censor_rate(std::span<const double> event_times, double scale);

/// exit = min(T, C), event = T <= C, C ~ Exponential(mean censor_scale).
std::vector<SurvivalRecord> apply_censoring(std::span<const double> event_times,
                                            double censor_scale, Rng& rng);
/// Same with given censoring times.
std::vector<SurvivalRecord> apply_censoring(std::span<const double> event_times,
                                            std::span<const double> censor_times);

/// One dataset from cfg with a precomputed censoring scale.
MediationDataset gen_dataset(const ScenarioConfig& cfg, double censor_scale,
                             Rng& rng);
/// Same, calibrating censoring first.
MediationDataset gen_dataset(const ScenarioConfig& cfg, Rng& rng);

/// Synthetic cohort shaped like a lifestyle-factor study: three binary
/// exposures (gender, smoking, drinking), six continuous mediators (BMI,
/// Fgluc, HDL, LDL, TC, TG), age as time scale with entry age as left
/// truncation, and exponential loss to follow-up calibrated to a target
/// censoring rate.
struct CohortConfig {
  std::size_t n = 1500;
  double target_censor_rate = 0.863;
  std::uint64_t seed = 1;
};

MediationDataset gen_cohort_dataset(const CohortConfig& cfg);

}  // namespace survmed
