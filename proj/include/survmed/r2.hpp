#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include <Eigen/Dense>

#include "survmed/cox.hpp"
#include "survmed/survival_data.hpp"

namespace survmed {

/// The five explained-variation measures, in reporting order.
enum class Measure { N, K, R, B, W };

inline constexpr std::array<Measure, 5> kMeasures = {
    Measure::N, Measure::K, Measure::R, Measure::B, Measure::W};

/// Lower-case suffix used in tables and quantity names ("n", "k", ...).
std::string_view measure_suffix(Measure m);
/// Display label ("R2_n", ...).
std::string_view measure_label(Measure m);

struct R2Options {
  /// Denominator offset of the entropy-based measure; 0.5772 by default.
  double entropy_constant = 0.5772;
  /// Centre the linear predictor before the log-mean-exp. Keeps B >= 0.
  bool center_linear_predictor = true;
};

struct R2Set {
  double r2_n = 0.0;
  double r2_k = 0.0;
  double r2_r = 0.0;
  double r2_b = 0.0;
  double r2_w = 0.0;
  std::size_t n = 0;
  std::size_t n_events = 0;
  bool b_negative = false;  // B < 0, only possible without centring

  [[nodiscard]] double operator[](Measure m) const;
};

// Likelihood-ratio based measures. chi2 within 1e-8 below zero is clamped.
double r2_n(double chi2, std::size_t n);
double r2_k(double chi2, std::size_t n_events);
/// Royston's transform of r2_k, via A = r2_k / (1 - r2_k).
double r2_r(double r2_k_value);

/// B = log(mean_i exp(beta' z_i)), evaluated with log-sum-exp.
double entropy_statistic(const Eigen::VectorXd& beta, const CovariateMatrix& z,
                         bool center = true);
double r2_b(const Eigen::VectorXd& beta, const CovariateMatrix& z,
            const R2Options& opts = {});
/// var(Z beta) / (1 + var(Z beta)), sample variance with n - 1.
double r2_w(const Eigen::VectorXd& beta, const CovariateMatrix& z);

/// All five measures from one fit of the covariates `z`.
R2Set compute_all(const CoxFit& fit, const CovariateMatrix& z,
                  const R2Options& opts = {});

}  // namespace survmed
