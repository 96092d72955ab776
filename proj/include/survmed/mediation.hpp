#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "survmed/cox.hpp"
#include "survmed/r2.hpp"
#include "survmed/survival_data.hpp"

namespace survmed {

struct MediationOptions {
  TieMethod ties = TieMethod::Efron;
  FitOptions fit;
  R2Options r2;
};

/// OLS of each mediator on (1, X).
struct MediatorRegression {
  Eigen::MatrixXd a;              // p x q_x slopes
  Eigen::VectorXd intercepts;     // p
  Eigen::VectorXd residual_sd;    // p, denominator n - q_x - 1
};

MediatorRegression fit_mediator_regressions(const MediationDataset& ds);

/// T ~ X, T ~ M and T ~ (X, M) on identical rows.
struct ThreeFits {
  CoxFit exposure;   // coefficients c
  CoxFit mediators;  // coefficients d_j
  CoxFit joint;      // coefficients (r, b_j)
};

inline constexpr const char* kModelTX = "T~X";
inline constexpr const char* kModelTM = "T~M";
inline constexpr const char* kModelTXM = "T~X+M";

/// Fits the three Cox models with shared ties and options. A failing or
/// non-converged fit raises CoxError tagged with the model name.
ThreeFits fit_three_models(const MediationDataset& ds,
                           const MediationOptions& opts = {});

struct MeasureEffect {
  double r2_tx = 0.0;
  double r2_tm = 0.0;
  double r2_txm = 0.0;
  double r2_med = 0.0;
  double sos = 0.0;          // NaN when undefined
  bool sos_defined = false;  // false iff r2_tx == 0
  bool negative = false;     // r2_med < 0, kept as is
};

/// R2_med = R2(T,M) + R2(T,X) - R2(T,XM) and SOS = R2_med / R2(T,X).
MeasureEffect combine_effects(double r2_tx, double r2_tm, double r2_txm);

double product_measure(const MediatorRegression& reg,
                       const Eigen::VectorXd& mediator_coef, double total);
double difference_measure(double direct);

struct MediationReport {
  std::array<MeasureEffect, 5> effects;
  R2Set r2_x, r2_m, r2_xm;
  Eigen::VectorXd total;       // c
  Eigen::VectorXd direct;      // r
  Eigen::VectorXd joint_mediator;     // b_j
  Eigen::VectorXd marginal_mediator;  // d_j
  MediatorRegression regression;
  std::optional<double> product_proportion;     // scalar exposure only
  std::optional<double> difference_proportion;  // scalar exposure only
  std::size_t n = 0;
  std::size_t n_events = 0;
  std::vector<std::string> exposure_names;
  std::vector<std::string> mediator_names;

  [[nodiscard]] const MeasureEffect& operator[](Measure m) const {
    return effects[static_cast<std::size_t>(m)];
  }
};

/// Builds the report from already fitted models (also used with null fits).
MediationReport assemble_report(const MediationDataset& ds, const ThreeFits& fits,
                                const MediatorRegression& regression,
                                const R2Options& r2 = {});

MediationReport r2_mediation(const MediationDataset& ds,
                             const MediationOptions& opts = {});

/// Flat (name, value) view used for bootstrap selection and tables:
/// r2_tx_<m>, r2_tm_<m>, r2_txm_<m>, r2_med_<m>, sos_<m> for each measure,
/// then product_proportion and difference_proportion when defined.
std::vector<std::pair<std::string, double>> report_quantities(
    const MediationReport& report);

struct BootstrapOptions {
  std::size_t replicates = 500;
  double level = 0.95;
  std::uint64_t seed = 1;
  unsigned parallelism = 1;
  /// Empty selects every quantity of report_quantities.
  std::vector<std::string> quantities;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;
  std::size_t n_used = 0;
};

struct BootstrapResult {
  std::map<std::string, Interval> intervals;
  std::size_t n_replicates = 0;
  std::size_t n_failed = 0;
};

/// Percentile pairs bootstrap over subjects. Replicates whose fits fail are
/// dropped and counted; more than 20% failures is an error.
BootstrapResult bootstrap_ci(const MediationDataset& ds,
                             const BootstrapOptions& boot,
                             const MediationOptions& opts = {});

/// Linear-interpolation quantile of sorted data (type 7).
double sorted_quantile(const std::vector<double>& sorted, double prob);

}  // namespace survmed
