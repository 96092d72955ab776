#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace survmed {

/// One subject's follow-up. A subject is at risk at time t iff
/// entry < t <= exit.
struct SurvivalRecord {
  double entry = 0.0;
  double exit = 0.0;
  bool event = false;
};

/// Column-labelled design matrix (n rows, q columns).
struct CovariateMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> names;

  [[nodiscard]] Eigen::Index rows() const { return values.rows(); }
  [[nodiscard]] Eigen::Index cols() const { return values.cols(); }
};

/// Column-wise concatenation [left | right]. Row counts must agree.
CovariateMatrix hcat(const CovariateMatrix& left, const CovariateMatrix& right);

/// Subset of columns, in the order given.
CovariateMatrix select_columns(const CovariateMatrix& m,
                               std::span<const Eigen::Index> columns);

/// Subset of rows, in the order given (indices may repeat).
CovariateMatrix select_rows(const CovariateMatrix& m,
                            std::span<const std::size_t> rows);

inline constexpr std::size_t kMaxMediators = 10;

/// Exposure(s) X, mediators M and the survival outcome T for n subjects.
struct MediationDataset {
  std::vector<SurvivalRecord> outcomes;
  CovariateMatrix exposure;
  CovariateMatrix mediators;

  [[nodiscard]] std::size_t n() const { return outcomes.size(); }
  [[nodiscard]] std::size_t p() const {
    return static_cast<std::size_t>(mediators.cols());
  }
  [[nodiscard]] std::size_t qx() const {
    return static_cast<std::size_t>(exposure.cols());
  }

  [[nodiscard]] MediationDataset select_rows(
      std::span<const std::size_t> rows) const;
  [[nodiscard]] MediationDataset select_mediators(
      std::span<const Eigen::Index> columns) const;
};

struct Violation {
  std::optional<std::size_t> row;
  std::string rule;
};

struct ValidationResult {
  std::vector<Violation> violations;
  std::size_t n = 0;
  std::size_t n_events = 0;
  double censor_rate = 0.0;

  [[nodiscard]] bool ok() const { return violations.empty(); }
  [[nodiscard]] bool has_rule(const std::string& rule) const;
  /// Human-readable listing, truncated after `max_items` violations.
  [[nodiscard]] std::string describe(std::size_t max_items = 10) const;
};

std::size_t count_events(std::span<const SurvivalRecord> outcomes);

/// Checks every dataset invariant and reports all violations found; never
/// throws on bad data.
ValidationResult validate_dataset(const MediationDataset& ds);

}  // namespace survmed
