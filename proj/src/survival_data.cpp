#include "survmed/survival_data.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace survmed {

CovariateMatrix hcat(const CovariateMatrix& left, const CovariateMatrix& right) {
  if (left.rows() != right.rows()) {
    throw std::invalid_argument("hcat: row counts differ");
  }
  CovariateMatrix out;
  out.values.resize(left.rows(), left.cols() + right.cols());
  out.values << left.values, right.values;
  out.names = left.names;
  out.names.insert(out.names.end(), right.names.begin(), right.names.end());
  return out;
}

CovariateMatrix select_columns(const CovariateMatrix& m,
                               std::span<const Eigen::Index> columns) {
  CovariateMatrix out;
  out.values.resize(m.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const Eigen::Index j = columns[k];
    if (j < 0 || j >= m.cols()) {
      throw std::out_of_range("select_columns: column index out of range");
    }
    out.values.col(static_cast<Eigen::Index>(k)) = m.values.col(j);
    if (static_cast<std::size_t>(j) < m.names.size()) {
      out.names.push_back(m.names[static_cast<std::size_t>(j)]);
    }
  }
  return out;
}

CovariateMatrix select_rows(const CovariateMatrix& m,
                            std::span<const std::size_t> rows) {
  CovariateMatrix out;
  out.names = m.names;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.values.row(static_cast<Eigen::Index>(k)) =
        m.values.row(static_cast<Eigen::Index>(rows[k]));
  }
  return out;
}

MediationDataset MediationDataset::select_rows(
    std::span<const std::size_t> rows) const {
  MediationDataset out;
  out.outcomes.reserve(rows.size());
  for (std::size_t i : rows) out.outcomes.push_back(outcomes.at(i));
  out.exposure = survmed::select_rows(exposure, rows);
  out.mediators = survmed::select_rows(mediators, rows);
  return out;
}

MediationDataset MediationDataset::select_mediators(
    std::span<const Eigen::Index> columns) const {
  MediationDataset out;
  out.outcomes = outcomes;
  out.exposure = exposure;
  out.mediators = select_columns(mediators, columns);
  return out;
}

bool ValidationResult::has_rule(const std::string& rule) const {
  for (const auto& v : violations) {
    if (v.rule == rule) return true;
  }
  return false;
}

std::string ValidationResult::describe(std::size_t max_items) const {
  std::ostringstream os;
  os << violations.size() << " violation(s)";
  std::size_t shown = 0;
  for (const auto& v : violations) {
    if (shown++ == max_items) {
      os << "\n  ...";
      break;
    }
    os << "\n  ";
    if (v.row) os << "row " << *v.row << ": ";
    os << v.rule;
  }
  return os.str();
}

std::size_t count_events(std::span<const SurvivalRecord> outcomes) {
  std::size_t e = 0;
  for (const auto& r : outcomes) e += r.event ? 1 : 0;
  return e;
}

namespace {

void check_finite(const CovariateMatrix& m, const char* rule,
                  std::vector<Violation>& out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (!m.values.row(i).allFinite()) {
      out.push_back({static_cast<std::size_t>(i), rule});
    }
  }
}

}  // namespace

ValidationResult validate_dataset(const MediationDataset& ds) {
  ValidationResult res;
  auto& v = res.violations;
  res.n = ds.outcomes.size();
  res.n_events = count_events(ds.outcomes);
  res.censor_rate =
      res.n == 0 ? 0.0
                 : 1.0 - static_cast<double>(res.n_events) /
                             static_cast<double>(res.n);

  for (std::size_t i = 0; i < ds.outcomes.size(); ++i) {
    const auto& r = ds.outcomes[i];
    if (!std::isfinite(r.entry) || !std::isfinite(r.exit)) {
      v.push_back({i, "finite time"});
      continue;
    }
    if (r.entry < 0.0) v.push_back({i, "entry >= 0"});
    if (!(r.exit > r.entry)) v.push_back({i, "exit > entry"});
  }

  const auto n = static_cast<Eigen::Index>(res.n);
  if (ds.exposure.rows() != n || ds.mediators.rows() != n) {
    v.push_back({std::nullopt, "row count"});
  }
  if (ds.exposure.names.size() != static_cast<std::size_t>(ds.exposure.cols()) ||
      ds.mediators.names.size() != static_cast<std::size_t>(ds.mediators.cols())) {
    v.push_back({std::nullopt, "column names"});
  }
  if (ds.qx() < 1) v.push_back({std::nullopt, "q_x >= 1"});
  if (ds.p() < 1) v.push_back({std::nullopt, "p >= 1"});
  if (ds.p() > kMaxMediators) v.push_back({std::nullopt, "p <= 10"});
  if (res.n < ds.qx() + ds.p() + 1) v.push_back({std::nullopt, "n >= q + 1"});

  check_finite(ds.exposure, "finite exposure", v);
  check_finite(ds.mediators, "finite mediator", v);
  return res;
}

}  // namespace survmed
