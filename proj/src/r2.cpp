#include "survmed/r2.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "survmed/errors.hpp"

namespace survmed {

std::string_view measure_suffix(Measure m) {
  switch (m) {
    case Measure::N: return "n";
    case Measure::K: return "k";
    case Measure::R: return "r";
    case Measure::B: return "b";
    case Measure::W: return "w";
  }
  return "?";
}

std::string_view measure_label(Measure m) {
  switch (m) {
    case Measure::N: return "R2_n";
    case Measure::K: return "R2_k";
    case Measure::R: return "R2_r";
    case Measure::B: return "R2_b";
    case Measure::W: return "R2_w";
  }
  return "?";
}

double R2Set::operator[](Measure m) const {
  switch (m) {
    case Measure::N: return r2_n;
    case Measure::K: return r2_k;
    case Measure::R: return r2_r;
    case Measure::B: return r2_b;
    case Measure::W: return r2_w;
  }
  return 0.0;
}

namespace {

constexpr double kChi2Slack = 1e-8;

double clamp_chi2(double chi2) {
  if (!(chi2 >= -kChi2Slack)) {
    throw std::invalid_argument("likelihood-ratio statistic is negative");
  }
  return std::max(chi2, 0.0);
}

}  // namespace

double r2_n(double chi2, std::size_t n) {
  if (n < 1) throw std::invalid_argument("r2_n: n must be positive");
  return -std::expm1(-clamp_chi2(chi2) / static_cast<double>(n));
}

double r2_k(double chi2, std::size_t n_events) {
  if (n_events < 1) throw CoxError(CoxFailure::NoEvents, "r2_k: no events");
  return -std::expm1(-clamp_chi2(chi2) / static_cast<double>(n_events));
}

double r2_r(double r2_k_value) {
  if (!(r2_k_value >= 0.0 && r2_k_value < 1.0)) {
    throw std::invalid_argument("r2_r: r2_k must lie in [0, 1)");
  }
  constexpr double kLogisticVariance = std::numbers::pi * std::numbers::pi / 6.0;
  const double a = r2_k_value / (1.0 - r2_k_value);
  return a / (kLogisticVariance + a);
}

double entropy_statistic(const Eigen::VectorXd& beta, const CovariateMatrix& z,
                         bool center) {
  if (z.rows() < 1) throw std::invalid_argument("entropy_statistic: empty Z");
  if (!beta.allFinite()) throw std::invalid_argument("entropy_statistic: beta not finite");
  Eigen::ArrayXd eta = (z.values * beta).array();
  if (center) eta -= eta.mean();
  const double top = eta.maxCoeff();
  return top + std::log((eta - top).exp().mean());
}

double r2_b(const Eigen::VectorXd& beta, const CovariateMatrix& z,
            const R2Options& opts) {
  const double b = entropy_statistic(beta, z, opts.center_linear_predictor);
  const double denom = opts.entropy_constant + b;
  if (std::abs(denom) < 1e-12) {
    throw NumericalError("r2_b: entropy constant + B vanishes");
  }
  return b / denom;
}

double r2_w(const Eigen::VectorXd& beta, const CovariateMatrix& z) {
  if (z.rows() < 2) throw std::invalid_argument("r2_w: need at least two rows");
  const Eigen::ArrayXd eta = (z.values * beta).array();
  const double v = (eta - eta.mean()).square().sum() /
                   static_cast<double>(eta.size() - 1);
  return v / (1.0 + v);
}

R2Set compute_all(const CoxFit& fit, const CovariateMatrix& z,
                  const R2Options& opts) {
  if (!fit.converged) throw std::invalid_argument("compute_all: fit did not converge");
  R2Set s;
  s.n = fit.n;
  s.n_events = fit.n_events;
  s.r2_n = r2_n(fit.chi2, fit.n);
  s.r2_k = r2_k(fit.chi2, fit.n_events);
  s.r2_r = r2_r(s.r2_k);
  s.b_negative =
      entropy_statistic(fit.beta, z, opts.center_linear_predictor) < 0.0;
  s.r2_b = r2_b(fit.beta, z, opts);
  s.r2_w = r2_w(fit.beta, z);
  return s;
}

}  // namespace survmed
