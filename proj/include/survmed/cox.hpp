#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "survmed/errors.hpp"
#include "survmed/survival_data.hpp"

namespace survmed {

enum class TieMethod { Efron, Breslow };

TieMethod parse_tie_method(const std::string& name);
const char* to_string(TieMethod ties);

struct FitOptions {
  int max_iter = 50;
  double loglik_rel_tol = 1e-9;
  double gradient_tol = 1e-8;
  int max_halvings = 10;
  /// |beta_j| beyond this is treated as a diverging (monotone) likelihood.
  double divergence_bound = 50.0;
};

struct CoxFit {
  Eigen::VectorXd beta;
  double loglik = 0.0;       // maximized partial log-likelihood
  double null_loglik = 0.0;  // at beta = 0
  double chi2 = 0.0;         // 2 (loglik - null_loglik)
  Eigen::VectorXd linear_predictor;  // Z beta, original (uncentered) Z
  Eigen::MatrixXd covariance;        // inverse observed information
  std::size_t n = 0;
  std::size_t n_events = 0;
  int iterations = 0;
  bool converged = false;
};

enum class CoxFailure { NoEvents, Singular, NotConverged, MonotoneLikelihood };

const char* to_string(CoxFailure kind);

class CoxError : public NumericalError {
 public:
  CoxError(CoxFailure kind, const std::string& what, std::string model = {})
      : NumericalError(model.empty() ? what : model + ": " + what),
        kind_(kind),
        model_(std::move(model)) {}

  [[nodiscard]] CoxFailure kind() const { return kind_; }
  /// Which model failed, when the error was raised by a multi-model fit.
  [[nodiscard]] const std::string& model() const { return model_; }

 private:
  CoxFailure kind_;
  std::string model_;
};

/// Partial log-likelihood at `beta`. Risk sets honour left truncation.
double partial_loglik(const Eigen::VectorXd& beta,
                      std::span<const SurvivalRecord> outcomes,
                      const CovariateMatrix& covariates,
                      TieMethod ties = TieMethod::Efron);

struct ScoreHessian {
  Eigen::VectorXd score;
  Eigen::MatrixXd hessian;
};

/// Analytic gradient and Hessian of partial_loglik.
ScoreHessian score_and_hessian(const Eigen::VectorXd& beta,
                               std::span<const SurvivalRecord> outcomes,
                               const CovariateMatrix& covariates,
                               TieMethod ties = TieMethod::Efron);

/// Newton-Raphson maximization of the partial likelihood from beta = 0,
/// with step halving.
///
/// Throws CoxError for NoEvents, Singular (collinear or constant columns) and
/// MonotoneLikelihood (a coefficient running off to infinity). Running out of
/// iterations is not an exception: the result comes back with
/// `converged == false`.
CoxFit fit_cox(std::span<const SurvivalRecord> outcomes,
               const CovariateMatrix& covariates,
               TieMethod ties = TieMethod::Efron,
               const FitOptions& opts = {});

/// The model with every coefficient held at zero, packaged like a fit.
CoxFit null_fit(std::span<const SurvivalRecord> outcomes,
                const CovariateMatrix& covariates,
                TieMethod ties = TieMethod::Efron);

}  // namespace survmed
