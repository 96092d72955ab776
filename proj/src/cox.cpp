#include "survmed/cox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace survmed {

TieMethod parse_tie_method(const std::string& name) {
  if (name == "efron" || name == "Efron") return TieMethod::Efron;
  if (name == "breslow" || name == "Breslow") return TieMethod::Breslow;
  throw std::invalid_argument("unknown tie method '" + name + "'");
}

const char* to_string(TieMethod ties) {
  return ties == TieMethod::Efron ? "efron" : "breslow";
}

const char* to_string(CoxFailure kind) {
  switch (kind) {
    case CoxFailure::NoEvents: return "no events";
    case CoxFailure::Singular: return "singular information matrix";
    case CoxFailure::NotConverged: return "not converged";
    case CoxFailure::MonotoneLikelihood: return "monotone likelihood";
  }
  return "unknown";
}

namespace {

// Sorted view of the data that lets one backward sweep over distinct exit
// times visit every risk set: subjects join when the sweep reaches their
// exit time and leave once it passes below their entry time.
class PartialLikelihood {
 public:
  PartialLikelihood(std::span<const SurvivalRecord> outcomes,
                    const CovariateMatrix& covariates, TieMethod ties)
      : outcomes_(outcomes), ties_(ties) {
    const auto n = static_cast<Eigen::Index>(outcomes.size());
    if (covariates.rows() != n) {
      throw std::invalid_argument("covariate rows do not match outcomes");
    }
    if (covariates.cols() < 1) {
      throw std::invalid_argument("at least one covariate is required");
    }
    n_events_ = count_events(outcomes);
    if (n_events_ == 0) {
      throw CoxError(CoxFailure::NoEvents, "no events in data");
    }
    // Column-centred, transposed: one contiguous column per subject. The
    // partial likelihood is invariant to covariate shifts.
    zt_ = covariates.values.transpose();
    zt_.colwise() -= zt_.rowwise().mean();

    by_exit_.resize(outcomes.size());
    std::iota(by_exit_.begin(), by_exit_.end(), std::size_t{0});
    std::stable_sort(by_exit_.begin(), by_exit_.end(), [&](auto a, auto b) {
      return outcomes[a].exit > outcomes[b].exit;
    });
    for (const auto& r : outcomes) truncated_ = truncated_ || r.entry > 0.0;
    if (truncated_) {
      by_entry_.resize(outcomes.size());
      std::iota(by_entry_.begin(), by_entry_.end(), std::size_t{0});
      std::stable_sort(by_entry_.begin(), by_entry_.end(), [&](auto a, auto b) {
        return outcomes[a].entry > outcomes[b].entry;
      });
    }
  }

  [[nodiscard]] Eigen::Index dim() const { return zt_.rows(); }
  [[nodiscard]] std::size_t n_events() const { return n_events_; }

  // Loglik always; score and Hessian when the pointers are non-null.
  double evaluate(const Eigen::VectorXd& beta, Eigen::VectorXd* score,
                  Eigen::MatrixXd* hessian) const {
    const Eigen::Index q = dim();
    if (beta.size() != q) throw std::invalid_argument("beta has wrong length");
    const bool derivs = score != nullptr || hessian != nullptr;

    const Eigen::VectorXd eta = zt_.transpose() * beta;
    const double shift = eta.size() > 0 ? eta.maxCoeff() : 0.0;
    const Eigen::VectorXd w = (eta.array() - shift).exp().matrix();

    double loglik = 0.0;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(q);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(q, q);

    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(q);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(q, q);
    Eigen::VectorXd d1(q), a(q);
    Eigen::MatrixXd d2(q, q);

    const std::size_t n = by_exit_.size();
    std::size_t pos = 0;
    std::size_t leave = 0;
    while (pos < n) {
      const double t = outcomes_[by_exit_[pos]].exit;
      double d0 = 0.0;
      int deaths = 0;
      if (derivs) {
        d1.setZero();
        d2.setZero();
      }
      for (; pos < n && outcomes_[by_exit_[pos]].exit == t; ++pos) {
        const std::size_t i = by_exit_[pos];
        const double wi = w[static_cast<Eigen::Index>(i)];
        const auto zi = zt_.col(static_cast<Eigen::Index>(i));
        s0 += wi;
        if (derivs) {
          s1.noalias() += wi * zi;
          s2.noalias() += wi * zi * zi.transpose();
        }
        if (outcomes_[i].event) {
          ++deaths;
          d0 += wi;
          loglik += eta[static_cast<Eigen::Index>(i)] - shift;
          if (derivs) {
            g.noalias() += zi;
            d1.noalias() += wi * zi;
            d2.noalias() += wi * zi * zi.transpose();
          }
        }
      }
      for (; truncated_ && leave < n && outcomes_[by_entry_[leave]].entry >= t;
           ++leave) {
        const std::size_t i = by_entry_[leave];
        const double wi = w[static_cast<Eigen::Index>(i)];
        const auto zi = zt_.col(static_cast<Eigen::Index>(i));
        s0 -= wi;
        if (derivs) {
          s1.noalias() -= wi * zi;
          s2.noalias() -= wi * zi * zi.transpose();
        }
      }
      if (deaths == 0) continue;

      for (int k = 0; k < deaths; ++k) {
        const double frac =
            ties_ == TieMethod::Efron ? static_cast<double>(k) / deaths : 0.0;
        const double phi = s0 - frac * d0;
        loglik -= std::log(phi);
        if (derivs) {
          a = (s1 - frac * d1) / phi;
          g -= a;
          h -= (s2 - frac * d2) / phi - a * a.transpose();
        }
      }
    }
    if (score != nullptr) *score = g;
    if (hessian != nullptr) *hessian = h;
    return loglik;
  }

 private:
  std::span<const SurvivalRecord> outcomes_;
  TieMethod ties_;
  std::size_t n_events_ = 0;
  Eigen::MatrixXd zt_;
  std::vector<std::size_t> by_exit_;
  std::vector<std::size_t> by_entry_;
  bool truncated_ = false;
};

// Collinearity check on the information matrix scaled to unit diagonal, so
// the decision does not depend on covariate units.
bool information_singular(const Eigen::MatrixXd& info) {
  const Eigen::VectorXd d = info.diagonal();
  if ((d.array() <= 0.0).any()) return true;
  const Eigen::VectorXd s = d.array().rsqrt();
  const Eigen::MatrixXd r = s.asDiagonal() * info * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r, Eigen::EigenvaluesOnly);
  return eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < 1e-10;
}

void require_nonconstant(const CovariateMatrix& z) {
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const auto col = z.values.col(j);
    if (col.size() == 0 || col.maxCoeff() == col.minCoeff()) {
      const std::string name =
          static_cast<std::size_t>(j) < z.names.size() ? z.names[static_cast<std::size_t>(j)]
                                                       : std::to_string(j);
      throw CoxError(CoxFailure::Singular, "covariate '" + name + "' is constant");
    }
  }
}

CoxFit package(const PartialLikelihood& pl, const Eigen::VectorXd& beta,
               double loglik, double null_loglik,
               std::span<const SurvivalRecord> outcomes,
               const CovariateMatrix& z) {
  CoxFit fit;
  fit.beta = beta;
  fit.loglik = loglik;
  fit.null_loglik = null_loglik;
  fit.chi2 = 2.0 * (loglik - null_loglik);
  fit.linear_predictor = z.values * beta;
  fit.n = outcomes.size();
  fit.n_events = pl.n_events();
  return fit;
}

}  // namespace

double partial_loglik(const Eigen::VectorXd& beta,
                      std::span<const SurvivalRecord> outcomes,
                      const CovariateMatrix& covariates, TieMethod ties) {
  return PartialLikelihood(outcomes, covariates, ties)
      .evaluate(beta, nullptr, nullptr);
}

ScoreHessian score_and_hessian(const Eigen::VectorXd& beta,
                               std::span<const SurvivalRecord> outcomes,
                               const CovariateMatrix& covariates, TieMethod ties) {
  ScoreHessian out;
  PartialLikelihood(outcomes, covariates, ties)
      .evaluate(beta, &out.score, &out.hessian);
  return out;
}

CoxFit null_fit(std::span<const SurvivalRecord> outcomes,
                const CovariateMatrix& covariates, TieMethod ties) {
  const PartialLikelihood pl(outcomes, covariates, ties);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(pl.dim());
  Eigen::MatrixXd hess;
  const double l0 = pl.evaluate(zero, nullptr, &hess);
  CoxFit fit = package(pl, zero, l0, l0, outcomes, covariates);
  Eigen::LLT<Eigen::MatrixXd> llt(-hess);
  fit.covariance = llt.info() == Eigen::Success
                       ? Eigen::MatrixXd(llt.solve(Eigen::MatrixXd::Identity(pl.dim(), pl.dim())))
                       : Eigen::MatrixXd::Zero(pl.dim(), pl.dim());
  fit.converged = true;
  return fit;
}

CoxFit fit_cox(std::span<const SurvivalRecord> outcomes,
               const CovariateMatrix& covariates, TieMethod ties,
               const FitOptions& opts) {
  const PartialLikelihood pl(outcomes, covariates, ties);
  require_nonconstant(covariates);
  const Eigen::Index q = pl.dim();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd score;
  Eigen::MatrixXd hess;
  double loglik = pl.evaluate(beta, &score, &hess);
  const double null_loglik = loglik;

  if (information_singular(-hess)) {
    throw CoxError(CoxFailure::Singular,
                   "information matrix is singular (collinear covariates)");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(-hess);

  auto diverged = [&](const char* why) {
    return CoxError(CoxFailure::MonotoneLikelihood, why);
  };

  // Near the optimum the gain of a Newton step drops below the rounding
  // error of the likelihood sum; such steps are still accepted.
  auto ascends = [&](double cand, double cur) {
    return cand >= cur - 1e-11 * std::max(1.0, std::abs(cur));
  };

  int iter = 0;
  bool converged = score.lpNorm<Eigen::Infinity>() < opts.gradient_tol;
  while (!converged && iter < opts.max_iter) {
    ++iter;
    Eigen::VectorXd step = llt.solve(score);
    Eigen::VectorXd candidate = beta + step;
    double cand_loglik = pl.evaluate(candidate, nullptr, nullptr);
    for (int half = 0;
         half < opts.max_halvings && !ascends(cand_loglik, loglik); ++half) {
      step *= 0.5;
      candidate = beta + step;
      cand_loglik = pl.evaluate(candidate, nullptr, nullptr);
    }
    if (!ascends(cand_loglik, loglik)) {
      // No ascent even along a tiny step: we are at the optimum to rounding.
      converged = score.lpNorm<Eigen::Infinity>() < 1e-6;
      break;
    }
    if (candidate.lpNorm<Eigen::Infinity>() > opts.divergence_bound) {
      throw diverged("coefficient exceeded divergence bound");
    }
    const double rel_change =
        std::abs(cand_loglik - loglik) / std::max(std::abs(loglik), 1e-300);
    beta = candidate;
    loglik = pl.evaluate(beta, &score, &hess);
    llt.compute(-hess);
    if (llt.info() != Eigen::Success) {
      throw diverged("information matrix degenerated during iteration");
    }
    const double grad = score.lpNorm<Eigen::Infinity>();
    converged = grad < opts.gradient_tol ||
                (rel_change < opts.loglik_rel_tol && grad < 1e-6);
  }

  CoxFit fit = package(pl, beta, loglik, null_loglik, outcomes, covariates);
  fit.iterations = iter;
  fit.converged = converged;
  fit.covariance =
      llt.solve(Eigen::MatrixXd::Identity(q, q));
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();

  if (converged) {
    // A finite maximizer has a vanishing Newton step. When the likelihood
    // only approaches its supremum at infinity the gradient can fall below
    // tolerance while the step stays of order one.
    const Eigen::VectorXd next = llt.solve(score);
    for (Eigen::Index j = 0; j < q; ++j) {
      if (std::abs(next[j]) > 3.16e-5 * std::max(1.0, std::abs(beta[j]))) {
        throw diverged("Newton step does not vanish; coefficient is infinite");
      }
    }
  }
  return fit;
}

}  // namespace survmed
