#include "survmed/mediation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "survmed/errors.hpp"
#include "survmed/parallel.hpp"
#include "survmed/random.hpp"

namespace survmed {

MediatorRegression fit_mediator_regressions(const MediationDataset& ds) {
  const Eigen::Index n = static_cast<Eigen::Index>(ds.n());
  const Eigen::Index qx = ds.exposure.cols();
  if (n <= qx + 1) {
    throw std::invalid_argument("mediator regression needs n > q_x + 1");
  }
  Eigen::MatrixXd design(n, qx + 1);
  design.col(0).setOnes();
  design.rightCols(qx) = ds.exposure.values;

  const Eigen::MatrixXd xtx = design.transpose() * design;
  const Eigen::VectorXd s = xtx.diagonal().array().rsqrt();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      s.asDiagonal() * xtx * s.asDiagonal(), Eigen::EigenvaluesOnly);
  if (!s.allFinite() || eig.eigenvalues().minCoeff() < 1e-12) {
    throw NumericalError("mediator regression: rank-deficient design");
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  const Eigen::MatrixXd coef = ldlt.solve(design.transpose() * ds.mediators.values);
  const Eigen::MatrixXd resid = ds.mediators.values - design * coef;

  MediatorRegression out;
  out.intercepts = coef.row(0).transpose();
  out.a = coef.bottomRows(qx).transpose();
  out.residual_sd = (resid.colwise().squaredNorm().transpose() /
                     static_cast<double>(n - qx - 1))
                        .cwiseSqrt();
  return out;
}

ThreeFits fit_three_models(const MediationDataset& ds,
                           const MediationOptions& opts) {
  const CovariateMatrix joint = hcat(ds.exposure, ds.mediators);
  auto fit = [&](const CovariateMatrix& z, const char* model) {
    try {
      CoxFit f = fit_cox(ds.outcomes, z, opts.ties, opts.fit);
      if (!f.converged) {
        throw CoxError(CoxFailure::NotConverged,
                       "no convergence after " + std::to_string(f.iterations) +
                           " iterations");
      }
      return f;
    } catch (const CoxError& e) {
      if (!e.model().empty()) throw;
      throw CoxError(e.kind(), e.what(), model);
    }
  };
  ThreeFits out;
  out.exposure = fit(ds.exposure, kModelTX);
  out.mediators = fit(ds.mediators, kModelTM);
  out.joint = fit(joint, kModelTXM);
  return out;
}

MeasureEffect combine_effects(double r2_tx, double r2_tm, double r2_txm) {
  MeasureEffect e;
  e.r2_tx = r2_tx;
  e.r2_tm = r2_tm;
  e.r2_txm = r2_txm;
  e.r2_med = r2_tm + r2_tx - r2_txm;
  e.negative = e.r2_med < 0.0;
  e.sos_defined = r2_tx != 0.0;
  e.sos = e.sos_defined ? e.r2_med / r2_tx
                        : std::numeric_limits<double>::quiet_NaN();
  return e;
}

double product_measure(const MediatorRegression& reg,
                       const Eigen::VectorXd& mediator_coef, double total) {
  if (reg.a.cols() != 1) {
    throw UnsupportedError("product measure needs a single exposure column");
  }
  if (reg.a.rows() != mediator_coef.size()) {
    throw std::invalid_argument("product measure: mediator count mismatch");
  }
  return std::exp(reg.a.col(0).dot(mediator_coef) - total);
}

double difference_measure(double direct) { return std::exp(-direct); }

MediationReport assemble_report(const MediationDataset& ds, const ThreeFits& fits,
                                const MediatorRegression& regression,
                                const R2Options& r2) {
  MediationReport rep;
  rep.r2_x = compute_all(fits.exposure, ds.exposure, r2);
  rep.r2_m = compute_all(fits.mediators, ds.mediators, r2);
  rep.r2_xm = compute_all(fits.joint, hcat(ds.exposure, ds.mediators), r2);
  for (Measure m : kMeasures) {
    rep.effects[static_cast<std::size_t>(m)] =
        combine_effects(rep.r2_x[m], rep.r2_m[m], rep.r2_xm[m]);
  }
  const Eigen::Index qx = ds.exposure.cols();
  rep.total = fits.exposure.beta;
  rep.direct = fits.joint.beta.head(qx);
  rep.joint_mediator = fits.joint.beta.tail(ds.mediators.cols());
  rep.marginal_mediator = fits.mediators.beta;
  rep.regression = regression;
  if (qx == 1) {
    rep.product_proportion =
        product_measure(regression, rep.joint_mediator, rep.total[0]);
    rep.difference_proportion = difference_measure(rep.direct[0]);
  }
  rep.n = ds.n();
  rep.n_events = count_events(ds.outcomes);
  rep.exposure_names = ds.exposure.names;
  rep.mediator_names = ds.mediators.names;
  return rep;
}

MediationReport r2_mediation(const MediationDataset& ds,
                             const MediationOptions& opts) {
  const ThreeFits fits = fit_three_models(ds, opts);
  return assemble_report(ds, fits, fit_mediator_regressions(ds), opts.r2);
}

std::vector<std::pair<std::string, double>> report_quantities(
    const MediationReport& report) {
  std::vector<std::pair<std::string, double>> out;
  for (Measure m : kMeasures) {
    const std::string s(measure_suffix(m));
    const auto& e = report[m];
    out.emplace_back("r2_tx_" + s, e.r2_tx);
    out.emplace_back("r2_tm_" + s, e.r2_tm);
    out.emplace_back("r2_txm_" + s, e.r2_txm);
    out.emplace_back("r2_med_" + s, e.r2_med);
    out.emplace_back("sos_" + s, e.sos);
  }
  if (report.product_proportion) {
    out.emplace_back("product_proportion", *report.product_proportion);
  }
  if (report.difference_proportion) {
    out.emplace_back("difference_proportion", *report.difference_proportion);
  }
  return out;
}

double sorted_quantile(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BootstrapResult bootstrap_ci(const MediationDataset& ds,
                             const BootstrapOptions& boot,
                             const MediationOptions& opts) {
  if (boot.replicates < 100) {
    throw std::invalid_argument("bootstrap needs at least 100 replicates");
  }
  if (!(boot.level > 0.0 && boot.level < 1.0)) {
    throw std::invalid_argument("bootstrap level must lie in (0, 1)");
  }
  const std::size_t n = ds.n();
  std::vector<std::optional<std::vector<std::pair<std::string, double>>>>
      results(boot.replicates);

  parallel_for(boot.replicates, boot.parallelism, [&](std::size_t b) {
    Rng rng = make_stream(boot.seed, b);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = static_cast<std::size_t>(rng() % n);
    try {
      results[b] = report_quantities(r2_mediation(ds.select_rows(rows), opts));
    } catch (const NumericalError&) {
      results[b].reset();
    }
  });

  BootstrapResult out;
  out.n_replicates = boot.replicates;
  std::map<std::string, std::vector<double>> draws;
  for (const auto& r : results) {
    if (!r) {
      ++out.n_failed;
      continue;
    }
    for (const auto& [name, value] : *r) {
      if (std::isfinite(value)) draws[name].push_back(value);
    }
  }
  if (5 * out.n_failed > boot.replicates) {
    throw NumericalError("bootstrap unreliable: " + std::to_string(out.n_failed) +
                         " of " + std::to_string(boot.replicates) +
                         " replicates failed");
  }
  const double alpha = 1.0 - boot.level;
  for (auto& [name, values] : draws) {
    if (!boot.quantities.empty() &&
        std::find(boot.quantities.begin(), boot.quantities.end(), name) ==
            boot.quantities.end()) {
      continue;
    }
    std::sort(values.begin(), values.end());
    out.intervals[name] = {sorted_quantile(values, alpha / 2.0),
                           sorted_quantile(values, 1.0 - alpha / 2.0),
                           boot.level, values.size()};
  }
  for (const auto& name : boot.quantities) {
    if (!out.intervals.contains(name)) {
      throw std::invalid_argument("unknown bootstrap quantity '" + name + "'");
    }
  }
  return out;
}

}  // namespace survmed
