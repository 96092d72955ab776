#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracle.hpp"
#include "survmed/cox.hpp"

using namespace survmed;

namespace {

CovariateMatrix column(std::initializer_list<double> values, const char* name = "z") {
  CovariateMatrix z;
  z.values = Eigen::Map<const Eigen::VectorXd>(values.begin(),
                                               static_cast<Eigen::Index>(values.size()));
  z.names = {name};
  return z;
}

std::vector<SurvivalRecord> events(std::initializer_list<std::pair<double, bool>> ys) {
  std::vector<SurvivalRecord> out;
  for (auto [t, e] : ys) out.push_back({0.0, t, e});
  return out;
}

// Random one-covariate data with an interior maximizer (not monotone).
bool has_interior_optimum(const std::vector<SurvivalRecord>& y, const Eigen::MatrixXd& z) {
  auto f = [&](double b) { return oracle::partial_loglik(Eigen::VectorXd::Constant(1, b), y, z, true); };
  const double best = oracle::golden_max(f, -10.0, 10.0);
  return std::abs(best) < 9.0;
}

}  // namespace

TEST_CASE("null partial likelihood with risk sets of sizes 3, 2, 1") {
  const auto y = events({{1.0, true}, {2.0, true}, {3.0, true}});
  const auto z = column({0.3, -1.0, 2.0});
  const double ll = partial_loglik(Eigen::VectorXd::Zero(1), y, z, TieMethod::Breslow);
  CHECK(ll == doctest::Approx(-(std::log(3.0) + std::log(2.0) + std::log(1.0))).epsilon(1e-14));
}

TEST_CASE("Efron equals Breslow exactly without ties") {
  Rng rng = make_stream(3, 0);
  for (int rep = 0; rep < 10; ++rep) {
    auto d = fixtures::random_survival(rng, 15, 2, rep % 2 == 0, false);
    Eigen::VectorXd beta(2);
    beta << standard_normal(rng), standard_normal(rng);
    CHECK(partial_loglik(beta, d.outcomes, d.z, TieMethod::Efron) ==
          partial_loglik(beta, d.outcomes, d.z, TieMethod::Breslow));
  }
}

TEST_CASE("subject entering after the last event changes nothing") {
  Rng rng = make_stream(4, 0);
  auto d = fixtures::random_survival(rng, 12, 1, true, true);
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, 0.7);
  const double before = partial_loglik(beta, d.outcomes, d.z);

  double last = 0.0;
  for (const auto& r : d.outcomes) last = std::max(last, r.exit);
  d.outcomes.push_back({last + 1.0, last + 2.0, true});
  d.z.values.conservativeResize(d.z.rows() + 1, 1);
  d.z.values(d.z.rows() - 1, 0) = 1.5;
  CHECK(partial_loglik(beta, d.outcomes, d.z) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("partial likelihood matches direct risk-set enumeration") {
  Rng rng = make_stream(5, 0);
  for (int rep = 0; rep < 40; ++rep) {
    const bool truncate = rep % 2 == 0;
    const bool ties = rep % 3 != 0;
    auto d = fixtures::random_survival(rng, 25, 3, truncate, ties);
    Eigen::VectorXd beta(3);
    for (auto& b : beta) b = 0.5 * standard_normal(rng);
    for (TieMethod tm : {TieMethod::Efron, TieMethod::Breslow}) {
      const double ours = partial_loglik(beta, d.outcomes, d.z, tm);
      const double ref = oracle::partial_loglik(beta, d.outcomes, d.z.values,
                                                tm == TieMethod::Efron);
      CHECK(ours == doctest::Approx(ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("score and Hessian agree with central differences") {
  Rng rng = make_stream(6, 0);
  for (int rep = 0; rep < 30; ++rep) {
    auto d = fixtures::random_survival(rng, 20, 3, rep % 2 == 0, rep % 4 == 1);
    Eigen::VectorXd beta(3);
    for (auto& b : beta) b = standard_normal(rng);
    const TieMethod tm = rep % 3 == 0 ? TieMethod::Breslow : TieMethod::Efron;
    const auto sh = score_and_hessian(beta, d.outcomes, d.z, tm);

    const auto fd = oracle::central_gradient(
        [&](const Eigen::VectorXd& b) { return partial_loglik(b, d.outcomes, d.z, tm); }, beta);
    const double scale = std::max(1.0, sh.score.lpNorm<Eigen::Infinity>());
    CHECK((sh.score - fd).lpNorm<Eigen::Infinity>() / scale < 1e-6);

    for (Eigen::Index j = 0; j < 3; ++j) {
      const auto col = oracle::central_gradient(
          [&](const Eigen::VectorXd& b) {
            return score_and_hessian(b, d.outcomes, d.z, tm).score[j];
          },
          beta);
      const double hs = std::max(1.0, sh.hessian.col(j).lpNorm<Eigen::Infinity>());
      CHECK((sh.hessian.col(j) - col).lpNorm<Eigen::Infinity>() / hs < 1e-6);
    }
  }
}

TEST_CASE("Breslow Hessian is negative semidefinite") {
  Rng rng = make_stream(7, 0);
  for (int rep = 0; rep < 25; ++rep) {
    auto d = fixtures::random_survival(rng, 20, 4, rep % 2 == 0, true);
    Eigen::VectorXd beta(4);
    for (auto& b : beta) b = 2.0 * standard_normal(rng);
    const auto sh = score_and_hessian(beta, d.outcomes, d.z, TieMethod::Breslow);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sh.hessian);
    CHECK(eig.eigenvalues().maxCoeff() <= 1e-10 * std::max(1.0, -eig.eigenvalues().minCoeff()));
  }
}

TEST_CASE("two subjects with perfect separation report a monotone likelihood") {
  // L(beta) = e^beta / (e^beta + 1) increases without bound.
  const auto y = events({{1.0, true}, {2.0, true}});
  const auto z = column({1.0, 0.0});
  try {
    fit_cox(y, z);
    FAIL("expected MonotoneLikelihood");
  } catch (const CoxError& e) {
    CHECK(e.kind() == CoxFailure::MonotoneLikelihood);
  }
}

TEST_CASE("degenerate designs") {
  const auto y = events({{1.0, true}, {2.0, false}, {3.0, true}, {4.0, true}});
  SUBCASE("all-zero covariate is singular") {
    try {
      fit_cox(y, column({0.0, 0.0, 0.0, 0.0}));
      FAIL("expected Singular");
    } catch (const CoxError& e) {
      CHECK(e.kind() == CoxFailure::Singular);
    }
  }
  SUBCASE("duplicated column is singular") {
    CovariateMatrix z;
    z.values.resize(4, 2);
    z.values << 0.1, 0.1, -1.0, -1.0, 0.4, 0.4, 2.0, 2.0;
    z.names = {"x", "x_copy"};
    try {
      fit_cox(y, z);
      FAIL("expected Singular");
    } catch (const CoxError& e) {
      CHECK(e.kind() == CoxFailure::Singular);
    }
  }
  SUBCASE("no events") {
    const auto censored = events({{1.0, false}, {2.0, false}});
    try {
      fit_cox(censored, column({0.0, 1.0}));
      FAIL("expected NoEvents");
    } catch (const CoxError& e) {
      CHECK(e.kind() == CoxFailure::NoEvents);
    }
    CHECK_THROWS_AS(partial_loglik(Eigen::VectorXd::Zero(1), censored, column({0.0, 1.0})),
                    CoxError);
  }
}

TEST_CASE("six-subject fit matches golden-section search") {
  const auto y = events({{1.0, true}, {2.0, true}, {3.0, false}, {4.0, true},
                         {5.0, true}, {6.0, false}});
  const auto z = column({1.2, -0.3, 0.8, 0.5, -1.1, 0.1});
  const CoxFit fit = fit_cox(y, z, TieMethod::Efron);
  REQUIRE(fit.converged);
  const double ref = oracle::golden_max(
      [&](double b) {
        return oracle::partial_loglik(Eigen::VectorXd::Constant(1, b), y, z.values, true);
      },
      -10.0, 10.0);
  CHECK(std::abs(fit.beta[0] - ref) < 1e-4);
}

TEST_CASE("small random datasets match the brute-force maximizer") {
  Rng rng = make_stream(8, 0);
  int checked = 0;
  while (checked < 50) {
    const std::size_t n = 3 + rng() % 6;
    auto d = fixtures::random_survival(rng, n, 1, checked % 3 == 0, checked % 4 == 0);
    if (!has_interior_optimum(d.outcomes, d.z.values)) continue;
    const CoxFit fit = fit_cox(d.outcomes, d.z);
    const double ref = oracle::golden_max(
        [&](double b) {
          return oracle::partial_loglik(Eigen::VectorXd::Constant(1, b), d.outcomes,
                                        d.z.values, true);
        },
        -10.0, 10.0);
    CHECK(std::abs(fit.beta[0] - ref) < 1e-4);
    ++checked;
  }
}

TEST_CASE("fit invariants on moderate random data") {
  Rng rng = make_stream(9, 0);
  for (int rep = 0; rep < 10; ++rep) {
    auto d = fixtures::random_survival(rng, 200, 3, rep % 2 == 1, rep % 3 == 0);
    // Give the covariates some signal.
    for (std::size_t i = 0; i < d.outcomes.size(); ++i) {
      const double lp = 0.8 * d.z.values(static_cast<Eigen::Index>(i), 0);
      auto& r = d.outcomes[i];
      r.exit = r.entry + (r.exit - r.entry) * std::exp(-lp);
    }
    const CoxFit fit = fit_cox(d.outcomes, d.z);
    REQUIRE(fit.converged);
    CHECK(fit.chi2 >= -1e-8);
    const auto sh = score_and_hessian(fit.beta, d.outcomes, d.z);
    CHECK(sh.score.lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK((fit.covariance - fit.covariance.transpose()).norm() < 1e-12);
    Eigen::LLT<Eigen::MatrixXd> llt(fit.covariance);
    CHECK(llt.info() == Eigen::Success);
    CHECK(fit.chi2 == 2.0 * (partial_loglik(fit.beta, d.outcomes, d.z) -
                             partial_loglik(Eigen::VectorXd::Zero(3), d.outcomes, d.z)));
    CHECK(fit.null_loglik == partial_loglik(Eigen::VectorXd::Zero(3), d.outcomes, d.z));
    CHECK(fit.n_events == count_events(d.outcomes));

    // Nested model on the first column only.
    const std::array<Eigen::Index, 1> first = {0};
    const CoxFit small = fit_cox(d.outcomes, select_columns(d.z, first));
    CHECK(fit.loglik >= small.loglik - 1e-8);
    CHECK(fit.chi2 >= small.chi2 - 1e-8);
  }
}

TEST_CASE("row order does not matter") {
  Rng rng = make_stream(10, 0);
  auto d = fixtures::random_survival(rng, 150, 2, true, true);
  const CoxFit a = fit_cox(d.outcomes, d.z);
  std::vector<std::size_t> perm(d.outcomes.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<SurvivalRecord> y2;
  for (auto i : perm) y2.push_back(d.outcomes[i]);
  const CoxFit b = fit_cox(y2, select_rows(d.z, perm));
  CHECK(std::abs(a.loglik - b.loglik) < 1e-10);
  CHECK(std::abs(a.chi2 - b.chi2) < 1e-10);
  CHECK((a.beta - b.beta).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("scaling a covariate rescales its coefficient only") {
  Rng rng = make_stream(11, 0);
  auto d = fixtures::random_survival(rng, 150, 2, false, false);
  const CoxFit a = fit_cox(d.outcomes, d.z);
  for (double s : {0.1, 0.5, 7.0, 250.0}) {
    CovariateMatrix scaled = d.z;
    scaled.values.col(1) *= s;
    const CoxFit b = fit_cox(d.outcomes, scaled);
    CHECK(b.beta[1] * s == doctest::Approx(a.beta[1]).epsilon(1e-8));
    CHECK(b.beta[0] == doctest::Approx(a.beta[0]).epsilon(1e-8));
    CHECK(std::abs(a.loglik - b.loglik) < 1e-8);
    CHECK(std::abs(a.chi2 - b.chi2) < 1e-8);
    CHECK((a.linear_predictor - b.linear_predictor).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("iteration cap returns a flagged, unconverged fit") {
  Rng rng = make_stream(12, 0);
  auto d = fixtures::random_survival(rng, 100, 2, false, false);
  FitOptions opts;
  opts.max_iter = 1;
  opts.gradient_tol = 1e-300;
  opts.loglik_rel_tol = 0.0;
  const CoxFit fit = fit_cox(d.outcomes, d.z, TieMethod::Efron, opts);
  CHECK_FALSE(fit.converged);
  CHECK(fit.iterations == 1);
}

TEST_CASE("null fit packages beta = 0") {
  Rng rng = make_stream(13, 0);
  auto d = fixtures::random_survival(rng, 30, 2, false, false);
  const CoxFit f = null_fit(d.outcomes, d.z);
  CHECK(f.chi2 == 0.0);
  CHECK(f.beta.isZero(0.0));
  CHECK(f.converged);
}

TEST_CASE("tie method names") {
  CHECK(parse_tie_method("efron") == TieMethod::Efron);
  CHECK(parse_tie_method("breslow") == TieMethod::Breslow);
  CHECK_THROWS_AS(parse_tie_method("exact"), std::invalid_argument);
}
