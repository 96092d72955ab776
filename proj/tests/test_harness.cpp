#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "survmed/errors.hpp"
#include "survmed/harness.hpp"

using namespace survmed;

namespace {

ScenarioConfig small_m1(std::size_t n = 300) {
  ScenarioConfig cfg = make_scenarios(Family::M1)[2];
  cfg.n = n;
  return cfg;
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("survmed_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

void check_identical(const ReplicationSummary& a, const ReplicationSummary& b) {
  REQUIRE(a.quantities.size() == b.quantities.size());
  CHECK(a.n_failed_replicates == b.n_failed_replicates);
  for (std::size_t k = 0; k < a.quantities.size(); ++k) {
    const auto& x = a.quantities[k];
    const auto& y = b.quantities[k];
    CHECK(x.quantity == y.quantity);
    CHECK(std::memcmp(&x.mean, &y.mean, sizeof(double)) == 0);
    CHECK(std::memcmp(&x.mc_sd, &y.mc_sd, sizeof(double)) == 0);
    CHECK(x.n_replicates == y.n_replicates);
  }
}

}  // namespace

TEST_CASE("single replicate equals one pipeline run") {
  const ScenarioConfig cfg = small_m1();
  const auto s = run_replications(cfg, 1, 77, 1);
  CHECK(s.q == 1);

  ScenarioConfig seeded = cfg;
  seeded.seed = 77;
  Rng rng = make_stream(77, 0);
  const auto ds = gen_dataset(seeded, calibrate_censoring(seeded), rng);
  const auto rep = r2_mediation(ds);
  for (const auto& [name, value] : report_quantities(rep)) {
    CHECK(s.at(name).mean == value);
    CHECK(s.at(name).mc_sd == 0.0);
    CHECK(s.at(name).n_replicates == 1);
  }
  CHECK(s.at("censor_rate").mean ==
        doctest::Approx(1.0 - static_cast<double>(count_events(ds.outcomes)) / 300.0));
  CHECK_THROWS_AS((void)s.at("nope"), std::out_of_range);
}

TEST_CASE("summaries do not depend on the worker count") {
  const ScenarioConfig cfg = small_m1(200);
  const auto one = run_replications(cfg, 12, 5, 1);
  const auto eight = run_replications(cfg, 12, 5, 8);
  check_identical(one, eight);
}

TEST_CASE("summary means are invariant to replicate order") {
  const ScenarioConfig cfg = small_m1(200);
  const std::size_t q = 6;
  const auto s = run_replications(cfg, q, 11, 2);

  ScenarioConfig seeded = cfg;
  seeded.seed = 11;
  const double scale = calibrate_censoring(seeded);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t k = q; k-- > 0;) {
    Rng rng = make_stream(11, k);
    const double v = r2_mediation(gen_dataset(seeded, scale, rng))[Measure::W].sos;
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / q;
  CHECK(s.at("sos_w").mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(s.at("sos_w").mc_sd ==
        doctest::Approx(std::sqrt((sum_sq - q * mean * mean) / (q - 1))).epsilon(1e-8));
  for (const auto& qs : s.quantities) {
    CHECK(qs.n_replicates + qs.n_failures == q);
    CHECK(qs.mc_sd >= 0.0);
  }
}

TEST_CASE("family runs and emitted files") {
  FamilyOverrides ov;
  ov.n = 150;
  ov.q = 2;
  ov.seed = 3;
  const auto m5 = run_family(Family::M5, ov);
  REQUIRE(m5.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(m5[i].axis_name == "p");
    CHECK(m5[i].axis_value == static_cast<double>(i + 1));
  }
  // Product and difference proportions exist (scalar exposure).
  CHECK(std::isfinite(m5[0].at("product_proportion").mean));

  std::ostringstream sos;
  write_summary_csv(sos, m5, {"sos_"});
  std::istringstream lines(sos.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == kSummaryHeader);
  std::size_t rows = 0;
  for (std::string l; std::getline(lines, l);) ++rows;
  CHECK(rows == 5 * 5);

  const auto dir = scratch_dir("family");
  const auto files = write_family_outputs(Family::M5, m5, dir);
  CHECK(files.size() == 6);
  for (const auto& f : files) {
    REQUIRE(std::filesystem::exists(f));
    if (f.extension() != ".csv") continue;
    const auto csv = read_lines(f);
    CHECK(csv.front() == kSummaryHeader);
    for (const auto& l : csv) CHECK(std::count(l.begin(), l.end(), ',') == 7);
  }
  CHECK(read_lines(dir / "M5_sos.csv").size() == 1 + 25);
  CHECK(read_lines(dir / "M5_r2_components.csv").size() == 1 + 75);
  CHECK(read_lines(dir / "M5_proportions.csv").size() == 1 + 10);
  CHECK(read_lines(dir / "M5_censoring.csv").size() == 1 + 5);
  const auto doc = nlohmann::json::parse(slurp(dir / "M5.json"));
  CHECK(doc["scenarios"].size() == 5);

  // Same inputs, same bytes.
  const auto again = scratch_dir("family_again");
  write_family_outputs(Family::M5, run_family(Family::M5, ov), again);
  for (const auto& f : files) CHECK(slurp(f) == slurp(again / f.filename()));

  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(again);
}

TEST_CASE("axis filter and size overrides") {
  FamilyOverrides ov;
  ov.n = 120;
  ov.q = 1;
  ov.axis_values = std::vector<double>{0.25, 0.95};
  const auto s1 = run_family(Family::S1, ov);
  REQUIRE(s1.size() == 2);
  CHECK(s1[0].scenario_id == "S1-4");
  CHECK(s1[1].scenario_id == "S1-9");
  CHECK(s1[0].q == 1);
}

TEST_CASE("analysis tables") {
  ScenarioConfig cfg = make_scenarios(Family::M1)[3];
  cfg.n = 2000;
  cfg.p = 3;
  cfg.a.resize(3);
  cfg.b.resize(3);
  Rng rng = make_stream(79, 0);
  const auto ds = gen_dataset(cfg, rng);

  AnalysisOptions opts;
  opts.random_control = true;
  opts.seed = 4;
  const auto res = run_analysis(ds, opts);
  REQUIRE(res.single.size() == 4);
  CHECK(res.single.back().mediator == kRandomControlName);
  for (Measure m : kMeasures) CHECK(std::abs(res.single.back().report[m].sos) < 0.05);
  CHECK(res.single[1].mediator == "M2");
  CHECK(res.joint.mediator_names.size() == 3);

  std::ostringstream t1, t2;
  write_table1(t1, res);
  write_table2(t2, res);
  const auto count_rows = [](const std::string& s) {
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
  };
  CHECK(t1.str().rfind("mediator,sos_n,sos_k,sos_r,sos_b,sos_w\n", 0) == 0);
  CHECK(count_rows(t1.str()) == 1 + 4);
  CHECK(t2.str().rfind("measure,r2_tx,r2_tm,r2_txm,r2_med,sos\n", 0) == 0);
  CHECK(count_rows(t2.str()) == 1 + 5);
  std::istringstream rows(t2.str());
  for (std::string l; std::getline(rows, l);) CHECK(std::count(l.begin(), l.end(), ',') == 5);

  const auto js = nlohmann::json::parse(report_json(res));
  CHECK(js["single"].size() == 4);
  CHECK(js["joint"]["measures"]["b"]["sos"].get<double>() ==
        doctest::Approx(res.joint[Measure::B].sos));

  AnalysisOptions plain;
  CHECK(run_analysis(ds, plain).single.size() == 3);
}

TEST_CASE("analysis outputs and bootstrap section") {
  ScenarioConfig cfg = make_scenarios(Family::S1)[3];
  cfg.n = 300;
  Rng rng = make_stream(80, 0);
  const auto ds = gen_dataset(cfg, rng);
  AnalysisOptions opts;
  opts.bootstrap = BootstrapOptions{};
  opts.bootstrap->replicates = 100;
  opts.bootstrap->quantities = {"sos_n"};
  const auto res = run_analysis(ds, opts);
  REQUIRE(res.joint_ci.has_value());
  const auto dir = scratch_dir("analysis");
  const auto files = write_analysis_outputs(res, dir);
  CHECK(files.size() == 3);
  const auto js = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(js["joint"]["bootstrap"]["intervals"].contains("sos_n"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("undefined values are written as null and nan") {
  ScenarioConfig cfg = make_scenarios(Family::S1)[0];
  cfg.n = 100;
  Rng rng = make_stream(81, 0);
  const auto ds = gen_dataset(cfg, rng);
  AnalysisResult res;
  const ThreeFits nulls{null_fit(ds.outcomes, ds.exposure), null_fit(ds.outcomes, ds.mediators),
                        null_fit(ds.outcomes, hcat(ds.exposure, ds.mediators))};
  res.joint = assemble_report(ds, nulls, fit_mediator_regressions(ds));
  const auto js = nlohmann::json::parse(report_json(res));
  CHECK(js["joint"]["measures"]["n"]["sos"].is_null());
  std::ostringstream t2;
  write_table2(t2, res);
  CHECK(t2.str().find(",nan\n") != std::string::npos);
  CHECK(format_number(0.125) == "0.125");
}

TEST_CASE("invalid data is refused") {
  ScenarioConfig cfg = make_scenarios(Family::S1)[0];
  cfg.n = 100;
  Rng rng = make_stream(82, 0);
  auto ds = gen_dataset(cfg, rng);
  ds.outcomes[5].exit = -1.0;
  CHECK_THROWS_AS(run_analysis(ds, {}), DataError);
}
