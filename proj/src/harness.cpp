#include "survmed/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "survmed/errors.hpp"
#include "survmed/parallel.hpp"
#include "survmed/random.hpp"

namespace survmed {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

const QuantitySummary& ReplicationSummary::at(const std::string& quantity) const {
  for (const auto& q : quantities) {
    if (q.quantity == quantity) return q;
  }
  throw std::out_of_range("no quantity '" + quantity + "' in " + scenario_id);
}

std::vector<std::string> replication_quantities() {
  std::vector<std::string> names;
  for (const char* prefix : {"sos_", "r2_med_", "r2_tx_", "r2_tm_", "r2_txm_"}) {
    for (Measure m : kMeasures) names.push_back(prefix + std::string(measure_suffix(m)));
  }
  names.emplace_back("product_proportion");
  names.emplace_back("difference_proportion");
  names.emplace_back("censor_rate");
  return names;
}

namespace {

std::vector<double> replicate_values(const MediationDataset& ds,
                                     const MediationOptions& opts,
                                     const std::vector<std::string>& names) {
  const MediationReport rep = r2_mediation(ds, opts);
  const auto flat = report_quantities(rep);
  std::vector<double> out(names.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == "censor_rate") {
      out[k] = 1.0 - static_cast<double>(rep.n_events) / static_cast<double>(rep.n);
      continue;
    }
    for (const auto& [name, value] : flat) {
      if (name == names[k]) out[k] = value;
    }
  }
  return out;
}

}  // namespace

ReplicationSummary run_replications(const ScenarioConfig& cfg, std::size_t q,
                                    std::uint64_t seed, unsigned parallelism,
                                    const MediationOptions& opts) {
  if (q < 1) throw std::invalid_argument("need at least one replicate");
  ScenarioConfig seeded = cfg;
  seeded.seed = seed;
  const double censor_scale = calibrate_censoring(seeded);
  const auto names = replication_quantities();

  std::vector<std::optional<std::vector<double>>> results(q);
  parallel_for(q, parallelism, [&](std::size_t k) {
    Rng rng = make_stream(seed, k);
    const MediationDataset ds = gen_dataset(seeded, censor_scale, rng);
    try {
      results[k] = replicate_values(ds, opts, names);
    } catch (const NumericalError&) {
      results[k].reset();
    }
  });

  ReplicationSummary s;
  s.scenario_id = cfg.scenario_id;
  s.axis_name = cfg.axis_name;
  s.axis_value = cfg.axis_value;
  s.q = q;
  for (const auto& r : results) s.n_failed_replicates += r ? 0 : 1;
  if (2 * s.n_failed_replicates > q) {
    throw NumericalError("scenario " + cfg.scenario_id + " unusable: " +
                         std::to_string(s.n_failed_replicates) + " of " +
                         std::to_string(q) + " replicates failed");
  }
  for (std::size_t k = 0; k < names.size(); ++k) {
    QuantitySummary qs;
    qs.quantity = names[k];
    double sum = 0.0;
    for (const auto& r : results) {
      if (r && std::isfinite((*r)[k])) {
        sum += (*r)[k];
        ++qs.n_replicates;
      }
    }
    qs.n_failures = q - qs.n_replicates;
    if (qs.n_replicates == 0) {
      qs.mean = qs.mc_sd = std::numeric_limits<double>::quiet_NaN();
    } else {
      qs.mean = sum / static_cast<double>(qs.n_replicates);
      double ss = 0.0;
      for (const auto& r : results) {
        if (r && std::isfinite((*r)[k])) ss += ((*r)[k] - qs.mean) * ((*r)[k] - qs.mean);
      }
      qs.mc_sd = qs.n_replicates > 1
                     ? std::sqrt(ss / static_cast<double>(qs.n_replicates - 1))
                     : 0.0;
    }
    s.quantities.push_back(std::move(qs));
  }
  return s;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

}  // namespace

std::vector<ReplicationSummary> run_family(Family family,
                                           const FamilyOverrides& overrides) {
  std::vector<ReplicationSummary> out;
  for (auto cfg : make_scenarios(family)) {
    if (overrides.axis_values) {
      const auto& keep = *overrides.axis_values;
      const bool listed = std::any_of(keep.begin(), keep.end(), [&](double v) {
        return std::abs(v - cfg.axis_value) <= 1e-9 * std::max(1.0, std::abs(v));
      });
      if (!listed) continue;
    }
    if (overrides.n) cfg.n = *overrides.n;
    if (overrides.q) cfg.replications = *overrides.q;
    // Distinct axis points draw from distinct seeds.
    const std::uint64_t seed =
        splitmix64(overrides.seed ^ splitmix64(fnv1a(cfg.scenario_id)));
    out.push_back(run_replications(cfg, cfg.replications, seed,
                                   overrides.parallelism, overrides.mediation));
  }
  return out;
}

void write_summary_csv(std::ostream& out,
                       const std::vector<ReplicationSummary>& summaries,
                       const std::vector<std::string>& prefixes) {
  out << kSummaryHeader << '\n';
  for (const auto& s : summaries) {
    for (const auto& q : s.quantities) {
      const bool keep =
          prefixes.empty() ||
          std::any_of(prefixes.begin(), prefixes.end(),
                      [&](const std::string& p) { return q.quantity.rfind(p, 0) == 0; });
      if (!keep) continue;
      out << s.scenario_id << ',' << s.axis_name << ',' << format_number(s.axis_value)
          << ',' << q.quantity << ',' << format_number(q.mean) << ','
          << format_number(q.mc_sd) << ',' << q.n_replicates << ',' << q.n_failures
          << '\n';
    }
  }
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

}  // namespace

std::vector<std::filesystem::path> write_family_outputs(
    Family family, const std::vector<ReplicationSummary>& summaries,
    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string id = to_string(family);
  const std::vector<std::pair<std::string, std::vector<std::string>>> groups = {
      {"sos", {"sos_"}},
      {"r2_med", {"r2_med_"}},
      {"r2_components", {"r2_tx_", "r2_tm_", "r2_txm_"}},
      {"proportions", {"product_proportion", "difference_proportion"}},
      {"censoring", {"censor_rate"}}};
  std::vector<std::filesystem::path> written;
  for (const auto& [group, prefixes] : groups) {
    std::ostringstream os;
    write_summary_csv(os, summaries, prefixes);
    const auto path = out_dir / (id + "_" + group + ".csv");
    write_file(path, os.str());
    written.push_back(path);
  }

  nlohmann::ordered_json doc;
  doc["family"] = id;
  doc["scenarios"] = nlohmann::ordered_json::array();
  for (const auto& s : summaries) {
    nlohmann::ordered_json js;
    js["scenario_id"] = s.scenario_id;
    js["axis_name"] = s.axis_name;
    js["axis_value"] = s.axis_value;
    js["replications"] = s.q;
    js["failed_replicates"] = s.n_failed_replicates;
    for (const auto& q : s.quantities) {
      js["quantities"][q.quantity] = {{"mean", q.mean},
                                      {"mc_sd", q.mc_sd},
                                      {"n_replicates", q.n_replicates},
                                      {"n_failures", q.n_failures}};
    }
    doc["scenarios"].push_back(std::move(js));
  }
  const auto json_path = out_dir / (id + ".json");
  write_file(json_path, doc.dump(2) + "\n");
  written.push_back(json_path);
  return written;
}

AnalysisResult run_analysis(const MediationDataset& ds, const AnalysisOptions& opts) {
  const auto check = validate_dataset(ds);
  if (!check.ok()) throw DataError("invalid dataset: " + check.describe());

  AnalysisResult result;
  for (Eigen::Index j = 0; j < ds.mediators.cols(); ++j) {
    const std::array<Eigen::Index, 1> col = {j};
    result.single.push_back({ds.mediators.names[static_cast<std::size_t>(j)],
                             r2_mediation(ds.select_mediators(col), opts.mediation)});
  }
  if (opts.random_control) {
    MediationDataset control = ds;
    Rng rng = make_stream(opts.seed, 0x52414e44ULL);
    control.mediators.values.resize(static_cast<Eigen::Index>(ds.n()), 1);
    for (Eigen::Index i = 0; i < control.mediators.values.rows(); ++i) {
      control.mediators.values(i, 0) = standard_normal(rng);
    }
    control.mediators.names = {kRandomControlName};
    result.single.push_back({kRandomControlName, r2_mediation(control, opts.mediation)});
  }
  result.joint = r2_mediation(ds, opts.mediation);
  if (opts.bootstrap) {
    result.joint_ci = bootstrap_ci(ds, *opts.bootstrap, opts.mediation);
  }
  return result;
}

void write_table1(std::ostream& out, const AnalysisResult& result) {
  out << "mediator,sos_n,sos_k,sos_r,sos_b,sos_w\n";
  for (const auto& row : result.single) {
    out << row.mediator;
    for (Measure m : kMeasures) out << ',' << format_number(row.report[m].sos);
    out << '\n';
  }
}

void write_table2(std::ostream& out, const AnalysisResult& result) {
  out << "measure,r2_tx,r2_tm,r2_txm,r2_med,sos\n";
  for (Measure m : kMeasures) {
    const auto& e = result.joint[m];
    out << measure_label(m) << ',' << format_number(e.r2_tx) << ','
        << format_number(e.r2_tm) << ',' << format_number(e.r2_txm) << ','
        << format_number(e.r2_med) << ',' << format_number(e.sos) << '\n';
  }
}

namespace {

using ojson = nlohmann::ordered_json;

ojson optional_number(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson named(const Eigen::VectorXd& v, const std::vector<std::string>& names) {
  ojson out = ojson::object();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out[names.at(static_cast<std::size_t>(i))] = v[i];
  }
  return out;
}

ojson report_to_json(const MediationReport& rep) {
  ojson js;
  js["n"] = rep.n;
  js["n_events"] = rep.n_events;
  for (Measure m : kMeasures) {
    const auto& e = rep[m];
    js["measures"][std::string(measure_suffix(m))] = {
        {"r2_tx", e.r2_tx},   {"r2_tm", e.r2_tm},
        {"r2_txm", e.r2_txm}, {"r2_med", e.r2_med},
        {"sos", optional_number(e.sos)}, {"sos_defined", e.sos_defined},
        {"r2_med_negative", e.negative}};
  }
  auto& coef = js["coefficients"];
  coef["total"] = named(rep.total, rep.exposure_names);
  coef["direct"] = named(rep.direct, rep.exposure_names);
  coef["mediator_joint"] = named(rep.joint_mediator, rep.mediator_names);
  coef["mediator_marginal"] = named(rep.marginal_mediator, rep.mediator_names);
  ojson a = ojson::object();
  for (Eigen::Index j = 0; j < rep.regression.a.rows(); ++j) {
    a[rep.mediator_names.at(static_cast<std::size_t>(j))] =
        named(rep.regression.a.row(j).transpose(), rep.exposure_names);
  }
  coef["mediator_on_exposure"] = a;
  coef["mediator_intercept"] = named(rep.regression.intercepts, rep.mediator_names);
  coef["mediator_residual_sd"] = named(rep.regression.residual_sd, rep.mediator_names);
  js["product_proportion"] =
      rep.product_proportion ? ojson(*rep.product_proportion) : ojson(nullptr);
  js["difference_proportion"] =
      rep.difference_proportion ? ojson(*rep.difference_proportion) : ojson(nullptr);
  return js;
}

}  // namespace

std::string report_json(const AnalysisResult& result, int indent) {
  ojson doc;
  doc["dropped_rows"] = result.dropped_rows;
  doc["joint"] = report_to_json(result.joint);
  if (result.joint_ci) {
    ojson ci;
    ci["replicates"] = result.joint_ci->n_replicates;
    ci["failed_replicates"] = result.joint_ci->n_failed;
    for (const auto& [name, iv] : result.joint_ci->intervals) {
      ci["intervals"][name] = {{"lower", iv.lower},
                               {"upper", iv.upper},
                               {"level", iv.level},
                               {"n_used", iv.n_used}};
    }
    doc["joint"]["bootstrap"] = ci;
  }
  doc["single"] = ojson::array();
  for (const auto& row : result.single) {
    ojson js = report_to_json(row.report);
    js["mediator"] = row.mediator;
    doc["single"].push_back(std::move(js));
  }
  return doc.dump(indent);
}

std::vector<std::filesystem::path> write_analysis_outputs(
    const AnalysisResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ostringstream t1, t2;
  write_table1(t1, result);
  write_table2(t2, result);
  const std::vector<std::filesystem::path> paths = {
      out_dir / "table1.csv", out_dir / "table2.csv", out_dir / "report.json"};
  write_file(paths[0], t1.str());
  write_file(paths[1], t2.str());
  write_file(paths[2], report_json(result) + "\n");
  return paths;
}

}  // namespace survmed
