#include "survmed/cli.hpp"

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "survmed/csv_io.hpp"
#include "survmed/errors.hpp"
#include "survmed/harness.hpp"

namespace survmed {
namespace {

const std::vector<std::string> kFamilyIds = {"S1", "S2", "M1", "M2", "M3", "M4", "M5"};

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ';';
    s += format_number(v[i]);
  }
  return s;
}

void dump_scenarios(Family family, std::ostream& out) {
  out << "scenario_id,axis_name,axis_value,n,p,a,b,r,weibull_shape,weibull_eta,"
         "target_censor_rate,mediator_noise_sd,replications\n";
  for (const auto& c : make_scenarios(family)) {
    out << c.scenario_id << ',' << c.axis_name << ',' << format_number(c.axis_value)
        << ',' << c.n << ',' << c.p << ',' << join(c.a) << ',' << join(c.b) << ','
        << format_number(c.r) << ',' << format_number(c.weibull_shape) << ','
        << format_number(c.weibull_eta) << ',' << format_number(c.target_censor_rate)
        << ',' << format_number(c.mediator_noise_sd) << ',' << c.replications << '\n';
  }
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  return cli_main(argc, argv, std::cout, std::cerr);
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Survival mediation effect sizes under Cox models"};
  app.require_subcommand(1);

  std::string family_id;
  std::size_t q = 0;
  std::size_t n_override = 0;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  unsigned parallel = 1;
  std::string ties = "efron";

  auto* sim = app.add_subcommand("simulate", "Run a replicated scenario family");
  sim->add_option("--family", family_id, "Scenario family")
      ->required()
      ->check(CLI::IsMember(kFamilyIds));
  sim->add_option("--q", q, "Replicates per scenario (default 1000)");
  sim->add_option("--n", n_override, "Override the sample size");
  sim->add_option("--seed", seed, "Master seed");
  sim->add_option("--out", out_dir, "Output directory");
  sim->add_option("--parallel", parallel, "Worker threads")->check(CLI::PositiveNumber);
  sim->add_option("--ties", ties, "Tie method")->check(CLI::IsMember({"efron", "breslow"}));

  std::string data_path, config_path;
  std::size_t boot_reps = 0;
  double level = 0.95;
  bool random_control = false;
  auto* ana = app.add_subcommand("analyze", "Mediation analysis of a CSV dataset");
  ana->add_option("--data", data_path, "CSV data file")->required();
  ana->add_option("--config", config_path, "Column mapping file")->required();
  ana->add_option("--bootstrap", boot_reps, "Bootstrap replicates (>= 100)");
  ana->add_option("--level", level, "Confidence level")->check(CLI::Range(0.0, 1.0));
  ana->add_flag("--random-control", random_control, "Append a N(0,1) control mediator");
  ana->add_option("--seed", seed, "Seed for bootstrap and control");
  ana->add_option("--out", out_dir, "Output directory");
  ana->add_option("--parallel", parallel, "Worker threads")->check(CLI::PositiveNumber);
  auto* ties_opt = ana->add_option("--ties", ties, "Tie method (overrides config)")
                       ->check(CLI::IsMember({"efron", "breslow"}));

  auto* dump = app.add_subcommand("scenario-dump", "Print a family's config grid");
  dump->add_option("--family", family_id, "Scenario family")
      ->required()
      ->check(CLI::IsMember(kFamilyIds));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*dump) {
      dump_scenarios(parse_family(family_id), out);
      return kExitOk;
    }
    if (*sim) {
      const Family family = parse_family(family_id);
      FamilyOverrides ov;
      if (q > 0) ov.q = q;
      if (n_override > 0) ov.n = n_override;
      ov.seed = seed;
      ov.parallelism = parallel;
      ov.mediation.ties = parse_tie_method(ties);
      const auto summaries = run_family(family, ov);
      for (const auto& path : write_family_outputs(family, summaries, out_dir)) {
        out << "wrote " << path.string() << '\n';
      }
      return kExitOk;
    }
    if (*ana) {
      const ColumnMapping mapping = read_mapping(config_path);
      const CsvReadResult data = read_csv(data_path, mapping);
      AnalysisOptions opts;
      std::string tie_name = ties;
      if (ties_opt->count() == 0 && mapping.ties) tie_name = *mapping.ties;
      try {
        opts.mediation.ties = parse_tie_method(tie_name);
      } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
      }
      opts.random_control = random_control;
      opts.seed = seed;
      if (boot_reps > 0) {
        if (boot_reps < 100) {
          err << "--bootstrap needs at least 100 replicates\n";
          return kExitUsage;
        }
        opts.bootstrap = BootstrapOptions{boot_reps, level, seed, parallel, {}};
      }
      AnalysisResult result = run_analysis(data.dataset, opts);
      result.dropped_rows = data.dropped_rows;
      err << "n=" << data.dataset.n() << " events=" << count_events(data.dataset.outcomes)
          << " dropped_rows=" << data.dropped_rows << '\n';
      write_table2(out, result);
      for (const auto& path : write_analysis_outputs(result, out_dir)) {
        out << "wrote " << path.string() << '\n';
      }
      return kExitOk;
    }
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace survmed
