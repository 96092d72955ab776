#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "survmed/mediation.hpp"
#include "survmed/simulate.hpp"

namespace survmed {

struct QuantitySummary {
  std::string quantity;
  double mean = 0.0;
  double mc_sd = 0.0;
  std::size_t n_replicates = 0;  // replicates with a finite value
  std::size_t n_failures = 0;    // Q - n_replicates
};

struct ReplicationSummary {
  std::string scenario_id;
  std::string axis_name;
  double axis_value = 0.0;
  std::size_t q = 0;
  std::size_t n_failed_replicates = 0;
  std::vector<QuantitySummary> quantities;

  /// Throws std::out_of_range for an unknown quantity name.
  [[nodiscard]] const QuantitySummary& at(const std::string& quantity) const;
};

/// Quantity names collected per replicate, in output order.
std::vector<std::string> replication_quantities();

/// Q independent replicates of cfg, replicate k drawing from substream
/// (seed, k). Failed fits are excluded and counted; more than Q/2 failures
/// is a NumericalError. Output does not depend on `parallelism`.
ReplicationSummary run_replications(const ScenarioConfig& cfg, std::size_t q,
                                    std::uint64_t seed, unsigned parallelism,
                                    const MediationOptions& opts = {});

struct FamilyOverrides {
  std::optional<std::size_t> n;
  std::optional<std::size_t> q;
  /// Keep only grid points whose axis value is listed.
  std::optional<std::vector<double>> axis_values;
  std::uint64_t seed = 1;
  unsigned parallelism = 1;
  MediationOptions mediation;
};

std::vector<ReplicationSummary> run_family(Family family,
                                           const FamilyOverrides& overrides = {});

inline constexpr const char* kSummaryHeader =
    "scenario_id,axis_name,axis_value,quantity,mean,mc_sd,n_replicates,n_failures";

/// Rows of the summary CSV whose quantity starts with one of `prefixes`
/// (all rows when empty).
void write_summary_csv(std::ostream& out,
                       const std::vector<ReplicationSummary>& summaries,
                       const std::vector<std::string>& prefixes = {});

/// Writes <family>_<group>.csv for the groups sos, r2_med, r2_components,
/// proportions and censoring, plus <family>.json. Returns the files written.
std::vector<std::filesystem::path> write_family_outputs(
    Family family, const std::vector<ReplicationSummary>& summaries,
    const std::filesystem::path& out_dir);

struct AnalysisOptions {
  MediationOptions mediation;
  bool random_control = false;
  std::uint64_t seed = 1;
  std::optional<BootstrapOptions> bootstrap;
};

struct SingleMediatorResult {
  std::string mediator;
  MediationReport report;
};

struct AnalysisResult {
  std::vector<SingleMediatorResult> single;  // one per mediator (+ Random)
  MediationReport joint;                     // all mediators together
  std::optional<BootstrapResult> joint_ci;
  std::size_t dropped_rows = 0;
};

inline constexpr const char* kRandomControlName = "Random";

/// One single-mediator analysis per mediator and the joint multi-mediator
/// analysis. With random_control, an independent N(0,1) column named
/// "Random" is analysed as an extra single mediator.
AnalysisResult run_analysis(const MediationDataset& ds, const AnalysisOptions& opts);

void write_table1(std::ostream& out, const AnalysisResult& result);
void write_table2(std::ostream& out, const AnalysisResult& result);
std::string report_json(const AnalysisResult& result, int indent = 2);

/// table1.csv, table2.csv and report.json under out_dir.
std::vector<std::filesystem::path> write_analysis_outputs(
    const AnalysisResult& result, const std::filesystem::path& out_dir);

/// Number formatting shared by every emitted table.
std::string format_number(double v);

}  // namespace survmed
