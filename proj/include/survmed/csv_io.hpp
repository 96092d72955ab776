#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "survmed/survival_data.hpp"

namespace survmed {

/// Which CSV header names play which role.
struct ColumnMapping {
  std::string time;
  std::string event;
  std::optional<std::string> entry;
  std::vector<std::string> exposures;
  std::vector<std::string> mediators;
  /// Optional `ties` key from the config file ("efron" or "breslow").
  std::optional<std::string> ties;
};

/// Parses the flat `key = value` mapping file used by the CLI. Lists are
/// comma separated; `#` starts a comment. Throws DataError.
ColumnMapping parse_mapping(std::istream& in);
ColumnMapping read_mapping(const std::filesystem::path& path);

struct CsvReadResult {
  MediationDataset dataset;
  std::size_t dropped_rows = 0;  // complete-case deletions
};

/// Reads a comma-delimited file with a header row. Rows with an empty or
/// `NA` cell in any mapped column are dropped and counted. Event cells
/// accept 0/1/false/true only. The result passes validate_dataset or a
/// DataError is thrown.
CsvReadResult read_csv(const std::filesystem::path& path,
                       const ColumnMapping& mapping);
CsvReadResult read_csv(std::istream& in, const ColumnMapping& mapping);

/// Writes the dataset back with columns entry,time,event,<exposures>,
/// <mediators>; values at full precision.
void write_csv(std::ostream& out, const MediationDataset& ds);
void write_csv(const std::filesystem::path& path, const MediationDataset& ds);

/// Mapping that matches write_csv's column layout for `ds`.
ColumnMapping mapping_for(const MediationDataset& ds);

}  // namespace survmed
