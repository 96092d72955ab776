#include "survmed/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "survmed/errors.hpp"

namespace survmed {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string> split(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(unquote(trim(line.substr(start, pos - start))));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" ||
         cell == "nan";
}

std::string where(std::size_t line_no, const std::string& column) {
  return "line " + std::to_string(line_no) + ", column '" + column + "'";
}

double parse_real(const std::string& cell, std::size_t line_no,
                  const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw DataError("unparseable number '" + cell + "' at " +
                    where(line_no, column));
  }
  return value;
}

bool parse_event(const std::string& cell, std::size_t line_no,
                 const std::string& column) {
  const auto v = lower(cell);
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw DataError("event value '" + cell + "' is not one of 0,1,false,true at " +
                  where(line_no, column));
}

}  // namespace

ColumnMapping parse_mapping(std::istream& in) {
  ColumnMapping m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(line_no) +
                      ": expected key = value");
    }
    const auto key = lower(trim(std::string_view(line).substr(0, eq)));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    auto list = [&] {
      std::vector<std::string> items;
      for (auto& item : split(value, ',')) {
        if (!item.empty()) items.push_back(std::move(item));
      }
      return items;
    };
    if (key == "time") {
      m.time = value;
    } else if (key == "event") {
      m.event = value;
    } else if (key == "entry") {
      if (!value.empty()) m.entry = value;
    } else if (key == "exposures" || key == "exposure") {
      m.exposures = list();
    } else if (key == "mediators" || key == "mediator") {
      m.mediators = list();
    } else if (key == "ties") {
      m.ties = lower(value);
    } else {
      throw DataError("config line " + std::to_string(line_no) +
                      ": unknown key '" + key + "'");
    }
  }
  if (m.time.empty()) throw DataError("config: missing 'time'");
  if (m.event.empty()) throw DataError("config: missing 'event'");
  if (m.exposures.empty()) throw DataError("config: missing 'exposures'");
  if (m.mediators.empty()) throw DataError("config: missing 'mediators'");
  return m;
}

ColumnMapping read_mapping(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  return parse_mapping(in);
}

CsvReadResult read_csv(const std::filesystem::path& path,
                       const ColumnMapping& mapping) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file " + path.string());
  return read_csv(in, mapping);
}

CsvReadResult read_csv(std::istream& in, const ColumnMapping& mapping) {
  std::string line;
  std::size_t line_no = 0;
  do {
    if (!std::getline(in, line)) throw DataError("data file is empty");
    ++line_no;
  } while (trim(line).empty());

  const auto header = split(line, ',');
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < header.size(); ++j) index.emplace(header[j], j);
  auto column = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end()) {
      throw DataError("column '" + name + "' not found in header");
    }
    return it->second;
  };

  const std::size_t time_col = column(mapping.time);
  const std::size_t event_col = column(mapping.event);
  const std::optional<std::size_t> entry_col =
      mapping.entry ? std::optional(column(*mapping.entry)) : std::nullopt;
  std::vector<std::size_t> x_cols, m_cols;
  for (const auto& name : mapping.exposures) x_cols.push_back(column(name));
  for (const auto& name : mapping.mediators) m_cols.push_back(column(name));

  std::vector<SurvivalRecord> outcomes;
  std::vector<double> x_vals, m_vals;
  std::size_t dropped = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    bool missing = is_missing(cells[time_col]) || is_missing(cells[event_col]) ||
                   (entry_col && is_missing(cells[*entry_col]));
    for (auto j : x_cols) missing = missing || is_missing(cells[j]);
    for (auto j : m_cols) missing = missing || is_missing(cells[j]);
    if (missing) {
      ++dropped;
      continue;
    }
    SurvivalRecord r;
    r.exit = parse_real(cells[time_col], line_no, mapping.time);
    r.event = parse_event(cells[event_col], line_no, mapping.event);
    if (entry_col) r.entry = parse_real(cells[*entry_col], line_no, *mapping.entry);
    outcomes.push_back(r);
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      x_vals.push_back(parse_real(cells[x_cols[k]], line_no, mapping.exposures[k]));
    }
    for (std::size_t k = 0; k < m_cols.size(); ++k) {
      m_vals.push_back(parse_real(cells[m_cols[k]], line_no, mapping.mediators[k]));
    }
  }
  if (outcomes.empty()) throw DataError("no usable rows in data file");

  const auto n = static_cast<Eigen::Index>(outcomes.size());
  CsvReadResult res;
  res.dropped_rows = dropped;
  res.dataset.outcomes = std::move(outcomes);
  res.dataset.exposure.names = mapping.exposures;
  res.dataset.exposure.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic,
      Eigen::Dynamic, Eigen::RowMajor>>(x_vals.data(), n,
                                        static_cast<Eigen::Index>(x_cols.size()));
  res.dataset.mediators.names = mapping.mediators;
  res.dataset.mediators.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic,
      Eigen::Dynamic, Eigen::RowMajor>>(m_vals.data(), n,
                                        static_cast<Eigen::Index>(m_cols.size()));

  const auto check = validate_dataset(res.dataset);
  if (!check.ok()) throw DataError("invalid dataset: " + check.describe());
  return res;
}

namespace {

void put(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

void write_csv(std::ostream& out, const MediationDataset& ds) {
  out << "entry,time,event";
  for (const auto& name : ds.exposure.names) out << ',' << name;
  for (const auto& name : ds.mediators.names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    put(out, ds.outcomes[i].entry);
    out << ',';
    put(out, ds.outcomes[i].exit);
    out << ',' << (ds.outcomes[i].event ? 1 : 0);
    for (Eigen::Index j = 0; j < ds.exposure.cols(); ++j) {
      out << ',';
      put(out, ds.exposure.values(row, j));
    }
    for (Eigen::Index j = 0; j < ds.mediators.cols(); ++j) {
      out << ',';
      put(out, ds.mediators.values(row, j));
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const MediationDataset& ds) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv(out, ds);
}

ColumnMapping mapping_for(const MediationDataset& ds) {
  ColumnMapping m;
  m.time = "time";
  m.event = "event";
  m.entry = "entry";
  m.exposures = ds.exposure.names;
  m.mediators = ds.mediators.names;
  return m;
}

}  // namespace survmed
