#include "linfsc/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "linfsc/error.hpp"

namespace linfsc {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

[[noreturn]] void parse_error(size_t line, size_t column, const std::string& what) {
  std::ostringstream msg;
  msg << "line " << line << ", column " << column << ": " << what;
  throw Error(ErrorCode::ParseError, msg.str());
}

}  // namespace

Index resolve_cutover(const Cutover& cutover, const std::vector<std::string>& time_labels) {
  if (const auto* count = std::get_if<Index>(&cutover)) return *count;
  const std::string& text = std::get<std::string>(cutover);
  auto it = std::find(time_labels.begin(), time_labels.end(), text);
  if (it != time_labels.end()) return static_cast<Index>(it - time_labels.begin()) + 1;
  Index value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec == std::errc() && ptr == end) return value;
  throw Error(ErrorCode::BadCutover, "cutover '" + text + "' is neither a time label nor a count");
}

PanelData read_panel_csv(std::istream& in, const std::string& treated_column,
                         const Cutover& cutover) {
  std::string line;
  size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    header = split_line(line);
    break;
  }
  if (header.size() < 2) parse_error(line_no, 1, "missing header row");

  std::vector<std::string> time_labels;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << "line " << line_no << " has " << cells.size() << " cells, header has "
          << header.size();
      throw Error(ErrorCode::RaggedRows, msg.str());
    }
    time_labels.push_back(cells[0]);
    std::vector<double> values(cells.size() - 1);
    for (size_t c = 1; c < cells.size(); ++c) {
      const std::string& text = cells[c];
      if (text.empty()) parse_error(line_no, c + 1, "blank cell for unit '" + header[c] + "'");
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
        parse_error(line_no, c + 1, "not a finite number: '" + text + "'");
      }
      values[c - 1] = v;
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) parse_error(line_no, 1, "no data rows after the header");

  auto treated = std::find(header.begin() + 1, header.end(), treated_column);
  if (treated == header.end()) {
    throw Error(ErrorCode::MissingTreatedColumn,
                "treated column '" + treated_column + "' not found in header");
  }
  const size_t treated_idx = static_cast<size_t>(treated - header.begin()) - 1;

  const Index T = static_cast<Index>(rows.size());
  const Index units = static_cast<Index>(header.size()) - 1;
  Matrix outcomes(T, units);
  std::vector<std::string> unit_labels{treated_column};
  std::vector<size_t> order{treated_idx};
  for (size_t u = 0; u < static_cast<size_t>(units); ++u) {
    if (u == treated_idx) continue;
    order.push_back(u);
    unit_labels.push_back(header[u + 1]);
  }
  for (Index t = 0; t < T; ++t) {
    for (Index c = 0; c < units; ++c) {
      outcomes(t, c) = rows[static_cast<size_t>(t)][order[static_cast<size_t>(c)]];
    }
  }
  const Index t0 = resolve_cutover(cutover, time_labels);
  return validate_panel(outcomes, t0, std::move(unit_labels), std::move(time_labels));
}

PanelData ingest_csv(const std::string& path, const std::string& treated_column,
                     const Cutover& cutover) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  return read_panel_csv(in, treated_column, cutover);
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_panel_csv(std::ostream& out, const PanelData& panel) {
  out << "time_label";
  for (const auto& label : panel.unit_labels()) out << ',' << label;
  out << '\n';
  for (Index t = 0; t < panel.T(); ++t) {
    out << panel.time_labels()[static_cast<size_t>(t)];
    for (Index c = 0; c < panel.outcomes().cols(); ++c) out << ',' << format_double(panel.outcomes()(t, c));
    out << '\n';
  }
}

}  // namespace linfsc
