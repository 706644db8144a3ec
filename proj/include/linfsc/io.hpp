#pragma once

// Wide-format panel CSV and number formatting for output files.
//
//   time_label,unit_a,unit_b,...
//   1970,123.4,98.1,...
//
// One row per period in ascending time order, one column per unit. Every
// cell must hold a finite number; blank cells are rejected.

#include <iosfwd>
#include <string>
#include <variant>

#include "linfsc/model.hpp"

namespace linfsc {

/// Number of pre-treatment periods, or the label of the last pre-treatment period.
using Cutover = std::variant<Index, std::string>;

/// Text is matched against the time labels first and read as a period
/// count otherwise.
Index resolve_cutover(const Cutover& cutover, const std::vector<std::string>& time_labels);

/// The treated column is moved to position 0; the other units keep file order.
PanelData read_panel_csv(std::istream& in, const std::string& treated_column,
                         const Cutover& cutover);
PanelData ingest_csv(const std::string& path, const std::string& treated_column,
                     const Cutover& cutover);

void write_panel_csv(std::ostream& out, const PanelData& panel);

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double value);

}  // namespace linfsc
