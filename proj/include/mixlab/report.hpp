#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mixlab/experiments.hpp"

namespace mixlab {

/// Decimal with 12 significant digits ("%.12g").
std::string format_number(double value);

/// Header abscissa,estimate,std_err,theory,n_effective followed by any extra
/// columns, one line per row.
std::string format_csv(const ExperimentReport& report);

/// Header replicate,seed,iterations,residual,l2_stat,max_stat,tv_to_mu_in.
std::string format_diagnostics_csv(const QEstimate& q);

/// A parsed CSV: header names and numeric cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
CsvTable parse_csv(const std::string& text);

/// Throws BadValue unless the table carries the report columns with
/// estimate in [0,1] and std_err >= 0.
void check_report_table(const CsvTable& table);

/// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace mixlab
