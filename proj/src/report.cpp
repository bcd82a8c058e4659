#include "mixlab/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mixlab {

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

std::string format_csv(const ExperimentReport& report) {
    std::string out = "abscissa,estimate,std_err,theory,n_effective";
    for (const auto& name : report.extra_columns) out += "," + name;
    out += "\n";
    for (const auto& row : report.rows) {
        out += format_number(row.abscissa) + "," + format_number(row.estimate) + "," +
               format_number(row.std_err) + "," + format_number(row.theory) + "," +
               std::to_string(row.n_effective);
        for (double v : row.extra) out += "," + format_number(v);
        out += "\n";
    }
    return out;
}

std::string format_diagnostics_csv(const QEstimate& q) {
    std::string out = "replicate,seed,iterations,residual,l2_stat,max_stat,tv_to_mu_in\n";
    for (const auto& rep : q.replicates) {
        out += std::to_string(rep.replicate) + "," + std::to_string(rep.seed) + "," +
               std::to_string(rep.iterations) + "," + format_number(rep.residual) + ",";
        if (rep.converged) {
            out += format_number(rep.stats.l2_stat) + "," + format_number(rep.stats.max_stat) + "," +
                   format_number(rep.tv_to_mu_in);
        } else {
            out += "nan,nan,nan";
        }
        out += "\n";
    }
    return out;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "empty CSV");
    {
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) table.header.push_back(cell);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error(ErrorCode::Parse, "non-numeric CSV cell '" + cell + "'");
            }
        }
        if (row.size() != table.header.size()) throw Error(ErrorCode::Parse, "ragged CSV row");
        table.rows.push_back(std::move(row));
    }
    return table;
}

void check_report_table(const CsvTable& table) {
    const std::vector<std::string> base = {"abscissa", "estimate", "std_err", "theory", "n_effective"};
    if (table.header.size() < base.size() || !std::equal(base.begin(), base.end(), table.header.begin())) {
        throw Error(ErrorCode::BadValue, "report header mismatch");
    }
    for (const auto& row : table.rows) {
        if (!(row[1] >= 0.0 && row[1] <= 1.0)) throw Error(ErrorCode::BadValue, "estimate outside [0,1]");
        if (!(row[2] >= 0.0)) throw Error(ErrorCode::BadValue, "negative std_err");
    }
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot open " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Io, "rename to " + path.string() + ": " + ec.message());
}

}  // namespace mixlab
