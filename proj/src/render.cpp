#include "ibdwb/render.hpp"

#include <algorithm>

#include "ibdwb/storage.hpp"

namespace ibdwb {

namespace {

std::string tsv_cell(const Value& v) {
    return storage::escape_field(v); // same escapes as the .rows format
}

std::string tsv_header(const std::string& name) {
    std::string out;
    for (char c : name) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string render_grid(const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& cells, OutputMode mode) {
    std::string out;
    if (mode == OutputMode::Tsv) {
        for (size_t c = 0; c < header.size(); ++c) {
            if (c) out += '\t';
            out += tsv_header(header[c]);
        }
        out += '\n';
        for (const auto& row : cells) {
            for (size_t c = 0; c < row.size(); ++c) {
                if (c) out += '\t';
                out += row[c];
            }
            out += '\n';
        }
        return out;
    }
    std::vector<size_t> widths(header.size());
    for (size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
    for (const auto& row : cells)
        for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    auto emit = [&](const std::vector<std::string>& row) {
        for (size_t c = 0; c < row.size(); ++c) {
            out += row[c];
            if (c + 1 < row.size()) out.append(widths[c] - row[c].size() + 2, ' ');
        }
        out += '\n';
    };
    emit(header);
    for (const auto& row : cells) emit(row);
    return out;
}

} // namespace

std::string render_dataset(const DataSet& ds, OutputMode mode) {
    std::vector<std::vector<std::string>> cells;
    cells.reserve(ds.rows.size());
    for (const auto& row : ds.rows) {
        std::vector<std::string> line;
        line.reserve(row.size());
        for (const auto& v : row)
            line.push_back(mode == OutputMode::Tsv ? tsv_cell(v) : v.render());
        cells.push_back(std::move(line));
    }
    return render_grid(ds.columns, cells, mode);
}

std::string render_session_report(const SessionReport& report, OutputMode mode) {
    std::vector<std::string> header = {"PATH", "USER", "OPEN_TX", "GAUGE"};
    std::vector<std::vector<std::string>> cells;
    for (const auto& row : report.rows)
        cells.push_back({row.path, row.user, std::to_string(row.open_transactions),
                         std::to_string(row.gauge)});
    return render_grid(header, cells, mode);
}

} // namespace ibdwb
