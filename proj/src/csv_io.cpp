#include "factorcov/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace factorcov {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    std::string out(s.substr(b, e - b));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delim, start);
        cells.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? pos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return cells;
}

bool parse_number(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::string where(std::size_t line, std::size_t col) {
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

struct RawLine {
    std::size_t number;
    std::vector<std::string> cells;
};

std::vector<RawLine> read_lines(std::istream& in, char delim) {
    std::vector<RawLine> lines;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        lines.push_back({number, split(line, delim)});
    }
    return lines;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open " + path);
    return f;
}

}  // namespace

ObservationMatrix read_observation_csv(std::istream& in, const CsvOptions& opts) {
    std::vector<RawLine> lines = read_lines(in, opts.delimiter);
    if (lines.empty()) throw ValidationError("empty CSV input");

    double scratch = 0.0;
    bool id_col = opts.id_column.value_or(false);
    if (!opts.id_column) {
        const RawLine& probe = lines.size() > 1 ? lines[1] : lines[0];
        id_col = !probe.cells.empty() && !parse_number(probe.cells[0], scratch);
    }
    const std::size_t first_data = id_col ? 1 : 0;
    bool header = opts.header.value_or(false);
    if (!opts.header) {
        for (std::size_t c = first_data; c < lines[0].cells.size(); ++c) {
            if (!parse_number(lines[0].cells[c], scratch)) header = true;
        }
    }
    const std::size_t body_start = header ? 1 : 0;
    if (body_start >= lines.size()) throw ValidationError("CSV has a header but no data rows");

    const std::size_t width = lines[body_start].cells.size();
    if (width <= first_data) throw ValidationError("no numeric columns at " + where(lines[body_start].number, 1));
    const Index T = static_cast<Index>(width - first_data);
    const Index p = static_cast<Index>(lines.size() - body_start);
    Matrix values(p, T);
    std::vector<std::string> ids;
    for (std::size_t r = body_start; r < lines.size(); ++r) {
        const RawLine& row = lines[r];
        if (row.cells.size() != width && opts.strict) {
            throw ValidationError("expected " + std::to_string(width) + " cells but found " +
                                  std::to_string(row.cells.size()) + " at " +
                                  where(row.number, std::min(row.cells.size(), width) + 1));
        }
        const Index i = static_cast<Index>(r - body_start);
        if (id_col) ids.push_back(row.cells[0]);
        for (Index t = 0; t < T; ++t) {
            const std::size_t c = first_data + static_cast<std::size_t>(t);
            const std::string cell = c < row.cells.size() ? row.cells[c] : std::string();
            double v = 0.0;
            if (parse_number(cell, v)) {
                values(i, t) = v;
            } else if (cell.empty() && !opts.strict) {
                values(i, t) = std::numeric_limits<double>::quiet_NaN();
            } else {
                throw ValidationError((cell.empty() ? std::string("missing cell") : "non-numeric cell '" + cell + "'") +
                                      " at " + where(row.number, c + 1));
            }
        }
    }
    return ObservationMatrix(std::move(values), std::move(ids));
}

ObservationMatrix read_observation_csv_file(const std::string& path, const CsvOptions& opts) {
    std::ifstream f = open_input(path);
    return read_observation_csv(f, opts);
}

Matrix read_matrix_csv(std::istream& in) {
    std::vector<RawLine> lines = read_lines(in, ',');
    if (lines.empty()) return Matrix(0, 0);
    const std::size_t width = lines[0].cells.size();
    Matrix m(static_cast<Index>(lines.size()), static_cast<Index>(width));
    for (std::size_t r = 0; r < lines.size(); ++r) {
        if (lines[r].cells.size() != width) {
            throw ValidationError("ragged matrix row at " + where(lines[r].number, lines[r].cells.size()));
        }
        for (std::size_t c = 0; c < width; ++c) {
            double v = 0.0;
            if (!parse_number(lines[r].cells[c], v)) {
                throw ValidationError("non-numeric cell at " + where(lines[r].number, c + 1));
            }
            m(static_cast<Index>(r), static_cast<Index>(c)) = v;
        }
    }
    return m;
}

std::vector<int> read_labels(std::istream& in) {
    std::vector<int> labels;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string cell = trim(line);
        if (cell.empty()) continue;
        if (cell == "0" || cell == "1") {
            labels.push_back(cell == "1" ? 1 : 0);
        } else {
            throw ValidationError("label must be 0 or 1 at line " + std::to_string(number));
        }
    }
    return labels;
}

std::vector<int> read_labels_file(const std::string& path) {
    std::ifstream f = open_input(path);
    return read_labels(f);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& row_ids) {
    const bool ids = !row_ids.empty();
    if (ids && static_cast<Index>(row_ids.size()) != m.rows()) {
        throw ValidationError("row id count must equal the number of rows");
    }
    for (Index i = 0; i < m.rows(); ++i) {
        if (ids) out << row_ids[static_cast<std::size_t>(i)] << (m.cols() > 0 ? "," : "");
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

void write_matrix_csv_file(const std::string& path, const Matrix& m, const std::vector<std::string>& row_ids) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot write " + path);
    write_matrix_csv(f, m, row_ids);
}

}  // namespace factorcov
