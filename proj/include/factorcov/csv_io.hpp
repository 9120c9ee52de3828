#pragma once

#include "factorcov/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace factorcov {

struct CsvOptions {
    /// nullopt: detect a header when the first row has a non-numeric cell
    /// beyond the id column.
    std::optional<bool> header;
    /// nullopt: detect an id column when the first body cell is non-numeric.
    std::optional<bool> id_column;
    /// Reject missing cells and ragged rows. When false, missing cells read as
    /// NaN and surface through validation instead.
    bool strict = true;
    char delimiter = ',';
};

/// Parses a p x T panel (rows are variables). Errors carry "line L, column C".
ObservationMatrix read_observation_csv(std::istream& in, const CsvOptions& opts = {});
ObservationMatrix read_observation_csv_file(const std::string& path, const CsvOptions& opts = {});

/// Plain numeric matrix, no header or id column.
Matrix read_matrix_csv(std::istream& in);

/// One 0/1 label per line; blank lines ignored.
std::vector<int> read_labels(std::istream& in);
std::vector<int> read_labels_file(const std::string& path);

/// Full round-trip precision.
void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& row_ids = {});
void write_matrix_csv_file(const std::string& path, const Matrix& m, const std::vector<std::string>& row_ids = {});

std::string format_double(double v);

}  // namespace factorcov
