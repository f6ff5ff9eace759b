#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <filesystem>

namespace wthin {

/// Shortest decimal string that parses back to exactly `v` (locale-free).
std::string format_double(double v);

/// Headerless CSV: one matrix row per line, comma-separated. Blank lines are
/// skipped. Throws Parse on ragged rows or bad numbers, Io when unreadable.
Eigen::MatrixXd parse_csv_matrix(std::istream& in);
Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path);

void write_csv_matrix(std::ostream& out, const Eigen::MatrixXd& m);
void write_csv_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// Accepts a single row or a single column.
Eigen::VectorXd read_csv_vector(const std::filesystem::path& path);

}  // namespace wthin
