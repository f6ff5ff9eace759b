#include "wthin/matrix_io.hpp"

#include "wthin/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

namespace wthin {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

Eigen::MatrixXd parse_csv_matrix(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view rest = trim(line);
        if (rest.empty()) continue;
        std::vector<double> row;
        while (true) {
            const auto comma = rest.find(',');
            const std::string_view field = trim(rest.substr(0, comma));
            double v = 0.0;
            const char* begin = field.data();
            const char* end = field.data() + field.size();
            if (!field.empty() && *begin == '+') ++begin;
            const auto res = std::from_chars(begin, end, v);
            if (field.empty() || res.ec != std::errc() || res.ptr != end) {
                throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": bad number '" +
                                                  std::string(field) + "'");
            }
            row.push_back(v);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(rows.front().size()) + " fields, got " +
                                              std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCode::Parse, "empty matrix file");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    try {
        return parse_csv_matrix(in);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Parse) throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
        throw;
    }
}

void write_csv_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

void write_csv_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    write_csv_matrix(out, m);
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Eigen::VectorXd read_csv_vector(const std::filesystem::path& path) {
    const Eigen::MatrixXd m = read_csv_matrix(path);
    if (m.rows() == 1) return m.row(0).transpose();
    if (m.cols() == 1) return m.col(0);
    throw Error(ErrorCode::Parse, path.string() + ": expected a single row or column");
}

}  // namespace wthin
