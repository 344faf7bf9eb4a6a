#include "scca/matrix_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string_view>
#include <vector>

#include "scca/errors.hpp"

namespace scca {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw ParseError("cannot parse '" + std::string(field) + "' as a number", line);
  }
  return value;
}

}  // namespace

Eigen::MatrixXd read_matrix_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("missing 'rows,cols' header", 1);
  ++lineno;
  const auto header = split(line);
  if (header.size() != 2) throw ParseError("header must be 'rows,cols'", lineno);
  const auto rows = parse_number<long>(header[0], lineno);
  const auto cols = parse_number<long>(header[1], lineno);
  if (rows <= 0 || cols <= 0) throw ParseError("matrix dimensions must be positive", lineno);

  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) {
      throw ParseError("expected " + std::to_string(rows) + " data rows, found " +
                           std::to_string(i),
                       lineno + 1);
    }
    ++lineno;
    const auto fields = split(line);
    if (static_cast<long>(fields.size()) != cols) {
      throw ParseError("expected " + std::to_string(cols) + " values, found " +
                           std::to_string(fields.size()),
                       lineno);
    }
    for (long j = 0; j < cols; ++j) m(i, j) = parse_number<double>(fields[static_cast<std::size_t>(j)], lineno);
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) throw ParseError("unexpected data after the last row", lineno);
  }
  return m;
}

Eigen::MatrixXd read_matrix_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_matrix_csv(in);
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  out << m.rows() << ',' << m.cols() << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

void write_matrix_csv_file(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_matrix_csv(out, m);
}

}  // namespace scca
