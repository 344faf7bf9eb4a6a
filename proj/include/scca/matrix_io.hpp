#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Dense>

namespace scca {

/// Headered CSV: first line "rows,cols", then `rows` lines of `cols`
/// comma-separated values. Throws ParseError carrying the 1-based line number.
Eigen::MatrixXd read_matrix_csv(std::istream& in);
Eigen::MatrixXd read_matrix_csv_file(const std::string& path);

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
void write_matrix_csv_file(const std::string& path, const Eigen::MatrixXd& m);

}  // namespace scca
