#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace westinv::csv {

/// 17 significant digits, '.' decimal, locale independent.
std::string format(double value);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Writes `columns` side by side under `header`; all columns must share a length.
void write_columns(std::ostream& out, const std::vector<std::string>& header,
                   const std::vector<Eigen::VectorXd>& columns);

/// Row-major matrix with header j0..j{M-1}.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& matrix);

struct Table {
  std::vector<std::string> header;
  Eigen::MatrixXd data;  // rows x header.size()

  Eigen::VectorXd column(const std::string& name) const;
};

Table read(std::istream& in);
Table read_file(const std::string& path);

}  // namespace westinv::csv
