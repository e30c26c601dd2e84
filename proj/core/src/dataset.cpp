#include "sdpkm/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace sdpkm {

DataSet::DataSet(Eigen::MatrixXd points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw DataError("dataset must have at least one point and one feature");
  }
  for (Eigen::Index n = 0; n < points_.cols(); ++n) {
    for (Eigen::Index d = 0; d < points_.rows(); ++d) {
      if (!std::isfinite(points_(d, n))) {
        throw DataError("non-finite entry at point " + std::to_string(n) + ", feature " +
                        std::to_string(d));
      }
    }
  }
  gram_ = points_.transpose() * points_;
  const Eigen::Index n = points_.cols();
  sqdist_.resize(n, n);
  for (Eigen::Index q = 0; q < n; ++q) {
    for (Eigen::Index p = 0; p < n; ++p) {
      sqdist_(p, q) = p == q ? 0.0 : (points_.col(p) - points_.col(q)).squaredNorm();
    }
  }
}

DataSet load_dataset(const Eigen::MatrixXd& points) { return DataSet(points); }

DataSet parse_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        throw DataError("line " + std::to_string(lineno) + ": cannot parse '" + field + "'");
      }
      if (field.find_first_not_of(" \t", used) != std::string::npos) {
        throw DataError("line " + std::to_string(lineno) + ": trailing characters in '" + field +
                        "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError("line " + std::to_string(lineno) + ": expected " +
                      std::to_string(rows.front().size()) + " fields, got " +
                      std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no data rows");
  Eigen::MatrixXd points(static_cast<Eigen::Index>(rows.front().size()),
                         static_cast<Eigen::Index>(rows.size()));
  for (std::size_t n = 0; n < rows.size(); ++n) {
    for (std::size_t d = 0; d < rows[n].size(); ++d) {
      points(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n)) = rows[n][d];
    }
  }
  return DataSet(std::move(points));
}

DataSet read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string format_csv(const DataSet& ds) {
  std::string out;
  char buf[64];
  for (int n = 0; n < ds.size(); ++n) {
    for (int d = 0; d < ds.dim(); ++d) {
      std::snprintf(buf, sizeof buf, "%.12g", ds.points()(d, n));
      if (d > 0) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_csv(const DataSet& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_csv(ds);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace sdpkm
