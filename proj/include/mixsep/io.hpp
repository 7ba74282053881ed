#ifndef MIXSEP_IO_HPP
#define MIXSEP_IO_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace mixsep::io {

/// Shortest round-trip decimal representation; identical bytes for identical values.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::Parse, "cannot parse number '" + std::string(s) + "'");
  return v;
}

inline std::vector<double> split_row(const std::string& line) {
  std::vector<double> out;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(parse_double(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

inline bool skippable(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#';
}

/// Row-major matrix CSV: first line "rows,cols", then one row per line.
inline Eigen::MatrixXd read_matrix_csv(std::istream& in) {
  std::string line;
  while (std::getline(in, line) && skippable(line)) {}
  const auto dims = split_row(line);
  if (dims.size() != 2 || dims[0] < 0 || dims[1] < 0)
    throw Error(ErrorCode::Parse, "matrix csv: header must be 'rows,cols'");
  const auto rows = static_cast<Eigen::Index>(dims[0]);
  const auto cols = static_cast<Eigen::Index>(dims[1]);
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index r = 0;
  while (std::getline(in, line)) {
    if (skippable(line)) continue;
    const auto vals = split_row(line);
    if (r >= rows || static_cast<Eigen::Index>(vals.size()) != cols)
      throw Error(ErrorCode::Parse, "matrix csv: shape does not match header");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = vals[c];
    ++r;
  }
  if (r != rows) throw Error(ErrorCode::Parse, "matrix csv: too few rows");
  return m;
}

inline Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return read_matrix_csv(in);
}

inline void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  out << m.rows() << ',' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

/// Point cloud CSV: one point per row, no header; '#' lines ignored.
inline std::vector<std::vector<double>> read_points_csv(std::istream& in) {
  std::vector<std::vector<double>> pts;
  std::string line;
  while (std::getline(in, line)) {
    if (skippable(line)) continue;
    pts.push_back(split_row(line));
    if (pts.back().size() != pts.front().size())
      throw Error(ErrorCode::Parse, "points csv: rows have different lengths");
  }
  return pts;
}

inline std::vector<std::vector<double>> read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return read_points_csv(in);
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

}  // namespace mixsep::io

#endif  // MIXSEP_IO_HPP
