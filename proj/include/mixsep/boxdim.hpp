#ifndef MIXSEP_BOXDIM_HPP
#define MIXSEP_BOXDIM_HPP

// Box-counting (Minkowski) dimension of finite point sets.
//
// Covering by radius-eps balls is replaced by the number of occupied cells
// of the axis-aligned grid of side 2*eps anchored at the origin. The two
// counts differ by at most a dimension-dependent constant factor, so the
// log-log slope is unchanged. On a dyadic schedule eps_m = eps0 * 2^-m the
// grids are nested and the counts are monotone in eps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "error.hpp"

namespace mixsep {

/// Rows are points.
using PointSet = Eigen::MatrixXd;

inline PointSet to_point_set(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return PointSet(0, 0);
  PointSet p(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw Error(ErrorCode::DimensionMismatch, "point set: rows have different lengths");
    for (std::size_t j = 0; j < rows[i].size(); ++j) p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return p;
}

inline std::int64_t covering_number(const PointSet& points, double eps) {
  if (points.rows() == 0) throw Error(ErrorCode::Precondition, "covering_number: empty point set");
  if (!(eps > 0.0)) throw Error(ErrorCode::Precondition, "covering_number: eps must be positive");
  const double side = 2.0 * eps;
  const Eigen::Index d = points.cols();
  std::vector<std::vector<std::int64_t>> cells(static_cast<std::size_t>(points.rows()),
                                               std::vector<std::int64_t>(static_cast<std::size_t>(d)));
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      cells[i][j] = static_cast<std::int64_t>(std::floor(points(i, j) / side));
  std::sort(cells.begin(), cells.end());
  return std::unique(cells.begin(), cells.end()) - cells.begin();
}

struct ScaleSpec {
  std::optional<double> eps0;  // default: bounding-box diameter / 4
  int num_scales = 8;
  // Fit window [fit_first, fit_last] into the scale list; default drops the coarsest and finest.
  std::optional<int> fit_first;
  std::optional<int> fit_last;
};

struct DimensionEstimate {
  std::vector<double> scales;  // decreasing
  std::vector<std::int64_t> counts;
  double slope = 0.0;
  int fit_first = 0;
  int fit_last = 0;
  double residual = 0.0;  // RMS deviation of log N from the fitted line
  bool degenerate = false;
};

inline double bounding_diameter(const PointSet& points) {
  if (points.rows() == 0) return 0.0;
  return (points.colwise().maxCoeff() - points.colwise().minCoeff()).norm();
}

inline DimensionEstimate estimate_dimension(const PointSet& points, const ScaleSpec& spec = {}) {
  if (points.rows() == 0) throw Error(ErrorCode::Precondition, "estimate_dimension: empty point set");
  if (spec.num_scales < 2) throw Error(ErrorCode::Precondition, "estimate_dimension: need at least 2 scales");

  double eps0 = spec.eps0.value_or(bounding_diameter(points) / 4.0);
  if (!(eps0 > 0.0)) eps0 = 1.0;  // single point: any scale gives one cell

  DimensionEstimate est;
  est.fit_first = spec.fit_first.value_or(spec.num_scales > 2 ? 1 : 0);
  est.fit_last = spec.fit_last.value_or(spec.num_scales > 2 ? spec.num_scales - 2 : spec.num_scales - 1);
  if (est.fit_first < 0 || est.fit_last >= spec.num_scales || est.fit_last - est.fit_first < 1)
    throw Error(ErrorCode::Precondition, "estimate_dimension: fit window must cover at least 2 scales");

  for (int m = 0; m < spec.num_scales; ++m) {
    const double eps = std::ldexp(eps0, -m);
    est.scales.push_back(eps);
    est.counts.push_back(covering_number(points, eps));
  }

  const int len = est.fit_last - est.fit_first + 1;
  Eigen::VectorXd xs(len), ys(len);
  for (int i = 0; i < len; ++i) {
    xs[i] = std::log(1.0 / est.scales[est.fit_first + i]);
    ys[i] = std::log(static_cast<double>(est.counts[est.fit_first + i]));
  }
  if ((ys.array() == ys[0]).all()) {
    est.degenerate = true;
    est.slope = 0.0;
    est.residual = 0.0;
    return est;
  }
  const double mx = xs.mean();
  const double my = ys.mean();
  const Eigen::VectorXd dx = xs.array() - mx;
  const Eigen::VectorXd dy = ys.array() - my;
  est.slope = dx.dot(dy) / dx.squaredNorm();
  const Eigen::VectorXd fit_err = dy - est.slope * dx;
  est.residual = std::sqrt(fit_err.squaredNorm() / len);
  return est;
}

/// Minkowski-dimension compression rate of a mixed discrete-continuous source: (1-lambda)*rho1 + lambda*rho2.
inline double mixed_rate(double lambda, double rho1, double rho2) {
  for (double v : {lambda, rho1, rho2})
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::Precondition, "mixed_rate: arguments must lie in [0,1]");
  return (1.0 - lambda) * rho1 + lambda * rho2;
}

inline void to_json(nlohmann::json& j, const DimensionEstimate& e) {
  j = {{"scales", e.scales},
       {"counts", e.counts},
       {"slope", e.slope},
       {"fit_window", {e.fit_first, e.fit_last}},
       {"residual", e.residual},
       {"degenerate", e.degenerate}};
}

}  // namespace mixsep

#endif  // MIXSEP_BOXDIM_HPP
