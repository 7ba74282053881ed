#ifndef MIXSEP_TESTS_ORACLES_HPP
#define MIXSEP_TESTS_ORACLES_HPP

// Test-only reference computations. Each one takes a different route from
// the library code it checks (enumeration instead of convolution, explicit
// loops instead of Eigen products, SVD pseudo-inverse instead of QR, ...).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Law of |spt| by enumerating all 2^n continuous/discrete coin outcomes.
inline std::vector<double> support_law_by_enumeration(int n, int ell, double rho1, double rho2) {
  std::vector<double> law(n + 1, 0.0);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double p = 1.0;
    for (int i = 0; i < n; ++i) {
      const double rho = i < n - ell ? rho1 : rho2;
      p *= (mask >> i & 1u) ? rho : 1.0 - rho;
    }
    law[std::popcount(mask)] += p;
  }
  return law;
}

inline Eigen::VectorXd matvec(const Eigen::MatrixXd& a, const Eigen::VectorXd& x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out[i] += a(i, j) * x[j];
  return out;
}

/// Distinct vectors u with |supp(u)| <= s_bar (atoms {0}) and H u = w, via
/// bitmask enumeration and SVD pseudo-inverse solves. Patterns with more
/// free coordinates than rows are skipped.
inline std::vector<Eigen::VectorXd> sparse_solutions(const Eigen::MatrixXd& h, const Eigen::VectorXd& w, int s_bar,
                                                     double tol = 1e-8) {
  const int n = static_cast<int>(h.cols());
  const int k = static_cast<int>(h.rows());
  std::vector<Eigen::VectorXd> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const int t = std::popcount(mask);
    if (t > s_bar || t > k) continue;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    double residual = w.norm();
    if (t > 0) {
      Eigen::MatrixXd sub(k, t);
      std::vector<int> cols;
      for (int i = 0; i < n; ++i)
        if (mask >> i & 1u) cols.push_back(i);
      for (int c = 0; c < t; ++c) sub.col(c) = h.col(cols[c]);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Eigen::VectorXd sol = svd.solve(w);
      residual = (sub * sol - w).norm();
      for (int c = 0; c < t; ++c) u[cols[c]] = sol[c];
    }
    if (residual > tol * (1.0 + w.norm())) continue;
    const bool seen = std::any_of(out.begin(), out.end(), [&](const Eigen::VectorXd& v) {
      return (v - u).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + v.cwiseAbs().maxCoeff());
    });
    if (!seen) out.push_back(u);
  }
  return out;
}

/// P[|a_1| < delta] for a uniform on the unit disk: (2/pi) * int_{-delta}^{delta} sqrt(1 - t^2) dt (Simpson).
inline double chord_probability(double delta, int panels = 2000) {
  const double h = 2.0 * delta / panels;
  auto f = [](double t) { return std::sqrt(1.0 - t * t); };
  double acc = f(-delta) + f(delta);
  for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(-delta + i * h);
  return 2.0 / M_PI * acc * h / 3.0;
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and U(0,1).
inline double ks_uniform(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double m = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    d = std::max({d, (i + 1) / m - samples[i], samples[i] - i / m});
  return d;
}

/// Asymptotic KS critical value at significance 0.01.
inline double ks_critical_001(std::size_t m) { return 1.6276 / std::sqrt(static_cast<double>(m)); }

/// chi-square 0.99 quantiles for 1..11 degrees of freedom.
inline double chi2_critical_001(int dof) {
  static const double table[] = {6.6349, 9.2103, 11.3449, 13.2767, 15.0863, 16.8119,
                                 18.4753, 20.0902, 21.6660, 23.2093, 24.7250};
  return table[dof - 1];
}

/// All 2^(depth+1) endpoints of the depth-level middle-thirds Cantor intervals.
inline std::vector<double> cantor_endpoints(int depth) {
  std::vector<std::pair<double, double>> intervals{{0.0, 1.0}};
  for (int d = 0; d < depth; ++d) {
    std::vector<std::pair<double, double>> next;
    for (auto [a, b] : intervals) {
      const double third = (b - a) / 3.0;
      next.emplace_back(a, a + third);
      next.emplace_back(b - third, b);
    }
    intervals.swap(next);
  }
  std::vector<double> pts;
  for (auto [a, b] : intervals) {
    pts.push_back(a);
    pts.push_back(b);
  }
  return pts;
}

}  // namespace oracle

#endif  // MIXSEP_TESTS_ORACLES_HPP
