#ifndef MIXSEP_CONCENTRATION_HPP
#define MIXSEP_CONCENTRATION_HPP

// Small-ball probability bound for random matrices with rows uniform on a
// ball, and column-subset rank tests for sparse transversality.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "io.hpp"
#include "measure.hpp"
#include "random.hpp"

namespace mixsep {

inline double log_ball_volume(int n, double r) {
  if (n < 1 || !(r > 0.0)) throw Error(ErrorCode::Precondition, "ball_volume: need n >= 1 and r > 0");
  return 0.5 * n * std::log(std::numbers::pi) + n * std::log(r) - std::lgamma(0.5 * n + 1.0);
}

/// Volume of the n-dimensional Euclidean ball of radius r.
inline double ball_volume(int n, double r) { return std::exp(log_ball_volume(n, r)); }

/// C(n,k,r) = (2r)^(k(n-1)) * 2^k / vol(B^n(0,r))^k, evaluated in log space.
inline double log_lemma2_constant(int n, int k, double r) {
  if (k < 1) throw Error(ErrorCode::Precondition, "lemma2_constant: need k >= 1");
  return k * (n - 1) * std::log(2.0 * r) + k * std::log(2.0) - k * log_ball_volume(n, r);
}

inline double lemma2_constant(int n, int k, double r) { return std::exp(log_lemma2_constant(n, k, r)); }

/// C(n,k,r) * (delta/||u||)^k.
inline double small_ball_bound(int n, int k, double r, double u_norm, double delta) {
  return std::exp(log_lemma2_constant(n, k, r) + k * std::log(delta / u_norm));
}

struct ProbabilityEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

/// Monte Carlo estimate of P[||A u + v|| < delta], A in R^{k x n} with rows i.i.d. uniform on B^n(0,r).
inline ProbabilityEstimate empirical_small_ball_prob(int n, int k, double r, const Eigen::VectorXd& u,
                                                     const Eigen::VectorXd& v, double delta, std::int64_t trials,
                                                     Rng& rng) {
  if (u.size() != n || v.size() != k) throw Error(ErrorCode::DimensionMismatch, "small-ball: u must be length n, v length k");
  if (u.norm() == 0.0) throw Error(ErrorCode::Precondition, "small-ball: u must be nonzero");
  if (trials < 1 || !(delta > 0.0)) throw Error(ErrorCode::Precondition, "small-ball: need trials >= 1 and delta > 0");
  const double delta2 = delta * delta;
  std::int64_t hits = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
      const double e = sample_ball_uniform(n, r, rng).dot(u) + v[i];
      acc += e * e;
    }
    if (acc < delta2) ++hits;
  }
  ProbabilityEstimate out;
  out.estimate = static_cast<double>(hits) / static_cast<double>(trials);
  out.stderr_ = std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(trials));
  return out;
}

struct BoundCell {
  int n = 2;
  int k = 1;
  double r = 1.0;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  double delta = 0.1;
};

struct BoundReport {
  int n = 0;
  int k = 0;
  double r = 0.0;
  double delta = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  double empirical_prob = 0.0;
  double stderr_ = 0.0;
  double bound_value = 0.0;
  bool holds = false;
};

/// One report per cell; cell i uses the stream derive_seed(seed, i).
inline std::vector<BoundReport> check_lemma2(const std::vector<BoundCell>& cells, std::int64_t trials,
                                             std::uint64_t seed) {
  std::vector<BoundReport> out;
  out.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    Rng rng = make_rng(derive_seed(seed, i));
    const auto est = empirical_small_ball_prob(c.n, c.k, c.r, c.u, c.v, c.delta, trials, rng);
    BoundReport rep;
    rep.n = c.n;
    rep.k = c.k;
    rep.r = c.r;
    rep.delta = c.delta;
    rep.u = c.u;
    rep.v = c.v;
    rep.empirical_prob = est.estimate;
    rep.stderr_ = est.stderr_;
    rep.bound_value = small_ball_bound(c.n, c.k, c.r, c.u.norm(), c.delta);
    rep.holds = rep.empirical_prob <= rep.bound_value + 3.0 * rep.stderr_;
    out.push_back(std::move(rep));
  }
  return out;
}

/// n in {2,3,5}, k in {1,2,3}, delta in {0.02,0.05,0.1}, ||u|| in {0.5,1,2}, r = 1, v = 0,
/// u along the diagonal direction.
inline std::vector<BoundCell> default_lemma2_grid() {
  std::vector<BoundCell> grid;
  for (int n : {2, 3, 5})
    for (int k : {1, 2, 3})
      for (double delta : {0.02, 0.05, 0.1})
        for (double norm : {0.5, 1.0, 2.0}) {
          BoundCell c;
          c.n = n;
          c.k = k;
          c.r = 1.0;
          c.delta = delta;
          c.u = Eigen::VectorXd::Constant(n, norm / std::sqrt(static_cast<double>(n)));
          c.v = Eigen::VectorXd::Zero(k);
          grid.push_back(std::move(c));
        }
  return grid;
}

inline std::string bound_reports_csv(const std::vector<BoundReport>& reports) {
  std::ostringstream out;
  out << "n,k,r,delta,u_norm,empirical,stderr,bound,holds\n";
  for (const auto& r : reports) {
    out << r.n << ',' << r.k << ',' << io::format_double(r.r) << ',' << io::format_double(r.delta) << ','
        << io::format_double(r.u.norm()) << ',' << io::format_double(r.empirical_prob) << ','
        << io::format_double(r.stderr_) << ',' << io::format_double(r.bound_value) << ','
        << (r.holds ? "true" : "false") << '\n';
  }
  return out.str();
}

// Transversality --------------------------------------------------------------

struct TransversalityVerdict {
  bool transversal = true;
  std::uint64_t subsets_checked = 0;
  std::vector<int> dependent_subset;  // first rank-deficient subset, if any

  explicit operator bool() const { return transversal; }
};

/// True iff every s-column subset of A has numerical rank s, i.e. the kernel of A
/// contains no nonzero vector supported on s coordinates.
inline TransversalityVerdict sparse_transversality(const Eigen::MatrixXd& a, int s, double tol = kFullRankTol) {
  const auto k = static_cast<int>(a.rows());
  const auto m = static_cast<int>(a.cols());
  if (s < 1) throw Error(ErrorCode::Precondition, "transversality: need s >= 1");
  if (s > k) throw Error(ErrorCode::Precondition, "transversality: s exceeds the number of rows");
  if (s > m) throw Error(ErrorCode::Precondition, "transversality: s exceeds the number of columns");

  TransversalityVerdict verdict;
  std::vector<int> idx(s);
  for (int i = 0; i < s; ++i) idx[i] = i;
  Eigen::MatrixXd sub(k, s);
  while (true) {
    for (int c = 0; c < s; ++c) sub.col(c) = a.col(idx[c]);
    ++verdict.subsets_checked;
    if (numerical_rank(sub, tol) < s) {
      verdict.transversal = false;
      verdict.dependent_subset = idx;
      return verdict;
    }
    int i = s - 1;
    while (i >= 0 && idx[i] == m - s + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
  }
  return verdict;
}

/// Transversality of H = [A B] for a full-column-rank B.
inline TransversalityVerdict mixed_transversality(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int s,
                                                  double tol = kFullRankTol) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::DimensionMismatch, "transversality: A and B row counts differ");
  if (b.cols() > 0 && !has_full_column_rank(b)) throw Error(ErrorCode::RankDeficient, "transversality: B is rank deficient");
  Eigen::MatrixXd h(a.rows(), a.cols() + b.cols());
  h << a, b;
  return sparse_transversality(h, s, tol);
}

}  // namespace mixsep

#endif  // MIXSEP_CONCENTRATION_HPP
