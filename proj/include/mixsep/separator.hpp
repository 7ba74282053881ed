#ifndef MIXSEP_SEPARATOR_HPP
#define MIXSEP_SEPARATOR_HPP

// Exhaustive set-intersection separator.
//
// Given w = H*x with H = [A B], the separator returns the unique element of
// {u : H*u = w} ∩ U, where U is the set of vectors with at most s_bar
// off-atom coordinates (generalized support), and reports failure otherwise.
// Membership is decided pattern by pattern: for every support pattern T with
// |T| <= s_bar and every assignment of atoms to the complement of T, the
// free coordinates are obtained by least squares and the pattern is
// consistent iff the residual vanishes up to a scaled tolerance.
//
// Enumeration order is deterministic: patterns by increasing size, then
// lexicographically; atom assignments in odometer order (last index fastest).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "error.hpp"
#include "sources.hpp"

namespace mixsep {

/// U = {u in R^n : |spt(u)| <= s_bar}, spt taken with respect to (atoms1, atoms2, ell).
struct CandidateSet {
  int s_bar = 0;
  AtomList atoms1{{0.0, 1.0}};
  AtomList atoms2{{0.0, 1.0}};
  int n = 0;
  int ell = 0;

  void validate() const {
    if (n < 1 || ell < 0 || ell > n) throw Error(ErrorCode::Precondition, "candidate set: bad (n, ell)");
    if (s_bar < 0 || s_bar > n) throw Error(ErrorCode::Precondition, "candidate set: s_bar out of [0, n]");
    if (atoms1.empty() || atoms2.empty()) throw Error(ErrorCode::Precondition, "candidate set: empty atom list");
  }

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& u) const {
    return static_cast<int>(generalized_support(u, atoms1, atoms2, n, ell).size()) <= s_bar;
  }
};

struct SeparationTolerances {
  double residual = 1e-8;  // consistency: ||H u - w|| <= residual * (1 + ||w||)
  double dedup = 1e-6;     // distinctness: ||u - v||_inf > dedup * (1 + ||u||_inf)
  double rank = 1e-10;     // relative pivot threshold for the restricted column block
  std::uint64_t budget = 10'000'000;  // max pattern-assignment pairs
  bool incremental = true;  // projection walk for single-atom lists; false forces per-pattern solves
};

enum class SeparationStatus { Unique, Ambiguous, Infeasible };

inline const char* to_string(SeparationStatus s) {
  switch (s) {
    case SeparationStatus::Unique: return "unique";
    case SeparationStatus::Ambiguous: return "ambiguous";
    case SeparationStatus::Infeasible: return "infeasible";
  }
  return "infeasible";
}

struct SeparationOutcome {
  SeparationStatus status = SeparationStatus::Infeasible;
  std::optional<Eigen::VectorXd> x_hat;      // iff Unique
  std::vector<Eigen::VectorXd> witnesses;    // two entries iff Ambiguous
  std::uint64_t patterns_examined = 0;       // pattern-assignment pairs actually solved
  double residual = std::numeric_limits<double>::infinity();
};

/// Result of restricting the linear system to one support pattern.
struct PatternSolution {
  bool consistent = false;
  bool rank_deficient = false;
  double residual = std::numeric_limits<double>::infinity();
  Eigen::VectorXd candidate;  // full length-n vector (complement pinned)
  Eigen::VectorXd null_step;  // full length-n kernel direction within the pattern, iff rank_deficient
};

namespace detail {

inline double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline bool same_candidate(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double tol) {
  return sup_norm(a - b) <= tol * (1.0 + std::max(sup_norm(a), sup_norm(b)));
}

/// Scratch buffers reused across patterns of equal size.
struct PatternWorkspace {
  std::vector<Eigen::MatrixXd> blocks;
  std::vector<Eigen::ColPivHouseholderQR<Eigen::MatrixXd>> qrs;
  Eigen::VectorXd rhs;

  PatternWorkspace(Eigen::Index k, int max_free) {
    for (int t = 0; t <= max_free; ++t) {
      blocks.emplace_back(k, t);
      qrs.emplace_back(k, t);
    }
  }
};

inline PatternSolution solve_on_pattern_impl(const Eigen::MatrixXd& h, const Eigen::VectorXd& w,
                                             const std::vector<int>& free, const Eigen::VectorXd& pinned,
                                             double residual_tol, double rank_tol, PatternWorkspace& ws) {
  const Eigen::Index n = h.cols();
  const int t = static_cast<int>(free.size());

  ws.rhs = w;
  {
    std::size_t f = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (f < free.size() && free[f] == i) {
        ++f;
        continue;
      }
      if (pinned[i] != 0.0) ws.rhs.noalias() -= pinned[i] * h.col(i);
    }
  }

  PatternSolution out;
  out.candidate = pinned;
  for (int i : free) out.candidate[i] = 0.0;

  if (t == 0) {
    out.residual = ws.rhs.norm();
  } else {
    auto& block = ws.blocks[t];
    for (int c = 0; c < t; ++c) block.col(c) = h.col(free[c]);
    auto& qr = ws.qrs[t];
    qr.setThreshold(rank_tol);
    qr.compute(block);
    Eigen::VectorXd sol;
    if (qr.rank() == t) {
      sol = qr.solve(ws.rhs);
    } else {
      // Minimum-norm solution plus one kernel direction of the restricted block.
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU | Eigen::ComputeFullV);
      svd.setThreshold(rank_tol);
      sol = svd.solve(ws.rhs);
      out.rank_deficient = true;
      const Eigen::VectorXd dir = svd.matrixV().col(t - 1);
      out.null_step = Eigen::VectorXd::Zero(n);
      for (int c = 0; c < t; ++c) out.null_step[free[c]] = dir[c];
    }
    out.residual = (block * sol - ws.rhs).norm();
    for (int c = 0; c < t; ++c) out.candidate[free[c]] = sol[c];
  }
  out.consistent = out.residual <= residual_tol * (1.0 + w.norm());
  return out;
}

/// Number of pattern-assignment pairs with |T| <= max_free: sum of the
/// coefficients of z^0..z^max_free in (a1 + z)^(n-ell) * (a2 + z)^ell.
inline double pattern_assignment_count(int n, int ell, std::size_t a1, std::size_t a2, int max_free) {
  std::vector<double> poly{1.0};
  auto multiply = [&poly](double a) {
    std::vector<double> next(poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += a * poly[i];
      next[i + 1] += poly[i];
    }
    poly.swap(next);
  };
  for (int i = 0; i < n - ell; ++i) multiply(static_cast<double>(a1));
  for (int i = 0; i < ell; ++i) multiply(static_cast<double>(a2));
  double total = 0.0;
  for (int t = 0; t <= max_free && t < static_cast<int>(poly.size()); ++t) total += poly[t];
  return total;
}

/// Advances `idx` to the next t-combination of {0..n-1} in lexicographic order.
inline bool next_combination(std::vector<int>& idx, int n) {
  const int t = static_cast<int>(idx.size());
  int i = t - 1;
  while (i >= 0 && idx[i] == n - t + i) --i;
  if (i < 0) return false;
  ++idx[i];
  for (int j = i + 1; j < t; ++j) idx[j] = idx[j - 1] + 1;
  return true;
}

struct EnumerationState {
  std::vector<Eigen::VectorXd> found;
  std::uint64_t examined = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  std::vector<double> found_residuals;
};

inline void record(EnumerationState& st, const Eigen::VectorXd& u, double residual, double dedup) {
  for (const auto& f : st.found)
    if (same_candidate(f, u, dedup)) return;
  st.found.push_back(u);
  st.found_residuals.push_back(residual);
}

/// Returns true when the cap is reached.
inline bool accept(EnumerationState& st, const PatternSolution& sol, double dedup, std::size_t cap) {
  record(st, sol.candidate, sol.residual, dedup);
  if (sol.rank_deficient && st.found.size() < cap) {
    const double scale = 1.0 + sup_norm(sol.candidate);
    record(st, sol.candidate + scale * sol.null_step / sup_norm(sol.null_step), sol.residual, dedup);
  }
  if (st.found.size() >= cap) {
    st.found.resize(cap);
    st.found_residuals.resize(cap);
    return true;
  }
  return false;
}

/// Single-atom lists: the pinned right-hand side of every pattern T is
/// w - H*a + H_T*a_T, and its distance to span(H_T) equals that of the fixed
/// vector w - H*a. Residuals are therefore updated incrementally along a
/// depth-first walk of the t-combinations (same lexicographic order), by
/// Gram-Schmidt against the columns on the current path. Only consistent
/// patterns are handed to the least-squares solver.
class ProjectionWalker {
public:
  ProjectionWalker(const Eigen::MatrixXd& h, const Eigen::VectorXd& w, const Eigen::VectorXd& pinned,
                   const SeparationTolerances& tols, std::size_t cap, int max_free, EnumerationState& st)
      : h_(h), w_(w), pinned_(pinned), tols_(tols), cap_(cap), st_(st), ws_(h.rows(), max_free),
        basis_(h.rows(), std::max(max_free, 1)), residuals_(max_free + 1, Eigen::VectorXd(h.rows())),
        threshold_(tols.residual * (1.0 + w.norm())) {
    residuals_[0] = w - h * pinned;
  }

  /// Walks all patterns of size t; returns true when the cap is reached.
  bool walk(int t) {
    size_ = t;
    path_.assign(t, 0);
    return descend(0, 0, 0);
  }

private:
  bool descend(int depth, int start, int rank) {
    const int n = static_cast<int>(h_.cols());
    if (depth == size_) return examine(depth);
    for (int idx = start; idx <= n - (size_ - depth); ++idx) {
      path_[depth] = idx;
      auto& q = scratch_;
      q = h_.col(idx);
      const double col_norm = q.norm();
      for (int pass = 0; pass < 2; ++pass)
        for (int b = 0; b < rank; ++b) q -= basis_.col(b).dot(q) * basis_.col(b);
      const double rem = q.norm();
      int next_rank = rank;
      residuals_[depth + 1] = residuals_[depth];
      if (col_norm > 0.0 && rem > tols_.rank * col_norm) {
        basis_.col(rank) = q / rem;
        residuals_[depth + 1] -= basis_.col(rank).dot(residuals_[depth + 1]) * basis_.col(rank);
        next_rank = rank + 1;
      }
      if (descend(depth + 1, idx + 1, next_rank)) return true;
    }
    return false;
  }

  bool examine(int depth) {
    ++st_.examined;
    const double res = residuals_[depth].norm();
    st_.best_residual = std::min(st_.best_residual, res);
    if (res > threshold_) return false;
    auto sol = solve_on_pattern_impl(h_, w_, path_, pinned_, tols_.residual, tols_.rank, ws_);
    if (!sol.consistent) return false;
    return accept(st_, sol, tols_.dedup, cap_);
  }

  const Eigen::MatrixXd& h_;
  const Eigen::VectorXd& w_;
  const Eigen::VectorXd& pinned_;
  const SeparationTolerances& tols_;
  std::size_t cap_;
  EnumerationState& st_;
  PatternWorkspace ws_;
  Eigen::MatrixXd basis_;
  std::vector<Eigen::VectorXd> residuals_;
  std::vector<int> path_;
  Eigen::VectorXd scratch_;
  int size_ = 0;
  double threshold_;
};

inline EnumerationState enumerate(const Eigen::MatrixXd& h, const Eigen::VectorXd& w, const CandidateSet& cand,
                                  const SeparationTolerances& tols, std::size_t cap) {
  cand.validate();
  if (h.cols() != cand.n) throw Error(ErrorCode::DimensionMismatch, "separate: H must have n columns");
  if (w.size() != h.rows()) throw Error(ErrorCode::DimensionMismatch, "separate: w must have k entries");
  const int n = cand.n;
  const int k = static_cast<int>(h.rows());
  const int max_free = std::min(cand.s_bar, k);

  const double pairs = pattern_assignment_count(n, cand.ell, cand.atoms1.size(), cand.atoms2.size(), max_free);
  if (pairs > static_cast<double>(tols.budget))
    throw Error(ErrorCode::BudgetExceeded, "separate: " + std::to_string(static_cast<long double>(pairs)) +
                                               " pattern-assignment pairs exceed the budget of " +
                                               std::to_string(tols.budget));

  const int split = n - cand.ell;
  auto atoms_of = [&](int i) -> const AtomList& { return i < split ? cand.atoms1 : cand.atoms2; };

  EnumerationState st;
  Eigen::VectorXd pinned(n);

  if (tols.incremental && cand.atoms1.size() == 1 && cand.atoms2.size() == 1) {
    for (int i = 0; i < n; ++i) pinned[i] = atoms_of(i).front().value;
    ProjectionWalker walker(h, w, pinned, tols, cap, max_free, st);
    for (int t = 0; t <= max_free; ++t)
      if (walker.walk(t)) break;
    return st;
  }

  PatternWorkspace ws(h.rows(), max_free);
  std::vector<std::size_t> choice(n, 0);
  std::vector<int> complement;
  complement.reserve(n);

  for (int t = 0; t <= max_free; ++t) {
    std::vector<int> free(t);
    for (int i = 0; i < t; ++i) free[i] = i;
    do {
      complement.clear();
      for (int i = 0, f = 0; i < n; ++i) {
        if (f < t && free[f] == i)
          ++f;
        else
          complement.push_back(i);
      }
      for (int i : complement) choice[i] = 0;
      while (true) {
        for (int i : complement) pinned[i] = atoms_of(i)[choice[i]].value;
        auto sol = solve_on_pattern_impl(h, w, free, pinned, tols.residual, tols.rank, ws);
        ++st.examined;
        st.best_residual = std::min(st.best_residual, sol.residual);
        if (sol.consistent && accept(st, sol, tols.dedup, cap)) return st;
        // Odometer over atom assignments, last complement index fastest.
        int pos = static_cast<int>(complement.size()) - 1;
        while (pos >= 0) {
          const int i = complement[pos];
          if (++choice[i] < atoms_of(i).size()) break;
          choice[i] = 0;
          --pos;
        }
        if (pos < 0) break;
      }
    } while (next_combination(free, n));
  }
  return st;
}

}  // namespace detail

/// Least squares over the free coordinates with the complement pinned to
/// `pinned` (entries of `pinned` at free indices are ignored). Requires |free| <= k.
inline PatternSolution solve_on_pattern(const Eigen::MatrixXd& h, const Eigen::VectorXd& w, std::vector<int> free,
                                        const Eigen::VectorXd& pinned, double residual_tol = 1e-8,
                                        double rank_tol = 1e-10) {
  if (w.size() != h.rows() || pinned.size() != h.cols())
    throw Error(ErrorCode::DimensionMismatch, "solve_on_pattern: dimension mismatch");
  std::sort(free.begin(), free.end());
  free.erase(std::unique(free.begin(), free.end()), free.end());
  if (static_cast<Eigen::Index>(free.size()) > h.rows())
    throw Error(ErrorCode::Precondition, "solve_on_pattern: more free coordinates than measurements");
  for (int i : free)
    if (i < 0 || i >= h.cols()) throw Error(ErrorCode::Precondition, "solve_on_pattern: index out of range");
  detail::PatternWorkspace ws(h.rows(), static_cast<int>(free.size()));
  return detail::solve_on_pattern_impl(h, w, free, pinned, residual_tol, rank_tol, ws);
}

/// All distinct consistent candidates in U, up to `cap`, in enumeration order.
inline std::vector<Eigen::VectorXd> enumerate_solutions(const Eigen::MatrixXd& h, const Eigen::VectorXd& w,
                                                        const CandidateSet& cand, const SeparationTolerances& tols,
                                                        std::size_t cap) {
  if (cap < 1) throw Error(ErrorCode::Precondition, "enumerate_solutions: cap must be >= 1");
  return detail::enumerate(h, w, cand, tols, cap).found;
}

inline SeparationOutcome separate(const Eigen::MatrixXd& h, const Eigen::VectorXd& w, const CandidateSet& cand,
                                  const SeparationTolerances& tols = {}) {
  auto st = detail::enumerate(h, w, cand, tols, 2);
  SeparationOutcome out;
  out.patterns_examined = st.examined;
  if (st.found.empty()) {
    out.status = SeparationStatus::Infeasible;
    out.residual = st.best_residual;
  } else if (st.found.size() == 1) {
    out.status = SeparationStatus::Unique;
    out.x_hat = std::move(st.found.front());
    out.residual = st.found_residuals.front();
  } else {
    out.status = SeparationStatus::Ambiguous;
    out.witnesses = std::move(st.found);
    out.residual = std::max(st.found_residuals[0], st.found_residuals[1]);
  }
  return out;
}

// JSON ---------------------------------------------------------------------

namespace detail {
inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}
}  // namespace detail

inline void to_json(nlohmann::json& j, const SeparationOutcome& o) {
  j = nlohmann::json::object();
  j["status"] = to_string(o.status);
  if (o.x_hat) j["x_hat"] = detail::vector_json(*o.x_hat);
  if (!o.witnesses.empty()) {
    j["witnesses"] = nlohmann::json::array();
    for (const auto& wv : o.witnesses) j["witnesses"].push_back(detail::vector_json(wv));
  }
  j["patterns_examined"] = o.patterns_examined;
  if (std::isfinite(o.residual))
    j["residual"] = o.residual;
  else
    j["residual"] = nullptr;
}

}  // namespace mixsep

#endif  // MIXSEP_SEPARATOR_HPP
