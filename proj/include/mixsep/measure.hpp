#ifndef MIXSEP_MEASURE_HPP
#define MIXSEP_MEASURE_HPP

// Measurement map w = A*y + B*z = [A B]*x with A random and B a fixed
// full-column-rank matrix.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "error.hpp"
#include "random.hpp"
#include "sources.hpp"

namespace mixsep {

/// Law of the random matrix A: rows uniform on the ball of given radius, or i.i.d. N(0,1) entries.
struct EnsembleA {
  enum class Kind { Normal, Ball };
  Kind kind = Kind::Normal;
  double radius = 1.0;

  static EnsembleA normal() { return {}; }
  static EnsembleA ball(double r) { return {Kind::Ball, r}; }
};

enum class KindB { Identity, Normal, User };

inline constexpr double kFullRankTol = 1e-10;

struct MeasurementSystem {
  Eigen::MatrixXd A;  // k x (n - ell)
  Eigen::MatrixXd B;  // k x ell
  EnsembleA ensemble_a;
  KindB kind_b = KindB::Identity;
  int k = 0;
  int n = 0;
  int ell = 0;
  std::uint64_t seed = 0;

  Eigen::MatrixXd H() const {
    Eigen::MatrixXd h(k, n);
    h << A, B;
    return h;
  }
};

/// Number of singular values above tol * (largest singular value).
inline int numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& m, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::Precondition, "numerical_rank: tol must be positive");
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  const double top = sv.size() ? sv[0] : 0.0;
  if (!(top > 0.0)) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > tol * top) ++rank;
  return rank;
}

inline bool has_full_column_rank(const Eigen::Ref<const Eigen::MatrixXd>& m, double tol = kFullRankTol) {
  return numerical_rank(m, tol) == m.cols();
}

/// Uniform draw from the closed ball of radius r in R^n: isotropic direction scaled by r*U^(1/n).
inline Eigen::VectorXd sample_ball_uniform(int n, double r, Rng& rng) {
  if (n < 1 || !(r > 0.0)) throw Error(ErrorCode::Precondition, "sample_ball_uniform: need n >= 1 and r > 0");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd dir(n);
  double norm = 0.0;
  do {
    for (int i = 0; i < n; ++i) dir[i] = gauss(rng);
    norm = dir.norm();
  } while (norm == 0.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  do u = unif(rng); while (u == 0.0);
  return dir * (r * std::pow(u, 1.0 / n) / norm);
}

inline Eigen::MatrixXd build_A(int k, int m, const EnsembleA& ensemble, Rng& rng) {
  if (k < 1 || m < 0) throw Error(ErrorCode::Precondition, "build_A: need k >= 1 and m >= 0");
  Eigen::MatrixXd a(k, m);
  if (m == 0) return a;
  if (ensemble.kind == EnsembleA::Kind::Ball) {
    for (int i = 0; i < k; ++i) a.row(i) = sample_ball_uniform(m, ensemble.radius, rng).transpose();
  } else {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < m; ++j) a(i, j) = gauss(rng);
  }
  return a;
}

/// k x ell matrix of certified full column rank. `user` is consulted only for KindB::User.
inline Eigen::MatrixXd build_B(KindB kind, int k, int ell, Rng& rng,
                               const std::optional<Eigen::MatrixXd>& user = std::nullopt) {
  if (ell < 0 || k < ell) throw Error(ErrorCode::Precondition, "build_B: need k >= ell >= 0");
  Eigen::MatrixXd b;
  switch (kind) {
    case KindB::Identity:
      b = Eigen::MatrixXd::Identity(k, ell);
      break;
    case KindB::Normal: {
      std::normal_distribution<double> gauss(0.0, 1.0);
      b.resize(k, ell);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < ell; ++j) b(i, j) = gauss(rng);
      break;
    }
    case KindB::User:
      if (!user) throw Error(ErrorCode::Precondition, "build_B: user-supplied B missing");
      if (user->rows() != k || user->cols() != ell)
        throw Error(ErrorCode::DimensionMismatch, "build_B: user-supplied B has wrong shape");
      b = *user;
      break;
  }
  if (ell > 0 && !has_full_column_rank(b)) throw Error(ErrorCode::RankDeficient, "build_B: B is rank deficient");
  return b;
}

/// Builds (A, B) from independent streams derived from `seed`.
inline MeasurementSystem make_system(int k, int n, int ell, const EnsembleA& ensemble, KindB kind_b,
                                     std::uint64_t seed, const std::optional<Eigen::MatrixXd>& user_b = std::nullopt) {
  if (ell < 0 || k < ell || k > n || k < 1)
    throw Error(ErrorCode::Precondition, "make_system: need 1 <= k <= n and k >= ell >= 0");
  MeasurementSystem sys;
  sys.k = k;
  sys.n = n;
  sys.ell = ell;
  sys.seed = seed;
  sys.ensemble_a = ensemble;
  sys.kind_b = kind_b;
  Rng rng_a = make_rng(derive_seed(seed, stream::matrix_a));
  Rng rng_b = make_rng(derive_seed(seed, stream::matrix_b));
  sys.A = build_A(k, n - ell, ensemble, rng_a);
  sys.B = build_B(kind_b, k, ell, rng_b, user_b);
  return sys;
}

/// Wraps explicit matrices, certifying shapes and the rank of B.
inline MeasurementSystem make_system(Eigen::MatrixXd a, Eigen::MatrixXd b) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::DimensionMismatch, "make_system: A and B row counts differ");
  MeasurementSystem sys;
  sys.k = static_cast<int>(a.rows());
  sys.ell = static_cast<int>(b.cols());
  sys.n = static_cast<int>(a.cols() + b.cols());
  if (sys.k < sys.ell) throw Error(ErrorCode::Precondition, "make_system: need k >= ell");
  if (sys.ell > 0 && !has_full_column_rank(b)) throw Error(ErrorCode::RankDeficient, "make_system: B is rank deficient");
  sys.kind_b = KindB::User;
  sys.A = std::move(a);
  sys.B = std::move(b);
  return sys;
}

inline Eigen::VectorXd measure(const MeasurementSystem& sys, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != sys.n || sys.A.cols() != sys.n - sys.ell || sys.B.cols() != sys.ell)
    throw Error(ErrorCode::DimensionMismatch, "measure: x does not match the system dimensions");
  Eigen::VectorXd w = sys.A * x.head(sys.n - sys.ell);
  if (sys.ell > 0) w += sys.B * x.tail(sys.ell);
  return w;
}

inline Eigen::VectorXd measure(const MeasurementSystem& sys, const SourceVector& src) {
  if (src.ell != sys.ell) throw Error(ErrorCode::DimensionMismatch, "measure: split point mismatch");
  return measure(sys, src.x);
}

// JSON ---------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const EnsembleA& e) {
  if (e.kind == EnsembleA::Kind::Ball)
    j = {{"kind", "ball"}, {"radius", e.radius}};
  else
    j = {{"kind", "normal"}};
}

inline void from_json(const nlohmann::json& j, EnsembleA& e) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "normal")
    e = EnsembleA::normal();
  else if (kind == "ball")
    e = EnsembleA::ball(j.value("radius", 1.0));
  else
    throw Error(ErrorCode::Parse, "unknown A ensemble '" + kind + "'");
  if (!(e.radius > 0.0)) throw Error(ErrorCode::Parse, "ball radius must be positive");
}

inline std::string to_string(KindB kind) {
  switch (kind) {
    case KindB::Identity: return "identity";
    case KindB::Normal: return "normal";
    case KindB::User: return "user";
  }
  return "identity";
}

inline KindB parse_kind_b(const std::string& s) {
  if (s == "identity") return KindB::Identity;
  if (s == "normal") return KindB::Normal;
  if (s == "user") return KindB::User;
  throw Error(ErrorCode::Parse, "unknown B kind '" + s + "'");
}

}  // namespace mixsep

#endif  // MIXSEP_MEASURE_HPP
