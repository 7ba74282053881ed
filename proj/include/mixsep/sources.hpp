#ifndef MIXSEP_SOURCES_HPP
#define MIXSEP_SOURCES_HPP

// Mixed discrete-continuous source vectors x = [y; z].
//
// Components 0..n-ell-1 (the y block) follow (1-rho1)*mu_d1 + rho1*mu_c1,
// components n-ell..n-1 (the z block) follow (1-rho2)*mu_d2 + rho2*mu_c2,
// all independent, with ell = floor(lambda*n). Indices are 0-based
// throughout the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "error.hpp"
#include "random.hpp"

namespace mixsep {

struct Atom {
  double value = 0.0;
  double weight = 1.0;
};

using AtomList = std::vector<Atom>;

/// Absolutely continuous component law.
struct ContinuousLaw {
  enum class Kind { Normal, Uniform };

  Kind kind = Kind::Normal;
  double lo = 0.0;
  double hi = 1.0;

  static ContinuousLaw normal() { return {}; }
  static ContinuousLaw uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }

  double sample(Rng& rng) const {
    if (kind == Kind::Uniform) return std::uniform_real_distribution<double>(lo, hi)(rng);
    return std::normal_distribution<double>(0.0, 1.0)(rng);
  }

  bool operator==(const ContinuousLaw&) const = default;
};

struct MixedSourceSpec {
  double lambda = 0.0;
  double rho1 = 0.0;
  double rho2 = 0.0;
  AtomList atoms1{{0.0, 1.0}};
  AtomList atoms2{{0.0, 1.0}};
  ContinuousLaw cont1;
  ContinuousLaw cont2;
};

struct SourceVector {
  Eigen::VectorXd x;
  int n = 0;
  int ell = 0;
  /// Sorted indices of the components drawn from the continuous part.
  std::vector<int> support;

  auto y() const { return x.head(n - ell); }
  auto z() const { return x.tail(ell); }
};

/// floor(a*n) with a guard against products like 0.29*100 = 28.999999999999996.
inline int floor_product(double a, int n) {
  return static_cast<int>(std::floor(a * static_cast<double>(n) + 1e-9));
}

inline int split_point(double lambda, int n) { return std::clamp(floor_product(lambda, n), 0, n); }

namespace detail {

inline void validate_atoms(const AtomList& atoms, const char* name) {
  if (atoms.empty()) throw Error(ErrorCode::InvalidSpec, std::string(name) + ": atom list is empty");
  double total = 0.0;
  std::set<double> seen;
  for (const auto& a : atoms) {
    if (!std::isfinite(a.value)) throw Error(ErrorCode::InvalidSpec, std::string(name) + ": non-finite atom value");
    if (!(a.weight > 0.0)) throw Error(ErrorCode::InvalidSpec, std::string(name) + ": atom weight must be positive");
    if (!seen.insert(a.value).second)
      throw Error(ErrorCode::InvalidSpec, std::string(name) + ": duplicate atom value");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw Error(ErrorCode::InvalidSpec, std::string(name) + ": atom weights do not sum to 1");
}

inline void validate_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidSpec, std::string(name) + " out of range [0,1]");
}

inline void validate_law(const ContinuousLaw& law, const char* name) {
  if (law.kind == ContinuousLaw::Kind::Uniform && !(law.lo < law.hi))
    throw Error(ErrorCode::InvalidSpec, std::string(name) + ": uniform law requires lo < hi");
}

inline bool is_atom(double v, const AtomList& atoms) {
  return std::any_of(atoms.begin(), atoms.end(), [v](const Atom& a) { return a.value == v; });
}

}  // namespace detail

/// Returns the spec unchanged if every invariant holds; throws on the first violation.
inline MixedSourceSpec validate_spec(const MixedSourceSpec& spec) {
  detail::validate_unit(spec.lambda, "lambda");
  detail::validate_unit(spec.rho1, "rho1");
  detail::validate_unit(spec.rho2, "rho2");
  detail::validate_atoms(spec.atoms1, "atoms1");
  detail::validate_atoms(spec.atoms2, "atoms2");
  detail::validate_law(spec.cont1, "cont1");
  detail::validate_law(spec.cont2, "cont2");
  return spec;
}

/// Asymptotic normalized support size (1-lambda)*rho1 + lambda*rho2.
inline double support_fraction(const MixedSourceSpec& spec) {
  return (1.0 - spec.lambda) * spec.rho1 + spec.lambda * spec.rho2;
}

inline SourceVector sample_source(const MixedSourceSpec& spec, int n, Rng& rng) {
  if (n < 1) throw Error(ErrorCode::Precondition, "sample_source: n must be positive");
  validate_spec(spec);

  SourceVector out;
  out.n = n;
  out.ell = split_point(spec.lambda, n);
  out.x.resize(n);

  auto weights = [](const AtomList& atoms) {
    std::vector<double> w;
    w.reserve(atoms.size());
    for (const auto& a : atoms) w.push_back(a.weight);
    return w;
  };
  const auto w1 = weights(spec.atoms1);
  const auto w2 = weights(spec.atoms2);
  std::discrete_distribution<std::size_t> pick1(w1.begin(), w1.end());
  std::discrete_distribution<std::size_t> pick2(w2.begin(), w2.end());
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  const int split = n - out.ell;
  for (int i = 0; i < n; ++i) {
    const bool first = i < split;
    const double rho = first ? spec.rho1 : spec.rho2;
    if (coin(rng) < rho) {
      out.x[i] = (first ? spec.cont1 : spec.cont2).sample(rng);
      out.support.push_back(i);
    } else {
      out.x[i] = first ? spec.atoms1[pick1(rng)].value : spec.atoms2[pick2(rng)].value;
    }
  }
  return out;
}

/// Indices whose component is not an atom of its block's discrete law (exact comparison).
inline std::vector<int> generalized_support(const Eigen::Ref<const Eigen::VectorXd>& x, const AtomList& atoms1,
                                            const AtomList& atoms2, int n, int ell) {
  if (x.size() != n) throw Error(ErrorCode::DimensionMismatch, "generalized_support: x has wrong length");
  if (ell < 0 || ell > n) throw Error(ErrorCode::Precondition, "generalized_support: ell out of range");
  std::vector<int> spt;
  for (int i = 0; i < n; ++i) {
    const AtomList& atoms = i < n - ell ? atoms1 : atoms2;
    if (!detail::is_atom(x[i], atoms)) spt.push_back(i);
  }
  return spt;
}

inline std::vector<int> generalized_support(const Eigen::Ref<const Eigen::VectorXd>& x,
                                            const MixedSourceSpec& spec, int n, int ell) {
  return generalized_support(x, spec.atoms1, spec.atoms2, n, ell);
}

/// Largest support size s with s < ((1-lambda)rho1 + lambda*rho2 + kappa) * n, clamped to [0, n].
inline int support_cap(const MixedSourceSpec& spec, int n, double kappa) {
  if (!(kappa > 0.0)) throw Error(ErrorCode::Precondition, "support_cap: kappa must be positive");
  const double bound = (support_fraction(spec) + kappa) * static_cast<double>(n);
  const int cap = static_cast<int>(std::ceil(bound - 1e-9)) - 1;
  return std::clamp(cap, 0, n);
}

/// Binomial(trials, p) probability mass function, evaluated in log space.
inline std::vector<double> binomial_pmf(int trials, double p) {
  std::vector<double> pmf(static_cast<std::size_t>(trials) + 1, 0.0);
  if (p <= 0.0) {
    pmf.front() = 1.0;
    return pmf;
  }
  if (p >= 1.0) {
    pmf.back() = 1.0;
    return pmf;
  }
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lnf = std::lgamma(trials + 1.0);
  for (int j = 0; j <= trials; ++j)
    pmf[j] = std::exp(lnf - std::lgamma(j + 1.0) - std::lgamma(trials - j + 1.0) + j * lp + (trials - j) * lq);
  return pmf;
}

/// Law of |spt(x)| = Binomial(n-ell, rho1) + Binomial(ell, rho2), by exact convolution.
inline std::vector<double> support_size_distribution(const MixedSourceSpec& spec, int n) {
  validate_spec(spec);
  if (n < 1) throw Error(ErrorCode::Precondition, "support_size_distribution: n must be positive");
  const int ell = split_point(spec.lambda, n);
  const auto first = binomial_pmf(n - ell, spec.rho1);
  const auto second = binomial_pmf(ell, spec.rho2);
  std::vector<double> law(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::size_t i = 0; i < first.size(); ++i)
    for (std::size_t j = 0; j < second.size(); ++j) law[i + j] += first[i] * second[j];
  return law;
}

/// P[|spt(x)| <= s].
inline double support_cdf(const std::vector<double>& law, int s) {
  double acc = 0.0;
  for (int i = 0; i <= s && i < static_cast<int>(law.size()); ++i) acc += law[i];
  return std::min(acc, 1.0);
}

// JSON ---------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const Atom& a) { j = {{"value", a.value}, {"weight", a.weight}}; }
inline void from_json(const nlohmann::json& j, Atom& a) {
  j.at("value").get_to(a.value);
  j.at("weight").get_to(a.weight);
}

inline void to_json(nlohmann::json& j, const ContinuousLaw& law) {
  if (law.kind == ContinuousLaw::Kind::Uniform)
    j = {{"law", "uniform"}, {"lo", law.lo}, {"hi", law.hi}};
  else
    j = {{"law", "normal"}};
}

inline void from_json(const nlohmann::json& j, ContinuousLaw& law) {
  const auto kind = j.at("law").get<std::string>();
  if (kind == "normal") {
    law = ContinuousLaw::normal();
  } else if (kind == "uniform") {
    law = ContinuousLaw::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
  } else {
    throw Error(ErrorCode::Parse, "unknown continuous law '" + kind + "'");
  }
}

inline void to_json(nlohmann::json& j, const MixedSourceSpec& s) {
  j = {{"lambda", s.lambda}, {"rho1", s.rho1},     {"rho2", s.rho2}, {"atoms1", s.atoms1},
       {"atoms2", s.atoms2}, {"cont1", s.cont1}, {"cont2", s.cont2}};
}

/// lambda, rho1, rho2 are required; atom lists default to a point mass at 0 and
/// continuous laws to the standard normal.
inline void from_json(const nlohmann::json& j, MixedSourceSpec& s) {
  s = MixedSourceSpec{};
  j.at("lambda").get_to(s.lambda);
  j.at("rho1").get_to(s.rho1);
  j.at("rho2").get_to(s.rho2);
  if (j.contains("atoms1")) j.at("atoms1").get_to(s.atoms1);
  if (j.contains("atoms2")) j.at("atoms2").get_to(s.atoms2);
  if (j.contains("cont1")) j.at("cont1").get_to(s.cont1);
  if (j.contains("cont2")) j.at("cont2").get_to(s.cont2);
}

}  // namespace mixsep

#endif  // MIXSEP_SOURCES_HPP
