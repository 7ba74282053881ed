#ifndef MIXSEP_EXPERIMENTS_HPP
#define MIXSEP_EXPERIMENTS_HPP

// Seeded Monte Carlo harness: end-to-end separation trials, phase-transition
// sweeps over the rate R (k = floor(R*n)), exact binomial oracles, and
// CSV/JSON emission.
//
// Trial t of cell c uses the seed derive_seed(master_seed, c, t). Inside a
// trial, x, A and B are drawn from the streams derive_seed(trial_seed, 1),
// derive_seed(trial_seed, 2) and derive_seed(trial_seed, 3). Results are a
// pure function of the configuration, independent of the thread count.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "error.hpp"
#include "io.hpp"
#include "measure.hpp"
#include "random.hpp"
#include "separator.hpp"
#include "sources.hpp"

namespace mixsep {

/// How s_bar is chosen per cell.
struct SupportCapRule {
  enum class Kind {
    Fixed,  // s_bar given directly
    Kappa,  // s_bar = ceil(((1-lambda)rho1 + lambda*rho2 + kappa) n) - 1
    Max,    // s_bar = k - 1, the largest cap with k >= s_bar + 1
  };
  Kind kind = Kind::Kappa;
  int s_bar = 0;
  double kappa = 0.1;
};

struct ExperimentConfig {
  MixedSourceSpec source;
  int n = 16;
  SupportCapRule cap;
  std::vector<double> rates;
  EnsembleA ensemble_a;
  KindB kind_b = KindB::Identity;
  int trials = 100;
  std::uint64_t master_seed = 0;
  SeparationTolerances tols;
  double success_tol = 1e-8;
  bool timing = false;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const {
    validate_spec(source);
    if (n < 1) throw Error(ErrorCode::InvalidSpec, "config: n must be positive");
    if (trials < 1) throw Error(ErrorCode::InvalidSpec, "config: trials must be >= 1");
    if (rates.empty()) throw Error(ErrorCode::InvalidSpec, "config: no rates");
    for (double r : rates)
      if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorCode::InvalidSpec, "config: rates must lie in [0,1]");
    if (!std::is_sorted(rates.begin(), rates.end()))
      throw Error(ErrorCode::InvalidSpec, "config: rates must be sorted ascending");
    if (cap.kind == SupportCapRule::Kind::Fixed && (cap.s_bar < 0 || cap.s_bar > n))
      throw Error(ErrorCode::InvalidSpec, "config: s_bar out of [0, n]");
    if (cap.kind == SupportCapRule::Kind::Kappa && !(cap.kappa > 0.0))
      throw Error(ErrorCode::InvalidSpec, "config: kappa must be positive");
  }
};

struct Cell {
  int index = 0;
  double rate = 0.0;
  int k = 0;
  int ell = 0;
  int s_bar = 0;
  bool skipped = false;  // k < ell (no full-column-rank B exists) or k = 0
};

inline std::vector<Cell> make_cells(const ExperimentConfig& cfg) {
  const int ell = split_point(cfg.source.lambda, cfg.n);
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < cfg.rates.size(); ++i) {
    Cell c;
    c.index = static_cast<int>(i);
    c.rate = cfg.rates[i];
    c.k = std::min(floor_product(c.rate, cfg.n), cfg.n);
    c.ell = ell;
    switch (cfg.cap.kind) {
      case SupportCapRule::Kind::Fixed: c.s_bar = cfg.cap.s_bar; break;
      case SupportCapRule::Kind::Kappa: c.s_bar = support_cap(cfg.source, cfg.n, cfg.cap.kappa); break;
      case SupportCapRule::Kind::Max: c.s_bar = std::max(c.k - 1, 0); break;
    }
    c.skipped = c.k < ell || c.k < 1;
    cells.push_back(c);
  }
  return cells;
}

enum class TrialOutcome { Success, Error, BudgetExceeded };

inline std::uint64_t trial_seed(std::uint64_t master, int cell, int trial) {
  return derive_seed(master, static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(trial));
}

/// One end-to-end draw: sample x, build (A, B), measure, separate, compare.
inline TrialOutcome run_single_trial(const ExperimentConfig& cfg, const Cell& cell, std::uint64_t seed) {
  if (cell.skipped || cell.k < cell.ell) throw Error(ErrorCode::Precondition, "run_single_trial: cell requires k >= ell");
  Rng src_rng = make_rng(derive_seed(seed, stream::source));
  const SourceVector x = sample_source(cfg.source, cfg.n, src_rng);
  const MeasurementSystem sys = make_system(cell.k, cfg.n, cell.ell, cfg.ensemble_a, cfg.kind_b, seed);
  const Eigen::VectorXd w = measure(sys, x);

  CandidateSet cand{cell.s_bar, cfg.source.atoms1, cfg.source.atoms2, cfg.n, cell.ell};
  try {
    const auto outcome = separate(sys.H(), w, cand, cfg.tols);
    if (outcome.status == SeparationStatus::Unique &&
        (*outcome.x_hat - x.x).norm() <= cfg.success_tol * (1.0 + x.x.norm()))
      return TrialOutcome::Success;
    return TrialOutcome::Error;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BudgetExceeded) return TrialOutcome::BudgetExceeded;
    throw;
  }
}

/// P[|spt(x)| <= s_bar] when k >= s_bar + 1; not applicable otherwise.
inline std::optional<double> predict_success(const ExperimentConfig& cfg, const Cell& cell) {
  if (cell.k < cell.s_bar + 1) return std::nullopt;
  return support_cdf(support_size_distribution(cfg.source, cfg.n), cell.s_bar);
}

/// P[|spt(x)| > k]: the true pattern is underdetermined, so every such trial fails.
inline double predict_error_lower_bound(const ExperimentConfig& cfg, const Cell& cell) {
  return std::max(0.0, 1.0 - support_cdf(support_size_distribution(cfg.source, cfg.n), cell.k));
}

struct ExperimentRecord {
  int n = 0;
  int ell = 0;
  double rate = 0.0;
  int k = 0;
  int s_bar = 0;
  int trials = 0;
  int successes = 0;
  int errors = 0;
  int budget_exceeded = 0;
  std::optional<double> error_rate;  // over success + error trials; empty if none evaluated
  std::optional<double> oracle_success;
  double oracle_error_lb = 0.0;
  std::uint64_t seed = 0;
  double wall_time_ms = 0.0;
  bool skipped = false;

  double success_rate() const { return error_rate ? 1.0 - *error_rate : 0.0; }
  int evaluated() const { return successes + errors; }
  /// Binomial standard error of the empirical error rate.
  double stderr_() const {
    if (!error_rate || evaluated() == 0) return 0.0;
    const double p = *error_rate;
    return std::sqrt(p * (1.0 - p) / evaluated());
  }
};

namespace detail {

template <class Fn>
void parallel_for(int count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(count, 1)));
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

inline ExperimentRecord run_cell(const ExperimentConfig& cfg, const Cell& cell) {
  ExperimentRecord rec;
  rec.n = cfg.n;
  rec.ell = cell.ell;
  rec.rate = cell.rate;
  rec.k = cell.k;
  rec.s_bar = cell.s_bar;
  rec.seed = cfg.master_seed;
  rec.skipped = cell.skipped;
  rec.oracle_error_lb = predict_error_lower_bound(cfg, cell);
  if (cell.skipped) return rec;

  rec.trials = cfg.trials;
  rec.oracle_success = predict_success(cfg, cell);

  const auto start = std::chrono::steady_clock::now();
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(cfg.trials));
  detail::parallel_for(cfg.trials, cfg.threads, [&](int t) {
    outcomes[t] = run_single_trial(cfg, cell, trial_seed(cfg.master_seed, cell.index, t));
  });
  for (auto o : outcomes) {
    switch (o) {
      case TrialOutcome::Success: ++rec.successes; break;
      case TrialOutcome::Error: ++rec.errors; break;
      case TrialOutcome::BudgetExceeded: ++rec.budget_exceeded; break;
    }
  }
  if (rec.evaluated() > 0) rec.error_rate = 1.0 - static_cast<double>(rec.successes) / rec.evaluated();
  if (cfg.timing)
    rec.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

/// One record per rate, in rate order.
inline std::vector<ExperimentRecord> run_phase_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<ExperimentRecord> records;
  for (const auto& cell : make_cells(cfg)) records.push_back(run_cell(cfg, cell));
  return records;
}

// Serialization --------------------------------------------------------------

inline void to_json(nlohmann::json& j, const SupportCapRule& c) {
  switch (c.kind) {
    case SupportCapRule::Kind::Fixed: j = {{"s_bar_mode", "fixed"}, {"s_bar", c.s_bar}}; break;
    case SupportCapRule::Kind::Kappa: j = {{"s_bar_mode", "kappa"}, {"kappa", c.kappa}}; break;
    case SupportCapRule::Kind::Max: j = {{"s_bar_mode", "max"}}; break;
  }
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"source", c.source},
       {"n", c.n},
       {"rates", c.rates},
       {"ensemble_a", c.ensemble_a},
       {"kind_b", to_string(c.kind_b)},
       {"trials", c.trials},
       {"master_seed", c.master_seed},
       {"budget", c.tols.budget},
       {"residual_tol", c.tols.residual},
       {"dedup_tol", c.tols.dedup},
       {"success_tol", c.success_tol}};
  j.update(nlohmann::json(c.cap));
}

/// Cap rule: explicit "s_bar_mode" (fixed | kappa | max); otherwise "s_bar" means
/// fixed, and the default is kappa = 0.1.
inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  j.at("source").get_to(c.source);
  j.at("n").get_to(c.n);
  j.at("rates").get_to(c.rates);
  if (j.contains("ensemble_a")) j.at("ensemble_a").get_to(c.ensemble_a);
  if (j.contains("kind_b")) c.kind_b = parse_kind_b(j.at("kind_b").get<std::string>());
  if (c.kind_b == KindB::User) throw Error(ErrorCode::Parse, "sweeps draw B per trial; kind_b must be identity or normal");
  c.trials = j.value("trials", c.trials);
  c.master_seed = j.value("master_seed", c.master_seed);
  c.tols.budget = j.value("budget", c.tols.budget);
  c.tols.residual = j.value("residual_tol", c.tols.residual);
  c.tols.dedup = j.value("dedup_tol", c.tols.dedup);
  c.success_tol = j.value("success_tol", c.success_tol);

  const std::string mode = j.contains("s_bar_mode") ? j.at("s_bar_mode").get<std::string>()
                           : j.contains("s_bar")    ? "fixed"
                                                    : "kappa";
  if (mode == "fixed") {
    c.cap.kind = SupportCapRule::Kind::Fixed;
    c.cap.s_bar = j.at("s_bar").get<int>();
  } else if (mode == "kappa") {
    c.cap.kind = SupportCapRule::Kind::Kappa;
    c.cap.kappa = j.value("kappa", 0.1);
  } else if (mode == "max") {
    c.cap.kind = SupportCapRule::Kind::Max;
  } else {
    throw Error(ErrorCode::Parse, "unknown s_bar_mode '" + mode + "'");
  }
}

namespace detail {
inline std::string csv_optional(const std::optional<double>& v) { return v ? io::format_double(*v) : "NA"; }
}  // namespace detail

inline std::string records_csv(const std::vector<ExperimentRecord>& records) {
  std::ostringstream out;
  out << "n,ell,R,k,s_bar,trials,successes,error_rate,oracle_success,oracle_error_lb,seed,wall_time_ms\n";
  for (const auto& r : records) {
    out << r.n << ',' << r.ell << ',' << io::format_double(r.rate) << ',' << r.k << ',' << r.s_bar << ',' << r.trials
        << ',' << r.successes << ',' << detail::csv_optional(r.error_rate) << ','
        << detail::csv_optional(r.oracle_success) << ',' << io::format_double(r.oracle_error_lb) << ',' << r.seed
        << ',' << io::format_double(r.wall_time_ms) << '\n';
  }
  return out.str();
}

inline void to_json(nlohmann::json& j, const ExperimentRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j = {{"n", r.n},
       {"ell", r.ell},
       {"R", r.rate},
       {"k", r.k},
       {"s_bar", r.s_bar},
       {"trials", r.trials},
       {"successes", r.successes},
       {"error_rate", opt(r.error_rate)},
       {"oracle_success", opt(r.oracle_success)},
       {"oracle_error_lb", r.oracle_error_lb},
       {"seed", r.seed},
       {"wall_time_ms", r.wall_time_ms},
       {"budget_exceeded", r.budget_exceeded},
       {"skipped", r.skipped}};
}

enum class OutputFormat { Csv, Json };

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw Error(ErrorCode::Parse, "unknown format '" + s + "'");
}

inline std::string render_records(const std::vector<ExperimentRecord>& records, OutputFormat format) {
  if (records.empty()) throw Error(ErrorCode::Precondition, "emit_results: no records");
  if (format == OutputFormat::Csv) return records_csv(records);
  return nlohmann::json(records).dump(2) + "\n";
}

inline void emit_results(const std::vector<ExperimentRecord>& records, OutputFormat format, const std::string& path) {
  io::write_file(path, render_records(records, format));
}

}  // namespace mixsep

#endif  // MIXSEP_EXPERIMENTS_HPP
