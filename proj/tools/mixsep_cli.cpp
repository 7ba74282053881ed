// mixsep: command-line front end for the separation laboratory.
//
//   mixsep separate       --config instance.json
//   mixsep phase          --config sweep.json
//   mixsep boxdim         --points points.csv
//   mixsep concentration  [--config grid.json]
//   mixsep transversality --matrix A.csv --s 4 [--b B.csv]
//
// Global flags: --seed, --trials, --out, --format csv|json, --budget.
// Errors produce exit code 1 (2 for usage errors) and one JSON line on stderr.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixsep/mixsep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::uint64_t> budget;
  std::string out;
  std::string format = "json";
  bool timing = false;
};

void write_output(const GlobalOptions& g, const std::string& text) {
  if (g.out.empty() || g.out == "-")
    std::cout << text;
  else
    mixsep::io::write_file(g.out, text);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mixsep::Error(mixsep::ErrorCode::Io, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw mixsep::Error(mixsep::ErrorCode::Parse, path + ": " + e.what());
  }
}

std::string resolve(const std::string& base_file, const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base_file).parent_path() / p).string();
}

void require_json(const GlobalOptions& g, const char* command) {
  if (mixsep::parse_format(g.format) != mixsep::OutputFormat::Json)
    throw mixsep::Error(mixsep::ErrorCode::Precondition, std::string(command) + " only emits json");
}

Eigen::VectorXd to_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// separate ------------------------------------------------------------------

void run_separate(const GlobalOptions& g, const std::string& config_path) {
  require_json(g, "separate");
  const json cfg = load_json(config_path);
  const auto source = mixsep::validate_spec(cfg.at("source").get<mixsep::MixedSourceSpec>());
  const int n = cfg.at("n").get<int>();
  const int ell = cfg.contains("ell") ? cfg.at("ell").get<int>() : mixsep::split_point(source.lambda, n);
  const std::uint64_t seed = g.seed.value_or(cfg.value("seed", std::uint64_t{0}));

  mixsep::MeasurementSystem sys;
  if (cfg.contains("A_csv")) {
    Eigen::MatrixXd a = mixsep::io::read_matrix_csv(resolve(config_path, cfg.at("A_csv").get<std::string>()));
    Eigen::MatrixXd b;
    if (cfg.contains("B_csv")) {
      b = mixsep::io::read_matrix_csv(resolve(config_path, cfg.at("B_csv").get<std::string>()));
    } else {
      mixsep::Rng unused = mixsep::make_rng(seed);
      b = mixsep::build_B(mixsep::KindB::Identity, static_cast<int>(a.rows()), ell, unused);
    }
    sys = mixsep::make_system(std::move(a), std::move(b));
    if (sys.n != n || sys.ell != ell)
      throw mixsep::Error(mixsep::ErrorCode::DimensionMismatch, "separate: matrix shapes disagree with n and ell");
  } else {
    const auto ensemble = cfg.value("ensemble_a", json{{"kind", "normal"}}).get<mixsep::EnsembleA>();
    const auto kind_b = mixsep::parse_kind_b(cfg.value("kind_b", std::string("identity")));
    std::optional<Eigen::MatrixXd> user_b;
    if (kind_b == mixsep::KindB::User)
      user_b = mixsep::io::read_matrix_csv(resolve(config_path, cfg.at("B_csv").get<std::string>()));
    sys = mixsep::make_system(cfg.at("k").get<int>(), n, ell, ensemble, kind_b, seed, user_b);
  }

  Eigen::VectorXd w;
  if (cfg.contains("w")) {
    w = to_vector(cfg.at("w"));
  } else if (cfg.contains("x")) {
    w = mixsep::measure(sys, to_vector(cfg.at("x")));
  } else {
    mixsep::Rng rng = mixsep::make_rng(mixsep::derive_seed(seed, mixsep::stream::source));
    w = mixsep::measure(sys, mixsep::sample_source(source, n, rng));
  }

  mixsep::CandidateSet cand;
  cand.n = n;
  cand.ell = ell;
  cand.atoms1 = source.atoms1;
  cand.atoms2 = source.atoms2;
  cand.s_bar = cfg.contains("s_bar") ? cfg.at("s_bar").get<int>()
                                     : mixsep::support_cap(source, n, cfg.value("kappa", 0.1));

  mixsep::SeparationTolerances tols;
  tols.residual = cfg.value("residual_tol", tols.residual);
  tols.dedup = cfg.value("dedup_tol", tols.dedup);
  tols.budget = g.budget.value_or(cfg.value("budget", tols.budget));

  write_output(g, json(mixsep::separate(sys.H(), w, cand, tols)).dump(2) + "\n");
}

// phase ---------------------------------------------------------------------

void run_phase(const GlobalOptions& g, const std::string& config_path) {
  auto cfg = load_json(config_path).get<mixsep::ExperimentConfig>();
  if (g.seed) cfg.master_seed = *g.seed;
  if (g.trials) cfg.trials = *g.trials;
  if (g.budget) cfg.tols.budget = *g.budget;
  cfg.timing = g.timing;
  const auto records = mixsep::run_phase_sweep(cfg);
  const auto format = mixsep::parse_format(g.format);
  if (format == mixsep::OutputFormat::Csv) {
    write_output(g, mixsep::render_records(records, format));
  } else {
    write_output(g, json{{"config", cfg}, {"records", records}}.dump(2) + "\n");
  }
}

// boxdim --------------------------------------------------------------------

struct BoxdimOptions {
  std::string points;
  std::optional<double> eps0;
  int scales = 8;
  std::optional<int> fit_first;
  std::optional<int> fit_last;
};

void run_boxdim(const GlobalOptions& g, const BoxdimOptions& o) {
  require_json(g, "boxdim");
  const auto pts = mixsep::to_point_set(mixsep::io::read_points_csv(o.points));
  mixsep::ScaleSpec spec;
  spec.eps0 = o.eps0;
  spec.num_scales = o.scales;
  spec.fit_first = o.fit_first;
  spec.fit_last = o.fit_last;
  write_output(g, json(mixsep::estimate_dimension(pts, spec)).dump(2) + "\n");
}

// concentration -------------------------------------------------------------

std::vector<mixsep::BoundCell> load_grid(const std::string& path) {
  const json j = load_json(path);
  std::vector<mixsep::BoundCell> cells;
  for (const auto& c : j.at("cells")) {
    mixsep::BoundCell cell;
    cell.n = c.at("n").get<int>();
    cell.k = c.at("k").get<int>();
    cell.r = c.value("r", 1.0);
    cell.delta = c.at("delta").get<double>();
    cell.u = to_vector(c.at("u"));
    cell.v = c.contains("v") ? to_vector(c.at("v")) : Eigen::VectorXd::Zero(cell.k);
    cells.push_back(std::move(cell));
  }
  return cells;
}

void run_concentration(const GlobalOptions& g, const std::string& grid_path) {
  const auto cells = grid_path.empty() ? mixsep::default_lemma2_grid() : load_grid(grid_path);
  const auto reports = mixsep::check_lemma2(cells, g.trials.value_or(100000), g.seed.value_or(0));
  if (mixsep::parse_format(g.format) == mixsep::OutputFormat::Csv) {
    write_output(g, mixsep::bound_reports_csv(reports));
    return;
  }
  json arr = json::array();
  for (const auto& r : reports) {
    arr.push_back({{"n", r.n},
                   {"k", r.k},
                   {"r", r.r},
                   {"delta", r.delta},
                   {"u_norm", r.u.norm()},
                   {"empirical", r.empirical_prob},
                   {"stderr", r.stderr_},
                   {"bound", r.bound_value},
                   {"holds", r.holds}});
  }
  write_output(g, arr.dump(2) + "\n");
}

// transversality ------------------------------------------------------------

void run_transversality(const GlobalOptions& g, const std::string& matrix, const std::string& b_path, int s,
                        double tol) {
  require_json(g, "transversality");
  const auto a = mixsep::io::read_matrix_csv(matrix);
  const auto verdict = b_path.empty() ? mixsep::sparse_transversality(a, s, tol)
                                      : mixsep::mixed_transversality(a, mixsep::io::read_matrix_csv(b_path), s, tol);
  json out{{"s", s}, {"transversal", verdict.transversal}, {"subsets_checked", verdict.subsets_checked}};
  out["dependent_subset"] = verdict.dependent_subset.empty() ? json(nullptr) : json(verdict.dependent_subset);
  write_output(g, out.dump(2) + "\n");
}

void report_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed discrete-continuous signal separation laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master seed (u64)");
  app.add_option("--trials", g.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output path (default: stdout)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--budget", g.budget, "Separator budget (pattern-assignment pairs)");
  app.add_flag("--timing", g.timing, "Record wall time in sweep output (breaks byte-identical reruns)");

  std::string separate_cfg, phase_cfg, grid_cfg, matrix, b_path;
  BoxdimOptions box;
  int s = 0;
  double tol = mixsep::kFullRankTol;

  auto* sep = app.add_subcommand("separate", "Separate a single instance");
  sep->add_option("--config", separate_cfg, "Instance JSON")->required();

  auto* phase = app.add_subcommand("phase", "Phase-transition sweep over rates");
  phase->add_option("--config", phase_cfg, "Sweep JSON")->required();

  auto* bd = app.add_subcommand("boxdim", "Box-counting dimension of a point cloud");
  bd->add_option("--points", box.points, "Point CSV (one point per row)")->required();
  bd->add_option("--eps0", box.eps0, "Coarsest scale (default: diameter/4)");
  bd->add_option("--scales", box.scales, "Number of dyadic scales");
  bd->add_option("--fit-first", box.fit_first, "First scale index in the fit window");
  bd->add_option("--fit-last", box.fit_last, "Last scale index in the fit window");

  auto* conc = app.add_subcommand("concentration", "Small-ball bound check over a grid");
  conc->add_option("--config", grid_cfg, "Grid JSON (default: built-in 81-cell grid)");

  auto* tr = app.add_subcommand("transversality", "Column-subset rank test");
  tr->add_option("--matrix", matrix, "Matrix CSV")->required();
  tr->add_option("--s", s, "Subset size")->required();
  tr->add_option("--b", b_path, "Full-column-rank B CSV for the mixed test");
  tr->add_option("--tol", tol, "Relative singular value threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return 2;
  }

  try {
    if (*sep) run_separate(g, separate_cfg);
    if (*phase) run_phase(g, phase_cfg);
    if (*bd) run_boxdim(g, box);
    if (*conc) run_concentration(g, grid_cfg);
    if (*tr) run_transversality(g, matrix, b_path, s, tol);
  } catch (const mixsep::Error& e) {
    report_error(mixsep::to_string(e.code()), e.what());
    return 1;
  } catch (const json::exception& e) {
    report_error("parse", e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
  return 0;
}
