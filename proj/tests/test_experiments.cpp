#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mixsep/experiments.hpp"

using namespace mixsep;

namespace {

ExperimentConfig base_config() {
  ExperimentConfig cfg;
  cfg.source.lambda = 0.25;
  cfg.source.rho1 = 0.25;
  cfg.source.rho2 = 0.25;
  cfg.n = 12;
  cfg.cap.kind = SupportCapRule::Kind::Fixed;
  cfg.cap.s_bar = 3;
  cfg.rates = {0.5};
  cfg.trials = 40;
  cfg.master_seed = 11;
  cfg.threads = 1;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cells, DimensionsAndCaps) {
  auto cfg = base_config();
  cfg.rates = {0.0, 0.2, 0.5, 1.0};
  const auto cells = make_cells(cfg);
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0].k, 0);
  EXPECT_TRUE(cells[0].skipped);
  EXPECT_EQ(cells[1].k, 2);
  EXPECT_TRUE(cells[1].skipped);  // ell = 3 > k
  EXPECT_EQ(cells[2].k, 6);
  EXPECT_FALSE(cells[2].skipped);
  EXPECT_EQ(cells[3].k, 12);
  for (const auto& c : cells) EXPECT_EQ(c.ell, 3);

  cfg.cap.kind = SupportCapRule::Kind::Max;
  EXPECT_EQ(make_cells(cfg)[2].s_bar, 5);
  cfg.cap.kind = SupportCapRule::Kind::Kappa;
  cfg.cap.kappa = 0.125;
  EXPECT_EQ(make_cells(cfg)[2].s_bar, support_cap(cfg.source, 12, 0.125));
}

TEST(Trial, NoContinuousPartAlwaysSucceeds) {
  auto cfg = base_config();
  cfg.source.rho1 = cfg.source.rho2 = 0.0;
  cfg.cap.s_bar = 0;
  const auto rec = run_phase_sweep(cfg).front();
  EXPECT_EQ(rec.successes, cfg.trials);
  EXPECT_EQ(*rec.error_rate, 0.0);
  EXPECT_EQ(*rec.oracle_success, 1.0);
}

TEST(Trial, FullyContinuousBelowFullRateAlwaysFails) {
  auto cfg = base_config();
  cfg.source.rho1 = cfg.source.rho2 = 1.0;
  cfg.cap.s_bar = 5;
  const auto rec = run_phase_sweep(cfg).front();
  EXPECT_EQ(rec.successes, 0);
  EXPECT_EQ(*rec.error_rate, 1.0);
  EXPECT_DOUBLE_EQ(rec.oracle_error_lb, 1.0);
}

TEST(Trial, SkippedCellRejected) {
  auto cfg = base_config();
  cfg.rates = {0.1};
  const auto cell = make_cells(cfg).front();
  EXPECT_THROW(run_single_trial(cfg, cell, 1), Error);
  const auto rec = run_cell(cfg, cell);
  EXPECT_TRUE(rec.skipped);
  EXPECT_EQ(rec.trials, 0);
  EXPECT_FALSE(rec.error_rate.has_value());
}

TEST(Trial, BudgetExceededIsCountedSeparately) {
  auto cfg = base_config();
  cfg.tols.budget = 10;
  const auto rec = run_phase_sweep(cfg).front();
  EXPECT_EQ(rec.budget_exceeded, cfg.trials);
  EXPECT_EQ(rec.evaluated(), 0);
  EXPECT_FALSE(rec.error_rate.has_value());
}

TEST(Sweep, DeterministicAcrossThreadCounts) {
  auto cfg = base_config();
  cfg.rates = {0.25, 0.5, 0.75};
  const auto one = run_phase_sweep(cfg);
  cfg.threads = 3;
  const auto three = run_phase_sweep(cfg);
  EXPECT_EQ(records_csv(one), records_csv(three));
  EXPECT_EQ(records_csv(one), records_csv(run_phase_sweep(cfg)));
  cfg.master_seed = 12;
  EXPECT_NE(records_csv(one), records_csv(run_phase_sweep(cfg)));
}

TEST(Sweep, RecordInvariants) {
  auto cfg = base_config();
  cfg.cap.kind = SupportCapRule::Kind::Max;
  cfg.rates = {0.25, 0.4, 0.5, 0.6, 0.75, 0.9};
  for (const auto& r : run_phase_sweep(cfg)) {
    EXPECT_GE(r.successes, 0);
    EXPECT_LE(r.successes, r.trials);
    EXPECT_EQ(r.successes + r.errors + r.budget_exceeded, r.trials);
    ASSERT_TRUE(r.error_rate.has_value());
    EXPECT_GE(*r.error_rate, 0.0);
    EXPECT_LE(*r.error_rate, 1.0);
    EXPECT_GE(r.oracle_error_lb, 0.0);
    EXPECT_LE(r.oracle_error_lb, 1.0);
    ASSERT_TRUE(r.oracle_success.has_value());  // s_bar = k - 1 always qualifies
    EXPECT_EQ(r.seed, cfg.master_seed);
    EXPECT_EQ(r.wall_time_ms, 0.0);
  }
}

TEST(Predict, SuccessOracle) {
  auto cfg = base_config();
  cfg.n = 16;
  cfg.source.lambda = 7.0 / 16.0;
  cfg.source.rho1 = cfg.source.rho2 = 0.3;
  cfg.cap.s_bar = 6;
  cfg.rates = {7.0 / 16.0, 6.0 / 16.0};
  const auto cells = make_cells(cfg);
  EXPECT_NEAR(*predict_success(cfg, cells[0]), 0.8246866306931246, 1e-12);
  EXPECT_FALSE(predict_success(cfg, cells[1]).has_value());  // k = 6 < s_bar + 1
  EXPECT_NEAR(predict_error_lower_bound(cfg, cells[0]), 1.0 - support_cdf(support_size_distribution(cfg.source, 16), 7),
              1e-15);
}

TEST(ConfigJson, RoundTripAndCapModes) {
  auto cfg = base_config();
  cfg.rates = {0.25, 0.5};
  const nlohmann::json j = cfg;
  const auto back = j.get<ExperimentConfig>();
  EXPECT_EQ(nlohmann::json(back), j);

  auto k = nlohmann::json::parse(R"({"source":{"lambda":0.5,"rho1":0.1,"rho2":0.2},"n":10,"rates":[0.5]})");
  EXPECT_EQ(k.get<ExperimentConfig>().cap.kind, SupportCapRule::Kind::Kappa);
  k["s_bar_mode"] = "max";
  EXPECT_EQ(k.get<ExperimentConfig>().cap.kind, SupportCapRule::Kind::Max);
  k["s_bar_mode"] = "huge";
  EXPECT_THROW(k.get<ExperimentConfig>(), Error);
  k.erase("s_bar_mode");
  k["kind_b"] = "user";
  EXPECT_THROW(k.get<ExperimentConfig>(), Error);
}

TEST(ConfigValidation, Rejections) {
  auto cfg = base_config();
  cfg.rates = {0.5, 0.25};
  EXPECT_THROW(cfg.validate(), Error);
  cfg.rates = {};
  EXPECT_THROW(cfg.validate(), Error);
  cfg = base_config();
  cfg.cap.s_bar = 13;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = base_config();
  cfg.trials = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(EmitResults, EmptyListIsAnError) {
  EXPECT_THROW(render_records({}, OutputFormat::Csv), Error);
  EXPECT_THROW(render_records({}, OutputFormat::Json), Error);
}

TEST(EmitResults, CsvShape) {
  auto cfg = base_config();
  const auto recs = run_phase_sweep(cfg);
  const auto csv = render_records(recs, OutputFormat::Csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "n,ell,R,k,s_bar,trials,successes,error_rate,oracle_success,oracle_error_lb,seed,wall_time_ms");

  cfg.rates = {0.1};
  const auto skipped = render_records(run_phase_sweep(cfg), OutputFormat::Csv);
  EXPECT_NE(skipped.find(",NA,NA,"), std::string::npos);
  const auto js = nlohmann::json::parse(render_records(run_phase_sweep(cfg), OutputFormat::Json));
  EXPECT_TRUE(js[0].at("error_rate").is_null());
  EXPECT_TRUE(js[0].at("skipped").get<bool>());
}

TEST(EmitResults, ByteIdenticalFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "mixsep_emit_test";
  std::filesystem::create_directories(dir);
  const auto recs = run_phase_sweep(base_config());
  for (auto fmt : {OutputFormat::Csv, OutputFormat::Json}) {
    emit_results(recs, fmt, (dir / "a").string());
    emit_results(run_phase_sweep(base_config()), fmt, (dir / "b").string());
    EXPECT_EQ(slurp(dir / "a"), slurp(dir / "b"));
    EXPECT_FALSE(slurp(dir / "a").empty());
  }
  std::filesystem::remove_all(dir);
  EXPECT_THROW(emit_results(recs, OutputFormat::Csv, "/nonexistent-dir/x.csv"), Error);
}
