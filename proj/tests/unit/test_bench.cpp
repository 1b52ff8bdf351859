#include <doctest.h>

#include "coop/bench.hpp"
#include "coop/simulate.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace coop;

namespace {

FitPlan quick_plan() {
  FitPlan plan;
  plan.q1 = 2;
  plan.q2 = 2;
  plan.sem.burn_in = 8;
  plan.sem.post_iter = 8;
  plan.sem.restarts = 1;
  plan.vem.max_iter = 50;
  return plan;
}

BenchConfig quick_config() {
  BenchConfig c;
  c.experiments = {Experiment::ari_curve, Experiment::auc_curve, Experiment::connectivity_curve,
                   Experiment::nestedness_modularity};
  c.g_grid = {150.0, 400.0};
  c.replicates = 2;
  c.n1 = 20;
  c.n2 = 18;
  c.seed = 5;
  c.plan = quick_plan();
  c.modularity_restarts = 2;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("study records") {
  const BenchConfig c = quick_config();
  const std::vector<StudyRecord> recs = run_simulation_study(c);
  REQUIRE(recs.size() == 4);
  for (const StudyRecord& r : recs) {
    CHECK(r.ari_row_coop >= -1.0);
    CHECK(r.ari_row_coop <= 1.0);
    CHECK(r.ari_col_lbm >= -1.0);
    CHECK(r.ari_col_lbm <= 1.0);
    CHECK(r.auc_coop >= 0.0);
    CHECK(r.auc_coop <= 1.0);
    CHECK(r.auc_lbm >= 0.0);
    CHECK(r.auc_lbm <= 1.0);
    CHECK(r.has_structure);
    CHECK(r.conn_truth == doctest::Approx(5.0 / 9.0));
  }
  CHECK(recs[0].g == 150.0);
  CHECK(recs[3].g == 400.0);
  CHECK(recs[1].replicate == 1);

  BenchConfig threaded = c;
  threaded.threads = 3;
  const std::vector<StudyRecord> again = run_simulation_study(threaded);
  for (Experiment e : c.experiments) CHECK(format_study_csv(again, e) == format_study_csv(recs, e));
}

TEST_CASE("study CSV files") {
  const auto dir = std::filesystem::temp_directory_path() / "coop_bench_unit";
  std::filesystem::create_directories(dir);
  BenchConfig c = quick_config();
  c.output_dir = dir;
  const auto written = bench_simulation_study(c);
  REQUIRE(written.size() == 4);
  std::vector<std::string> first;
  for (const auto& p : written) {
    const std::string text = slurp(p);
    CHECK(lines(text) == 1 + c.g_grid.size() * static_cast<std::size_t>(c.replicates));
    CHECK(text.find("seed") != std::string::npos);
    first.push_back(text);
  }
  bench_simulation_study(c);
  for (std::size_t k = 0; k < written.size(); ++k) CHECK(slurp(written[k]) == first[k]);
  std::filesystem::remove_all(dir);

  c.experiments = {Experiment::subsample_binomial};
  CHECK(bench_simulation_study(c).empty());
  c.replicates = 0;
  CHECK_THROWS_AS(validate(c), Error);
  c.replicates = 1;
  c.g_grid.clear();
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("binomial sub-sampling validation") {
  const SimOutput s = simulate_coop(three_block_config(25, 200, 4));
  const CountMatrix before = s.r;
  CHECK_THROWS_AS(bench_subsample_binomial(s.r, 1.0, 2, 1, quick_plan()), Error);

  const SubsampleReport rep = bench_subsample_binomial(s.r, 0.6, 3, 1, quick_plan());
  CHECK(rep.records.size() + rep.skipped.size() == 3);
  for (const auto& r : rep.records) {
    CHECK(r.positives > 0);
    CHECK(r.negatives > 0);
    CHECK(r.fraction == 0.6);
  }
  CHECK(s.r.counts() == before.counts());
  CHECK(format_subsample_csv(rep, Experiment::subsample_binomial) ==
        format_subsample_csv(bench_subsample_binomial(s.r, 0.6, 3, 1, quick_plan(), 2), Experiment::subsample_binomial));

  // Counts so large that thinning never empties a cell: A and B share their
  // support, so there is nothing to predict.
  CountGrid big = (observed_support(s.r).cells().cast<std::int64_t>() * 1000).eval();
  const SubsampleReport same = bench_subsample_binomial(CountMatrix(big), 0.5, 2, 1, quick_plan());
  CHECK(same.records.empty());
  CHECK(same.skipped.size() == 2);
}

TEST_CASE("multinomial sub-sampling validation") {
  const SimOutput s = simulate_coop(three_block_config(25, 200, 4));
  const SubsampleReport rep = bench_subsample_multinomial(s.r, 0.5, 0.8, 3, 2, quick_plan());
  CHECK(rep.records.size() <= 3);
  CHECK(rep.records.size() + rep.skipped.size() == 3);
  for (const auto& r : rep.records) {
    CHECK(r.fraction >= 0.5);
    CHECK(r.fraction <= 0.8);
  }
  CHECK_FALSE(rep.coverage.empty());
  CHECK(lines(format_coverage_csv(rep)) == 1 + rep.coverage.size());

  const SubsampleReport all = bench_subsample_multinomial(s.r, 1.0, 1.0, 2, 2, quick_plan());
  CHECK(all.records.empty());
  CHECK(all.skipped.size() == 2);
  CHECK_THROWS_AS(bench_subsample_multinomial(s.r, 0.9, 0.5, 2, 2, quick_plan()), Error);
}

TEST_CASE("experiment names") {
  for (Experiment e : {Experiment::ari_curve, Experiment::auc_curve, Experiment::connectivity_curve,
                       Experiment::nestedness_modularity, Experiment::subsample_multinomial,
                       Experiment::subsample_binomial}) {
    CHECK(parse_experiment(to_string(e)) == e);
  }
  CHECK_THROWS_AS(parse_experiment("nope"), Error);
}

TEST_CASE("multinomial sub-sampling favours the corrected model") {
  const SimOutput s = simulate_coop(three_block_config(60, 600, 42));
  const SubsampleReport rep = bench_subsample_multinomial(s.r, 0.6, 0.9, 10, 1, FitPlan{});
  REQUIRE_FALSE(rep.records.empty());
  double c = 0.0, l = 0.0;
  for (const auto& r : rep.records) {
    c += r.auc_coop;
    l += r.auc_lbm;
  }
  CHECK(c > l);
}
