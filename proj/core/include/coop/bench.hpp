#pragma once

// Simulation study and sub-sampling validation harness. Everything is seeded
// per (G, replicate) so results do not depend on the thread count.

#include "coop/lbm.hpp"
#include "coop/metrics.hpp"
#include "coop/select.hpp"
#include "coop/sem.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace coop {

enum class Experiment {
  ari_curve,
  auc_curve,
  connectivity_curve,
  nestedness_modularity,
  subsample_multinomial,
  subsample_binomial,
};

const char* to_string(Experiment e);
Experiment parse_experiment(const std::string& name);

/// How both models are fitted inside the harness.
struct FitPlan {
  /// Explore the (Q1, Q2) grid instead of fitting at (q1, q2).
  bool select = false;
  int q1 = 3;
  int q2 = 3;
  int q_max = 6;
  SemConfig sem = [] {
    SemConfig s;
    s.restarts = 10;
    return s;
  }();
  VemConfig vem;
};

struct BenchConfig {
  std::vector<Experiment> experiments{Experiment::ari_curve, Experiment::auc_curve,
                                      Experiment::connectivity_curve,
                                      Experiment::nestedness_modularity};
  std::vector<double> g_grid{100.0, 300.0, 600.0};
  int replicates = 5;
  Index n1 = 60;
  Index n2 = 60;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = ".";
  FitPlan plan;
  int modularity_restarts = 10;
  int threads = 1;
};

void validate(const BenchConfig& config);

struct StudyRecord {
  double g = 0.0;
  int replicate = 0;
  std::uint64_t seed = 0;
  int q1_coop = 0, q2_coop = 0, q1_lbm = 0, q2_lbm = 0;

  double ari_row_coop = 0.0, ari_col_coop = 0.0;
  double ari_row_lbm = 0.0, ari_col_lbm = 0.0;
  double auc_coop = 0.0, auc_lbm = 0.0;
  double rmse_lambda = 0.0, rmse_mu = 0.0;

  double conn_truth = 0.0;  // αᵀπβ of the generating parameters
  double conn_m = 0.0;      // density of the latent support
  double conn_v = 0.0;      // density of the observed support
  double conn_chao = 0.0;
  double conn_coop = 0.0;

  // Filled only when nestedness_modularity is requested.
  bool has_structure = false;
  double nodf_m = 0.0, nodf_v = 0.0, nodf_c1 = 0.0, nodf_c2 = 0.0, nodf_c3 = 0.0;
  double mod_m = 0.0, mod_v = 0.0, mod_c1 = 0.0, mod_c2 = 0.0, mod_c3 = 0.0;
};

/// Runs the three-block simulation study and returns one record per
/// (G, replicate) in grid order.
std::vector<StudyRecord> run_simulation_study(const BenchConfig& config);

/// One CSV per requested simulation experiment, named `<experiment>.csv` in
/// `config.output_dir`. Returns the written paths.
std::vector<std::filesystem::path> bench_simulation_study(const BenchConfig& config);

struct SubsampleRecord {
  int replicate = 0;
  std::uint64_t seed = 0;
  double fraction = 0.0;  // p or the drawn keep fraction
  Index positives = 0;
  Index negatives = 0;
  double auc_coop = 0.0;
  double auc_lbm = 0.0;
};

/// Expected versus observed degree of one species after sub-sampling.
struct SpeciesCoverage {
  int replicate = 0;
  std::uint64_t seed = 0;
  std::string side;  // "row" or "col"
  std::string species;
  Index original_degree = 0;
  Index observed_degree = 0;
  double coop_degree = 0.0;
  double lbm_degree = 0.0;
};

struct SubsampleReport {
  std::vector<SubsampleRecord> records;  // skipped replicates are absent
  std::vector<SpeciesCoverage> coverage;
  std::vector<int> skipped;
};

/// Two independent Binomial(p) thinnings A and B per replicate; both models
/// are fitted on A and scored on cells with A = 0 (positive when B > 0).
SubsampleReport bench_subsample_binomial(const CountMatrix& r, double p, int replicates,
                                         std::uint64_t seed, const FitPlan& plan, int threads = 1);

/// Multinomial redraw with keep fraction ~ Uniform(lo, hi); scored on cells
/// with zero sub-sampled count (positive when the original count is positive).
SubsampleReport bench_subsample_multinomial(const CountMatrix& r, double lo, double hi,
                                            int replicates, std::uint64_t seed,
                                            const FitPlan& plan, int threads = 1);

std::string format_study_csv(const std::vector<StudyRecord>& records, Experiment e);
std::string format_subsample_csv(const SubsampleReport& report, Experiment e);
std::string format_coverage_csv(const SubsampleReport& report);

}  // namespace coop
