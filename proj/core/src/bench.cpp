#include "coop/bench.hpp"

#include "coop/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

namespace coop {

namespace {

// Runs body(0..n-1) on up to `threads` workers. Output slots are indexed by
// task, so ordering never depends on scheduling.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body body) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t t = 0; t < n; ++t) body(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t t = next++; t < n; t = next++) {
        try {
          body(t);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t task_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng rng = make_rng(seed, 0x4245'4e43'0000'0000ULL + stream);
  return rng();
}

FitResult fit_coop(const CountMatrix& r, const FitPlan& plan, std::uint64_t seed) {
  if (plan.select) {
    SelectConfig cfg;
    cfg.q_max = plan.q_max;
    cfg.sem = plan.sem;
    cfg.vem = plan.vem;
    cfg.seed = seed;
    return explore(r, ModelKind::coop, cfg).best_fit();
  }
  SemConfig sem = plan.sem;
  sem.seed = seed;
  const int q1 = static_cast<int>(std::min<Index>(plan.q1, r.rows()));
  const int q2 = static_cast<int>(std::min<Index>(plan.q2, r.cols()));
  return run_sem(r, q1, q2, sem);
}

FitResult fit_lbm(const CountMatrix& r, const FitPlan& plan, std::uint64_t seed) {
  if (plan.select) {
    SelectConfig cfg;
    cfg.q_max = plan.q_max;
    cfg.sem = plan.sem;
    cfg.vem = plan.vem;
    cfg.seed = seed;
    return explore(r, ModelKind::lbm, cfg).best_fit();
  }
  const BinaryMatrix v = observed_support(r);
  const int q1 = static_cast<int>(std::min<Index>(plan.q1, v.rows()));
  const int q2 = static_cast<int>(std::min<Index>(plan.q2, v.cols()));
  const ClusteringPair init = init_clustering(v, q1, q2, plan.sem.init, seed);
  FitResult f = vem_fit(v, q1, q2, init.first, init.second, plan.vem);
  f.seed = seed;
  return f;
}

bool wants(const BenchConfig& config, Experiment e) {
  return std::find(config.experiments.begin(), config.experiments.end(), e) != config.experiments.end();
}

StudyRecord study_replicate(const BenchConfig& config, double g, int replicate, std::uint64_t seed) {
  SimConfig sim_config = three_block_config(config.n1, g, seed);
  sim_config.n2 = config.n2;
  const SimOutput sim = simulate_coop(sim_config);
  const CountMatrix& r = sim.r;
  const BinaryMatrix v = observed_support(r);

  const FitResult coop = fit_coop(r, config.plan, seed);
  const FitResult lbm = fit_lbm(r, config.plan, seed);

  StudyRecord rec;
  rec.g = g;
  rec.replicate = replicate;
  rec.seed = seed;
  rec.q1_coop = coop.q1();
  rec.q2_coop = coop.q2();
  rec.q1_lbm = lbm.q1();
  rec.q2_lbm = lbm.q2();
  rec.ari_row_coop = ari(coop.row_clustering, sim.true_z1);
  rec.ari_col_coop = ari(coop.col_clustering, sim.true_z2);
  rec.ari_row_lbm = ari(lbm.row_clustering, sim.true_z1);
  rec.ari_col_lbm = ari(lbm.col_clustering, sim.true_z2);
  rec.rmse_lambda = rmse(sim.true_lambda, coop.params.lambda);
  rec.rmse_mu = rmse(sim.true_mu, coop.params.mu);

  const MatrixXd p_coop = coop_missing_prob(coop, r);
  const MatrixXd p_lbm = lbm_missing_prob(lbm, v);
  std::vector<double> s_coop, s_lbm;
  std::vector<int> labels;
  for (Index j = 0; j < r.cols(); ++j) {
    for (Index i = 0; i < r.rows(); ++i) {
      if (r(i, j) > 0) continue;
      s_coop.push_back(p_coop(i, j));
      s_lbm.push_back(p_lbm(i, j));
      labels.push_back(sim.m(i, j) ? 1 : 0);
    }
  }
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  if (n_pos > 0 && n_pos < static_cast<std::ptrdiff_t>(labels.size())) {
    rec.auc_coop = auc(s_coop, labels);
    rec.auc_lbm = auc(s_lbm, labels);
  } else {
    rec.auc_coop = rec.auc_lbm = 0.5;
  }

  rec.conn_truth = sim_config.alpha.dot(sim_config.pi * sim_config.beta);
  rec.conn_m = sim.m.density();
  rec.conn_v = v.density();
  rec.conn_chao = connectivity_chao(v, chao_coverage(r));
  rec.conn_coop = p_coop.mean();

  if (wants(config, Experiment::nestedness_modularity)) {
    rec.has_structure = true;
    const std::int64_t zeros = v.rows() * v.cols() - v.ones();
    const std::int64_t n_miss = std::clamp<std::int64_t>(sim.m.ones() - v.ones(), 0, zeros);
    const BinaryMatrix c1 = complete_matrix(v, {CompletionKind::lbm_oracle_nmiss, n_miss, seed}, &lbm);
    const BinaryMatrix c2 = complete_matrix(v, {CompletionKind::coop_bernoulli, 0, seed}, &coop);
    const BinaryMatrix c3 = complete_matrix(v, {CompletionKind::uniform_nmiss, n_miss, seed}, nullptr);
    rec.nodf_m = nodf(sim.m);
    rec.nodf_v = nodf(v);
    rec.nodf_c1 = nodf(c1);
    rec.nodf_c2 = nodf(c2);
    rec.nodf_c3 = nodf(c3);
    const int restarts = config.modularity_restarts;
    rec.mod_m = bipartite_modularity(sim.m, restarts, seed).q;
    rec.mod_v = bipartite_modularity(v, restarts, seed).q;
    rec.mod_c1 = bipartite_modularity(c1, restarts, seed).q;
    rec.mod_c2 = bipartite_modularity(c2, restarts, seed).q;
    rec.mod_c3 = bipartite_modularity(c3, restarts, seed).q;
  }
  return rec;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
}

std::string num(double x) { return fmt::format("{:.10g}", x); }

struct Scores {
  std::vector<double> coop, lbm;
  std::vector<int> labels;
};

// Fits both models on `sub` (empty lines dropped) and collects scores over
// cells with zero sub-sampled count. `truth(i, j)` gives the positive label on
// original indices.
template <typename Truth, typename CoopScore>
std::optional<SubsampleRecord> score_subsample(const CountMatrix& r, const CountMatrix& sub,
                                               const FitPlan& plan, std::uint64_t seed, int replicate,
                                               Truth truth, CoopScore coop_score,
                                               std::vector<SpeciesCoverage>* coverage) {
  if (sub.total() == 0) return std::nullopt;
  const DropResult kept = drop_empty(sub);
  const CountMatrix& a = kept.matrix;
  if (a.rows() < 2 || a.cols() < 2) return std::nullopt;
  Scores s;
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      if (a(i, j) > 0) continue;
      s.labels.push_back(truth(kept.kept_rows[static_cast<std::size_t>(i)],
                               kept.kept_cols[static_cast<std::size_t>(j)]) ? 1 : 0);
    }
  }
  const auto pos = std::count(s.labels.begin(), s.labels.end(), 1);
  const auto neg = static_cast<std::ptrdiff_t>(s.labels.size()) - pos;
  if (pos == 0 || neg == 0) return std::nullopt;

  const FitResult coop = fit_coop(a, plan, seed);
  const FitResult lbm = fit_lbm(a, plan, seed);
  const BinaryMatrix va = observed_support(a);
  const MatrixXd p_coop = coop_score(coop, a);
  const MatrixXd p_lbm = lbm_missing_prob(lbm, va);
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      if (a(i, j) > 0) continue;
      s.coop.push_back(p_coop(i, j));
      s.lbm.push_back(p_lbm(i, j));
    }
  }

  SubsampleRecord rec;
  rec.replicate = replicate;
  rec.seed = seed;
  rec.positives = pos;
  rec.negatives = neg;
  rec.auc_coop = auc(s.coop, s.labels);
  rec.auc_lbm = auc(s.lbm, s.labels);

  if (coverage != nullptr) {
    const MatrixXd full_coop = coop_missing_prob(coop, a);
    for (Index i = 0; i < a.rows(); ++i) {
      const Index orig = kept.kept_rows[static_cast<std::size_t>(i)];
      coverage->push_back({replicate, seed, "row", r.row_names()[static_cast<std::size_t>(orig)],
                           (r.counts().row(orig).array() > 0).count(), va.cells().row(i).cast<Index>().sum(),
                           full_coop.row(i).sum(), p_lbm.row(i).sum()});
    }
    for (Index j = 0; j < a.cols(); ++j) {
      const Index orig = kept.kept_cols[static_cast<std::size_t>(j)];
      coverage->push_back({replicate, seed, "col", r.col_names()[static_cast<std::size_t>(orig)],
                           (r.counts().col(orig).array() > 0).count(), va.cells().col(j).cast<Index>().sum(),
                           full_coop.col(j).sum(), p_lbm.col(j).sum()});
    }
  }
  return rec;
}

void collect(SubsampleReport& report, std::vector<std::optional<SubsampleRecord>>& results,
             std::vector<std::vector<SpeciesCoverage>>& coverage, const char* name) {
  for (std::size_t t = 0; t < results.size(); ++t) {
    if (!results[t]) {
      report.skipped.push_back(static_cast<int>(t));
      fmt::print(stderr, "{}: replicate {} skipped (no positive or no negative cells)\n", name, t);
      continue;
    }
    report.records.push_back(*results[t]);
    report.coverage.insert(report.coverage.end(), coverage[t].begin(), coverage[t].end());
  }
}

}  // namespace

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::ari_curve: return "ari_curve";
    case Experiment::auc_curve: return "auc_curve";
    case Experiment::connectivity_curve: return "connectivity_curve";
    case Experiment::nestedness_modularity: return "nestedness_modularity";
    case Experiment::subsample_multinomial: return "subsample_multinomial";
    case Experiment::subsample_binomial: return "subsample_binomial";
  }
  return "?";
}

Experiment parse_experiment(const std::string& name) {
  for (Experiment e : {Experiment::ari_curve, Experiment::auc_curve, Experiment::connectivity_curve,
                       Experiment::nestedness_modularity, Experiment::subsample_multinomial,
                       Experiment::subsample_binomial}) {
    if (name == to_string(e)) return e;
  }
  throw Error(fmt::format("unknown experiment '{}'", name));
}

void validate(const BenchConfig& config) {
  if (config.replicates < 1) throw Error("replicates must be at least 1");
  if (config.g_grid.empty()) throw Error("g_grid must not be empty");
  for (double g : config.g_grid) {
    if (!(g > 0.0)) throw Error(fmt::format("G must be positive, got {}", g));
  }
  if (config.n1 < 3 || config.n2 < 3) throw Error("scale must be at least 3x3");
  validate(config.plan.sem);
}

std::vector<StudyRecord> run_simulation_study(const BenchConfig& config) {
  validate(config);
  const std::size_t reps = static_cast<std::size_t>(config.replicates);
  std::vector<StudyRecord> records(config.g_grid.size() * reps);
  parallel_for(records.size(), config.threads, [&](std::size_t t) {
    const std::size_t gi = t / reps;
    const int rep = static_cast<int>(t % reps);
    const std::uint64_t seed = task_seed(config.seed, t);
    records[t] = study_replicate(config, config.g_grid[gi], rep, seed);
  });
  return records;
}

std::string format_study_csv(const std::vector<StudyRecord>& records, Experiment e) {
  std::string out = "experiment,g,replicate,seed,";
  switch (e) {
    case Experiment::ari_curve:
      out += "q1_coop,q2_coop,q1_lbm,q2_lbm,ari_row_coop,ari_col_coop,ari_row_lbm,ari_col_lbm,rmse_lambda,rmse_mu\n";
      break;
    case Experiment::auc_curve: out += "auc_coop,auc_lbm\n"; break;
    case Experiment::connectivity_curve: out += "conn_truth,conn_m,conn_v,conn_chao,conn_coop\n"; break;
    case Experiment::nestedness_modularity:
      out += "nodf_m,nodf_v,nodf_c1,nodf_c2,nodf_c3,mod_m,mod_v,mod_c1,mod_c2,mod_c3\n";
      break;
    default: throw Error(fmt::format("{} is not a simulation-study experiment", to_string(e)));
  }
  for (const StudyRecord& r : records) {
    out += fmt::format("{},{},{},{},", to_string(e), num(r.g), r.replicate, r.seed);
    switch (e) {
      case Experiment::ari_curve:
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.q1_coop, r.q2_coop, r.q1_lbm, r.q2_lbm,
                           num(r.ari_row_coop), num(r.ari_col_coop), num(r.ari_row_lbm), num(r.ari_col_lbm),
                           num(r.rmse_lambda), num(r.rmse_mu));
        break;
      case Experiment::auc_curve: out += fmt::format("{},{}\n", num(r.auc_coop), num(r.auc_lbm)); break;
      case Experiment::connectivity_curve:
        out += fmt::format("{},{},{},{},{}\n", num(r.conn_truth), num(r.conn_m), num(r.conn_v), num(r.conn_chao),
                           num(r.conn_coop));
        break;
      default:
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", num(r.nodf_m), num(r.nodf_v), num(r.nodf_c1),
                           num(r.nodf_c2), num(r.nodf_c3), num(r.mod_m), num(r.mod_v), num(r.mod_c1),
                           num(r.mod_c2), num(r.mod_c3));
    }
  }
  return out;
}

std::vector<std::filesystem::path> bench_simulation_study(const BenchConfig& config) {
  const bool any = std::any_of(config.experiments.begin(), config.experiments.end(), [](Experiment e) {
    return e != Experiment::subsample_binomial && e != Experiment::subsample_multinomial;
  });
  if (!any) return {};
  const std::vector<StudyRecord> records = run_simulation_study(config);
  std::vector<std::filesystem::path> written;
  for (Experiment e : config.experiments) {
    if (e == Experiment::subsample_binomial || e == Experiment::subsample_multinomial) continue;
    const auto path = config.output_dir / fmt::format("{}.csv", to_string(e));
    write_text(path, format_study_csv(records, e));
    written.push_back(path);
  }
  return written;
}

SubsampleReport bench_subsample_binomial(const CountMatrix& r, double p, int replicates,
                                         std::uint64_t seed, const FitPlan& plan, int threads) {
  if (!(p > 0.0 && p < 1.0)) throw Error(fmt::format("p must lie in (0, 1), got {}", p));
  if (replicates < 1) throw Error("replicates must be at least 1");
  const auto n = static_cast<std::size_t>(replicates);
  std::vector<std::optional<SubsampleRecord>> results(n);
  std::vector<std::vector<SpeciesCoverage>> coverage(n);
  parallel_for(n, threads, [&](std::size_t t) {
    const std::uint64_t s = task_seed(seed, t);
    const CountMatrix a = subsample_binomial(r, p, make_rng(s, 1)());
    const CountMatrix b = subsample_binomial(r, p, make_rng(s, 2)());
    auto truth = [&](Index i, Index j) { return b(i, j) > 0; };
    auto score = [](const FitResult& f, const CountMatrix&) { return observed_missing_prob(f); };
    results[t] = score_subsample(r, a, plan, s, static_cast<int>(t), truth, score, nullptr);
    if (results[t]) results[t]->fraction = p;
  });
  SubsampleReport report;
  collect(report, results, coverage, "subsample_binomial");
  return report;
}

SubsampleReport bench_subsample_multinomial(const CountMatrix& r, double lo, double hi,
                                            int replicates, std::uint64_t seed,
                                            const FitPlan& plan, int threads) {
  if (!(lo > 0.0 && lo <= hi && hi <= 1.0)) {
    throw Error(fmt::format("keep range must satisfy 0 < lo <= hi <= 1, got ({}, {})", lo, hi));
  }
  if (replicates < 1) throw Error("replicates must be at least 1");
  const auto n = static_cast<std::size_t>(replicates);
  std::vector<std::optional<SubsampleRecord>> results(n);
  std::vector<std::vector<SpeciesCoverage>> coverage(n);
  parallel_for(n, threads, [&](std::size_t t) {
    const std::uint64_t s = task_seed(seed, t);
    Rng rng = make_rng(s, 3);
    const double keep = std::uniform_real_distribution<double>(lo, hi)(rng);
    // Keeping everything means there is nothing left to predict.
    const CountMatrix sub = keep >= 1.0 ? r : subsample_multinomial(r, keep, make_rng(s, 4)());
    auto truth = [&](Index i, Index j) { return r(i, j) > 0; };
    // P(M=1 | sub=0) times the chance the unsampled (1-f)/f share of the
    // effort observes the cell.
    auto score = [keep](const FitResult& f, const CountMatrix& a) {
      MatrixXd p = coop_missing_prob(f, a);
      for (Index j = 0; j < p.cols(); ++j) {
        for (Index i = 0; i < p.rows(); ++i) {
          if (a(i, j) == 0) p(i, j) *= -std::expm1(-f.params.rate(i, j) * (1.0 - keep) / keep);
        }
      }
      return p;
    };
    results[t] = score_subsample(r, sub, plan, s, static_cast<int>(t), truth, score, &coverage[t]);
    if (results[t]) results[t]->fraction = keep;
  });
  SubsampleReport report;
  collect(report, results, coverage, "subsample_multinomial");
  return report;
}

std::string format_subsample_csv(const SubsampleReport& report, Experiment e) {
  std::string out = "experiment,replicate,seed,fraction,positives,negatives,auc_coop,auc_lbm\n";
  for (const SubsampleRecord& r : report.records) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", to_string(e), r.replicate, r.seed, num(r.fraction),
                       r.positives, r.negatives, num(r.auc_coop), num(r.auc_lbm));
  }
  return out;
}

std::string format_coverage_csv(const SubsampleReport& report) {
  std::string out = "replicate,seed,side,species,original_degree,observed_degree,coop_degree,lbm_degree\n";
  for (const SpeciesCoverage& c : report.coverage) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", c.replicate, c.seed, c.side, c.species, c.original_degree,
                       c.observed_degree, num(c.coop_degree), num(c.lbm_degree));
  }
  return out;
}

}  // namespace coop
