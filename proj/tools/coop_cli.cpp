// coop: simulate, fit and evaluate block models of sampled interaction networks.

#include "coop/bench.hpp"
#include "coop/io.hpp"
#include "coop/simulate.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace coop;
using nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output;
};

void emit(const Globals& g, const std::string& text) {
  if (g.output.empty() || g.output == "-") {
    std::cout << text;
    return;
  }
  const std::filesystem::path path(g.output);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
}

std::string format_binary(const BinaryMatrix& m, const CountMatrix& like) {
  return format_count_matrix(CountMatrix(m.cells().cast<std::int64_t>(), like.row_names(), like.col_names()));
}

json grid_json(const SelectionReport& report) {
  json cells = json::array();
  for (const auto& [key, fit] : report.grid) cells.push_back({{"q1", key.first}, {"q2", key.second}, {"icl", fit.icl}});
  json log = json::array();
  for (const auto& s : report.exploration_log) {
    log.push_back({{"q1", s.q1}, {"q2", s.q2}, {"trigger", to_string(s.trigger)}, {"icl", s.icl}, {"accepted", s.accepted}});
  }
  return {{"model", to_string(report.model)},
          {"best", {report.best.first, report.best.second}},
          {"grid", cells},
          {"exploration_log", log},
          {"best_fit", json::parse(format_fit(report.best_fit()))}};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block models for under-sampled bipartite interaction networks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "RNG seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--output,-o", g.output, "output file (directory for bench); stdout when omitted");

  // simulate
  auto* sim = app.add_subcommand("simulate", "draw a synthetic count matrix");
  std::string scenario = "three_block", truth_path;
  Index sim_n = 60;
  double sim_g = 600.0, sim_pi = 0.7;
  sim->add_option("--scenario", scenario)->check(CLI::IsMember({"three_block", "uniform"}))->capture_default_str();
  sim->add_option("--n", sim_n, "rows and columns")->capture_default_str();
  sim->add_option("--g", sim_g, "global sampling effort")->capture_default_str();
  sim->add_option("--pi", sim_pi, "connection probability of the uniform scenario")->capture_default_str();
  sim->add_option("--truth", truth_path, "write the latent support, labels and efforts as JSON");

  // fit
  auto* fit = app.add_subcommand("fit", "fit one model at fixed block numbers");
  std::string input, model_name = "coop", init_name = "hierarchical";
  int q1 = 3, q2 = 3;
  SemConfig sem;
  VemConfig vem;
  fit->add_option("--input,-i", input)->required()->check(CLI::ExistingFile);
  fit->add_option("--model", model_name)->check(CLI::IsMember({"coop", "lbm"}))->capture_default_str();
  fit->add_option("--q1", q1)->capture_default_str();
  fit->add_option("--q2", q2)->capture_default_str();
  fit->add_option("--burn-in", sem.burn_in)->capture_default_str();
  fit->add_option("--iters", sem.post_iter, "post-burn-in iterations")->capture_default_str();
  fit->add_option("--eps", sem.eps)->capture_default_str();
  fit->add_option("--restarts", sem.restarts)->capture_default_str();
  fit->add_option("--init", init_name)->check(CLI::IsMember({"hierarchical", "spectral", "kmeans"}))->capture_default_str();

  // select
  auto* sel = app.add_subcommand("select", "explore the block-number grid by ICL");
  SelectConfig select_cfg;
  std::string grid_csv;
  sel->add_option("--input,-i", input)->required()->check(CLI::ExistingFile);
  sel->add_option("--model", model_name)->check(CLI::IsMember({"coop", "lbm"}))->capture_default_str();
  sel->add_option("--q-max", select_cfg.q_max)->capture_default_str();
  sel->add_option("--patience", select_cfg.patience)->capture_default_str();
  sel->add_option("--restarts", select_cfg.sem.restarts)->capture_default_str();
  sel->add_option("--init", init_name)->check(CLI::IsMember({"hierarchical", "spectral", "kmeans"}))->capture_default_str();
  sel->add_option("--grid-csv", grid_csv, "also write (q1,q2,icl) rows here");

  // metrics
  auto* met = app.add_subcommand("metrics", "network and evaluation metrics as metric,value CSV");
  std::string fit_path, reference_path, which = "chao,connectivity,nodf,modularity";
  int mod_restarts = 10;
  met->add_option("--input,-i", input)->required()->check(CLI::ExistingFile);
  met->add_option("--fit", fit_path, "fit document (connectivity_coop, auc, ari)")->check(CLI::ExistingFile);
  met->add_option("--which", which, "subset of ari,auc,chao,connectivity,nodf,modularity")->capture_default_str();
  met->add_option("--reference", reference_path, "fit or truth document with row_labels/col_labels for ari")
      ->check(CLI::ExistingFile);
  met->add_option("--truth", truth_path, "latent support CSV for auc")->check(CLI::ExistingFile);
  met->add_option("--modularity-restarts", mod_restarts)->capture_default_str();

  // complete
  auto* com = app.add_subcommand("complete", "complete the observed support");
  int method = 2;
  std::int64_t n_miss = 0;
  com->add_option("--input,-i", input)->required()->check(CLI::ExistingFile);
  com->add_option("--fit", fit_path)->check(CLI::ExistingFile);
  com->add_option("--method", method, "1 LBM-weighted, 2 CoOP Bernoulli, 3 uniform")->check(CLI::Range(1, 3))->capture_default_str();
  com->add_option("--n-miss", n_miss, "cells to add for methods 1 and 3")->capture_default_str();

  // subsample
  auto* sub = app.add_subcommand("subsample", "thin a count matrix");
  std::string scheme = "multinomial";
  double fraction = 0.7;
  sub->add_option("--input,-i", input)->required()->check(CLI::ExistingFile);
  sub->add_option("--scheme", scheme)->check(CLI::IsMember({"multinomial", "binomial"}))->capture_default_str();
  sub->add_option("--fraction", fraction, "keep fraction or binomial p")->capture_default_str();

  // bench
  auto* ben = app.add_subcommand("bench", "simulation study and sub-sampling validation CSVs");
  std::string experiments = "ari_curve,auc_curve,connectivity_curve,nestedness_modularity";
  BenchConfig bench;
  Index bench_n = 60;
  bool full_scale = false;
  double p = 0.0, keep_lo = 0.6, keep_hi = 0.9, standin_g = 600.0;
  int sub_reps = 20;
  ben->add_option("--experiment", experiments, "comma-separated experiments")->capture_default_str();
  ben->add_option("--g-grid", bench.g_grid)->delimiter(',')->capture_default_str();
  ben->add_option("--replicates", bench.replicates)->capture_default_str();
  ben->add_option("--n", bench_n, "rows and columns of simulated networks")->capture_default_str();
  ben->add_flag("--full-scale", full_scale, "n=100, 10 replicates, G in {25,100,200,...,600}");
  ben->add_flag("--select", bench.plan.select, "explore block numbers instead of fixing them");
  ben->add_option("--q1", bench.plan.q1)->capture_default_str();
  ben->add_option("--q2", bench.plan.q2)->capture_default_str();
  ben->add_option("--restarts", bench.plan.sem.restarts)->capture_default_str();
  ben->add_option("--input,-i", input, "network for sub-sampling experiments (synthetic stand-in otherwise)")
      ->check(CLI::ExistingFile);
  ben->add_option("--standin-g", standin_g, "G of the synthetic stand-in network")->capture_default_str();
  ben->add_option("--p", p, "binomial keep probability (required for subsample_binomial)");
  ben->add_option("--keep-lo", keep_lo)->capture_default_str();
  ben->add_option("--keep-hi", keep_hi)->capture_default_str();
  ben->add_option("--sub-replicates", sub_reps)->capture_default_str();

  std::string active = "coop";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", e.what()}, {"kind", "usage"}}.dump() << '\n';
    return 2;
  }

  try {
    if (*sim) {
      active = "simulate";
      SimConfig cfg = scenario == "three_block" ? three_block_config(sim_n, sim_g, g.seed)
                                                : uniform_block_config(sim_n, sim_pi, sim_g, g.seed);
      const SimOutput out = simulate_coop(cfg);
      if (!truth_path.empty()) write_sim_truth(out, truth_path);
      emit(g, format_count_matrix(out.r));
    } else if (*fit) {
      active = "fit";
      const CountMatrix r = read_count_matrix(input);
      const InitMethod init = parse_init_method(init_name);
      FitResult result;
      if (parse_model_kind(model_name) == ModelKind::coop) {
        sem.seed = g.seed;
        sem.init = init;
        result = run_sem(r, q1, q2, sem);
      } else {
        const BinaryMatrix v = observed_support(r);
        const ClusteringPair start = init_clustering(v, q1, q2, init, g.seed);
        result = vem_fit(v, q1, q2, start.first, start.second, vem);
        result.seed = g.seed;
      }
      emit(g, format_fit(result));
    } else if (*sel) {
      active = "select";
      const CountMatrix r = read_count_matrix(input);
      select_cfg.seed = g.seed;
      select_cfg.threads = g.threads;
      select_cfg.init = parse_init_method(init_name);
      const SelectionReport report = explore(r, parse_model_kind(model_name), select_cfg);
      emit(g, grid_json(report).dump(2) + "\n");
      if (grid_csv.empty() && !g.output.empty() && g.output != "-") {
        grid_csv = std::filesystem::path(g.output).replace_extension(".grid.csv").string();
      }
      if (!grid_csv.empty()) {
        std::ofstream out(grid_csv);
        if (!out) throw Error(fmt::format("cannot write {}", grid_csv));
        out << "q1,q2,icl\n";
        for (const auto& [key, f] : report.grid) out << fmt::format("{},{},{:.10g}\n", key.first, key.second, f.icl);
      }
    } else if (*met) {
      active = "metrics";
      const CountMatrix r = read_count_matrix(input);
      const BinaryMatrix v = observed_support(r);
      std::optional<FitResult> model;
      if (!fit_path.empty()) model = read_fit(fit_path);
      std::string out = "metric,value\n";
      auto row = [&](const std::string& name, double value) { out += fmt::format("{},{:.10g}\n", name, value); };
      for (const std::string& m : split_list(which)) {
        if (m == "ari") {
          if (!model || reference_path.empty()) throw Error("ari needs --fit and --reference");
          std::ifstream in(reference_path);
          const json ref = json::parse(in);
          const auto z1 = ref.at("row_labels").get<std::vector<int>>();
          const auto z2 = ref.at("col_labels").get<std::vector<int>>();
          auto blocks = [](const std::vector<int>& z) { return z.empty() ? 1 : *std::max_element(z.begin(), z.end()); };
          row("ari_row", ari(model->row_clustering, Clustering::from_one_based(z1, blocks(z1))));
          row("ari_col", ari(model->col_clustering, Clustering::from_one_based(z2, blocks(z2))));
        } else if (m == "auc") {
          if (!model || truth_path.empty()) throw Error("auc needs --fit and --truth");
          const BinaryMatrix truth = observed_support(read_count_matrix(truth_path));
          if (truth.rows() != r.rows() || truth.cols() != r.cols()) throw Error("truth and input differ in shape");
          const MatrixXd score = model->missing_prob ? *model->missing_prob
                                 : model->model == ModelKind::coop ? coop_missing_prob(*model, r)
                                                                   : lbm_missing_prob(*model, v);
          std::vector<double> s;
          std::vector<int> labels;
          for (Index j = 0; j < r.cols(); ++j) {
            for (Index i = 0; i < r.rows(); ++i) {
              if (r(i, j) > 0) continue;
              s.push_back(score(i, j));
              labels.push_back(truth(i, j) ? 1 : 0);
            }
          }
          row("auc", auc(s, labels));
        } else if (m == "chao") {
          row("chao_coverage", chao_coverage(r));
        } else if (m == "connectivity") {
          row("connectivity_observed", v.density());
          row("connectivity_chao", connectivity_chao(v, chao_coverage(r)));
          if (model && model->model == ModelKind::coop) row("connectivity_coop", connectivity_coop(*model, r));
        } else if (m == "nodf") {
          row("nodf", nodf(v));
        } else if (m == "modularity") {
          row("modularity", bipartite_modularity(v, mod_restarts, g.seed).q);
        } else {
          throw Error(fmt::format("unknown metric '{}'", m));
        }
      }
      emit(g, out);
    } else if (*com) {
      active = "complete";
      const CountMatrix r = read_count_matrix(input);
      std::optional<FitResult> model;
      if (!fit_path.empty()) model = read_fit(fit_path);
      const CompletionMethod cm{parse_completion_kind(method), n_miss, g.seed};
      const BinaryMatrix out = complete_matrix(observed_support(r), cm, model ? &*model : nullptr);
      emit(g, format_binary(out, r));
    } else if (*sub) {
      active = "subsample";
      const CountMatrix r = read_count_matrix(input);
      emit(g, format_count_matrix(scheme == "multinomial" ? subsample_multinomial(r, fraction, g.seed)
                                                          : subsample_binomial(r, fraction, g.seed)));
    } else if (*ben) {
      active = "bench";
      bench.seed = g.seed;
      bench.threads = g.threads;
      bench.output_dir = g.output.empty() ? "bench_out" : g.output;
      bench.n1 = bench.n2 = bench_n;
      if (full_scale) {
        bench.n1 = bench.n2 = 100;
        bench.replicates = 10;
        bench.g_grid = {25, 100, 200, 300, 400, 500, 600};
      }
      bench.experiments.clear();
      for (const std::string& e : split_list(experiments)) bench.experiments.push_back(parse_experiment(e));
      for (const auto& path : bench_simulation_study(bench)) std::cout << path.string() << '\n';

      auto network = [&] {
        if (!input.empty()) return read_count_matrix(input);
        return simulate_coop(three_block_config(bench.n1, standin_g, g.seed)).r;
      };
      auto write = [&](const std::string& name, const std::string& text) {
        const auto path = bench.output_dir / name;
        std::filesystem::create_directories(bench.output_dir);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(fmt::format("cannot write {}", path.string()));
        out << text;
        std::cout << path.string() << '\n';
      };
      for (Experiment e : bench.experiments) {
        if (e == Experiment::subsample_binomial) {
          if (!(p > 0.0)) throw Error("subsample_binomial needs --p");
          const auto report = bench_subsample_binomial(network(), p, sub_reps, g.seed, bench.plan, g.threads);
          write("subsample_binomial.csv", format_subsample_csv(report, e));
        } else if (e == Experiment::subsample_multinomial) {
          const auto report =
              bench_subsample_multinomial(network(), keep_lo, keep_hi, sub_reps, g.seed, bench.plan, g.threads);
          write("subsample_multinomial.csv", format_subsample_csv(report, e));
          write("subsample_multinomial_coverage.csv", format_coverage_csv(report));
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}, {"kind", "runtime"}, {"command", active}}.dump() << '\n';
    return 1;
  }
  return 0;
}
