#include "coop/select.hpp"

#include "cluster_util.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>

#include <fmt/format.h>

namespace coop {

double coop_icl_penalty(int q1, int q2, Index n1, Index n2) {
  const double ln1 = std::log(static_cast<double>(n1));
  const double ln2 = std::log(static_cast<double>(n2));
  return 0.5 * (q1 - 1) * ln1 + 0.5 * (q2 - 1) * ln2 +
         0.5 * (static_cast<double>(q1 * q2) + static_cast<double>(n1 + n2) - 1.0) * (ln1 + ln2);
}

double lbm_icl_penalty(int q1, int q2, Index n1, Index n2) {
  const double ln1 = std::log(static_cast<double>(n1));
  const double ln2 = std::log(static_cast<double>(n2));
  return 0.5 * (q1 - 1) * ln1 + 0.5 * (q2 - 1) * ln2 + 0.5 * q1 * q2 * (ln1 + ln2);
}

CoopParams coop_icl_params(const FitResult& result, const CountMatrix& r) {
  const Clustering& z1 = result.row_clustering;
  const Clustering& z2 = result.col_clustering;
  const BinaryMatrix support = result.m_tilde ? *result.m_tilde : observed_support(r);

  CoopParams p;
  MixingProportions mix = mstep_mixing(z1, z2);
  p.alpha = std::move(mix.alpha);
  p.beta = std::move(mix.beta);
  p.pi = mstep_pi(support, z1, z2, result.params.pi).pi;
  EffortEstimate effort = fit_sampling_effort(r, support, 1e-8, 100);
  p.lambda = std::move(effort.lambda);
  p.mu = std::move(effort.mu);
  p.g = effort.g;
  return p;
}

double coop_icl(const FitResult& result, const CountMatrix& r) {
  const CoopParams p = coop_icl_params(result, r);
  return complete_loglik(r, result.row_clustering, result.col_clustering, p) -
         coop_icl_penalty(result.q1(), result.q2(), r.rows(), r.cols());
}

const char* to_string(Trigger trigger) {
  switch (trigger) {
    case Trigger::initial: return "initial";
    case Trigger::forward: return "forward";
    case Trigger::split: return "split";
    case Trigger::merge: return "merge";
  }
  return "?";
}

std::optional<Clustering> split_largest_block(const MatrixXd& data, const Clustering& z,
                                              const Clustering& other, std::uint64_t seed) {
  const std::vector<Index> sizes = z.block_sizes();
  const auto largest = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  if (sizes[static_cast<std::size_t>(largest)] < 2) return std::nullopt;

  const MatrixXd other_hot = other.one_hot();
  const VectorXd other_sizes = other_hot.colwise().sum().transpose().cwiseMax(1.0);
  std::vector<Index> members;
  for (Index i = 0; i < z.size(); ++i) {
    if (z[i] == largest) members.push_back(i);
  }
  MatrixXd profiles(static_cast<Index>(members.size()), other.n_blocks());
  for (std::size_t a = 0; a < members.size(); ++a) {
    profiles.row(static_cast<Index>(a)) =
        (data.row(members[a]) * other_hot).cwiseQuotient(other_sizes.transpose());
  }
  Rng rng = make_rng(seed, 0x53504c54);
  const std::vector<int> halves = detail::kmeans_labels(profiles, 2, rng);
  if (std::count(halves.begin(), halves.end(), 1) == 0 ||
      std::count(halves.begin(), halves.end(), 0) == 0) {
    return std::nullopt;
  }
  std::vector<int> labels = z.labels();
  for (std::size_t a = 0; a < members.size(); ++a) {
    if (halves[a] == 1) labels[static_cast<std::size_t>(members[a])] = z.n_blocks();
  }
  return Clustering(std::move(labels), z.n_blocks() + 1);
}

std::optional<Clustering> merge_closest_blocks(const MatrixXd& pi_rows, const Clustering& z) {
  const int q = z.n_blocks();
  if (q < 2) return std::nullopt;
  int keep = 0, drop = 1;
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < q; ++a) {
    for (int b = a + 1; b < q; ++b) {
      const double d = (pi_rows.row(a) - pi_rows.row(b)).cwiseAbs().sum();
      if (d < best) {
        best = d;
        keep = a;
        drop = b;
      }
    }
  }
  std::vector<int> labels = z.labels();
  for (int& l : labels) {
    if (l == drop) l = keep;
    else if (l > drop) --l;
  }
  return Clustering(std::move(labels), q - 1);
}

namespace {

struct Candidate {
  GridKey key;
  Trigger trigger;
  std::optional<ClusteringPair> init;
};

class Explorer {
 public:
  Explorer(const CountMatrix& r, ModelKind model, const SelectConfig& config)
      : r_(r), v_(observed_support(r)), model_(model), config_(config) {
    report_.model = model;
    if (model == ModelKind::coop) {
      data_ = r.counts().cast<double>();
    } else {
      data_ = v_.as_double();
    }
  }

  SelectionReport run() {
    forward();
    deepen();
    return std::move(report_);
  }

 private:
  FitResult fit(const Candidate& c) const {
    const auto [q1, q2] = c.key;
    if (model_ == ModelKind::coop) {
      SemConfig sem = config_.sem;
      sem.init = config_.init;
      sem.seed = config_.seed;
      return run_sem(r_, q1, q2, sem, c.init);
    }
    const ClusteringPair init = c.init ? *c.init : init_clustering(v_, q1, q2, config_.init, config_.seed);
    FitResult f = vem_fit(v_, q1, q2, init.first, init.second, config_.vem);
    f.seed = config_.seed;
    return f;
  }

  std::vector<FitResult> fit_all(const std::vector<Candidate>& cands) const {
    std::vector<FitResult> out;
    if (config_.threads > 1 && cands.size() > 1) {
      std::vector<std::future<FitResult>> futures;
      for (const auto& c : cands) futures.push_back(std::async(std::launch::async, [this, &c] { return fit(c); }));
      for (auto& f : futures) out.push_back(f.get());
    } else {
      for (const auto& c : cands) out.push_back(fit(c));
    }
    return out;
  }

  double best_icl() const { return report_.grid.at(report_.best).icl; }

  // Inserts or replaces a cell; returns whether the grid changed.
  bool offer(const Candidate& c, FitResult f) {
    ExplorationStep step{c.key.first, c.key.second, c.trigger, f.icl, false};
    auto it = report_.grid.find(c.key);
    if (it == report_.grid.end()) {
      report_.grid.emplace(c.key, std::move(f));
      step.accepted = true;
    } else if (f.icl > it->second.icl) {
      it->second = std::move(f);
      step.accepted = true;
    }
    report_.exploration_log.push_back(step);
    update_best();
    return step.accepted;
  }

  void update_best() {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& [key, f] : report_.grid) {
      if (f.icl > top) {
        top = f.icl;
        report_.best = key;
      }
    }
  }

  void forward() {
    Candidate start{{1, 1}, Trigger::initial, std::nullopt};
    offer(start, fit(start));
    GridKey cur{1, 1};
    int stale[2] = {0, 0};
    while (true) {
      std::vector<Candidate> cands;
      std::vector<int> dims;
      for (int d = 0; d < 2; ++d) {
        GridKey next = cur;
        (d == 0 ? next.first : next.second) += 1;
        const int q = d == 0 ? next.first : next.second;
        const Index n = d == 0 ? r_.rows() : r_.cols();
        if (stale[d] >= config_.patience || q > config_.q_max || q > n) continue;
        if (report_.grid.count(next)) continue;
        cands.push_back({next, Trigger::forward, std::nullopt});
        dims.push_back(d);
      }
      if (cands.empty()) break;
      const double before = best_icl();
      std::vector<FitResult> fits = fit_all(cands);
      std::size_t chosen = 0;
      for (std::size_t c = 0; c < cands.size(); ++c) {
        const int d = dims[c];
        stale[d] = fits[c].icl > before ? 0 : stale[d] + 1;
        if (fits[c].icl > fits[chosen].icl) chosen = c;
      }
      cur = cands[chosen].key;
      for (std::size_t c = 0; c < cands.size(); ++c) offer(cands[c], std::move(fits[c]));
    }
  }

  std::vector<Candidate> deepening_candidates() const {
    const auto [q1, q2] = report_.best;
    const FitResult& f = report_.grid.at(report_.best);
    std::vector<Candidate> cands;
    if (q1 + 1 <= config_.q_max && q1 + 1 <= r_.rows()) {
      if (auto rows = split_largest_block(data_, f.row_clustering, f.col_clustering, config_.seed)) {
        cands.push_back({{q1 + 1, q2}, Trigger::split, ClusteringPair{*rows, f.col_clustering}});
      }
    }
    if (q2 + 1 <= config_.q_max && q2 + 1 <= r_.cols()) {
      const MatrixXd data_t = data_.transpose();
      if (auto cols = split_largest_block(data_t, f.col_clustering, f.row_clustering, config_.seed)) {
        cands.push_back({{q1, q2 + 1}, Trigger::split, ClusteringPair{f.row_clustering, *cols}});
      }
    }
    if (auto rows = merge_closest_blocks(f.params.pi, f.row_clustering)) {
      cands.push_back({{q1 - 1, q2}, Trigger::merge, ClusteringPair{*rows, f.col_clustering}});
    }
    if (auto cols = merge_closest_blocks(f.params.pi.transpose(), f.col_clustering)) {
      cands.push_back({{q1, q2 - 1}, Trigger::merge, ClusteringPair{f.row_clustering, *cols}});
    }
    return cands;
  }

  void deepen() {
    for (int round = 0; round < config_.max_deepening_rounds; ++round) {
      const double before = best_icl();
      const std::vector<Candidate> cands = deepening_candidates();
      std::vector<FitResult> fits = fit_all(cands);
      for (std::size_t c = 0; c < cands.size(); ++c) offer(cands[c], std::move(fits[c]));
      if (!(best_icl() > before)) break;
    }
  }

  const CountMatrix& r_;
  BinaryMatrix v_;
  MatrixXd data_;
  ModelKind model_;
  SelectConfig config_;
  SelectionReport report_;
};

}  // namespace

SelectionReport explore(const CountMatrix& r, ModelKind model, const SelectConfig& config) {
  if (config.q_max < 1) throw Error("q_max must be at least 1");
  return Explorer(r, model, config).run();
}

}  // namespace coop
