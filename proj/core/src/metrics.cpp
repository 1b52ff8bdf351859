#include "coop/metrics.hpp"

#include "coop/sem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace coop {

namespace {

double choose2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

double ari(const Clustering& a, const Clustering& b) {
  if (a.size() != b.size()) {
    throw Error(fmt::format("ari: partitions have {} and {} nodes", a.size(), b.size()));
  }
  const Index n = a.size();
  if (n < 2) return 1.0;
  MatrixXd table = MatrixXd::Zero(a.n_blocks(), b.n_blocks());
  for (Index i = 0; i < n; ++i) table(a[i], b[i]) += 1.0;

  double index = 0.0;
  for (Index k = 0; k < table.size(); ++k) index += choose2(table.data()[k]);
  double sum_a = 0.0, sum_b = 0.0;
  for (Index k = 0; k < table.rows(); ++k) sum_a += choose2(table.row(k).sum());
  for (Index l = 0; l < table.cols(); ++l) sum_b += choose2(table.col(l).sum());
  const double expected = sum_a * sum_b / choose2(static_cast<double>(n));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return index == max_index ? 1.0 : 0.0;
  return (index - expected) / (max_index - expected);
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw Error("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });

  double rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t a = 0; a < n;) {
    std::size_t b = a;
    while (b < n && scores[order[b]] == scores[order[a]]) ++b;
    const double avg_rank = 0.5 * static_cast<double>(a + 1 + b);
    for (std::size_t c = a; c < b; ++c) {
      if (labels[order[c]] != 0) {
        rank_sum += avg_rank;
        n_pos += 1.0;
      }
    }
    a = b;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) throw Error("auc: both classes must be present");
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double chao_coverage(const CountMatrix& r) {
  const auto n = static_cast<double>(r.total());
  if (n <= 0.0) throw Error("chao_coverage: total count must be positive");
  double f1 = 0.0, f2 = 0.0;
  for (Index k = 0; k < r.counts().size(); ++k) {
    const std::int64_t x = r.counts().data()[k];
    f1 += x == 1;
    f2 += x == 2;
  }
  if (f1 == 0.0) return 1.0;
  return 1.0 - (f1 / n) * (f1 * (n - 1.0) / (f1 * (n - 1.0) + 2.0 * (f2 + 1.0)));
}

double connectivity_chao(const BinaryMatrix& v, double c_hat) {
  if (!(c_hat > 0.0)) throw Error("connectivity_chao: coverage must be positive");
  return static_cast<double>(v.ones()) / (static_cast<double>(v.rows() * v.cols()) * c_hat);
}

double connectivity_coop(const FitResult& result, const CountMatrix& r) {
  return coop_missing_prob(result, r).mean();
}

namespace {

// Sum of paired-overlap percentages over all pairs of rows of `x` (as 0/1).
double nodf_pairs(const MatrixXd& x) {
  const VectorXd totals = x.rowwise().sum();
  double sum = 0.0;
  for (Index a = 0; a < x.rows(); ++a) {
    for (Index b = a + 1; b < x.rows(); ++b) {
      if (totals(a) == totals(b)) continue;
      const Index rich = totals(a) > totals(b) ? a : b;
      const Index poor = rich == a ? b : a;
      if (totals(poor) == 0.0) continue;
      sum += x.row(rich).dot(x.row(poor)) / totals(poor);
    }
  }
  return sum;
}

}  // namespace

double nodf(const BinaryMatrix& v) {
  if (v.rows() < 2 || v.cols() < 2) throw Error("nodf: need at least 2 rows and 2 columns");
  const MatrixXd x = v.as_double();
  const double pairs = choose2(static_cast<double>(v.rows())) + choose2(static_cast<double>(v.cols()));
  return (nodf_pairs(x) + nodf_pairs(x.transpose())) / pairs;
}

CompletionKind parse_completion_kind(int kind) {
  if (kind < 1 || kind > 3) throw Error(fmt::format("unknown completion method {}", kind));
  return static_cast<CompletionKind>(kind);
}

BinaryMatrix complete_matrix(const BinaryMatrix& v, const CompletionMethod& method,
                             const FitResult* fit) {
  std::vector<std::pair<Index, Index>> zeros;
  for (Index j = 0; j < v.cols(); ++j) {
    for (Index i = 0; i < v.rows(); ++i) {
      if (!v(i, j)) zeros.emplace_back(i, j);
    }
  }
  BinaryGrid out = v.cells();
  Rng rng = make_rng(method.seed, 0x434d504c);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  if (method.kind != CompletionKind::uniform_nmiss && fit == nullptr) {
    throw Error("complete_matrix: this method needs a fitted model");
  }
  if (fit != nullptr && (fit->row_clustering.size() != v.rows() || fit->col_clustering.size() != v.cols())) {
    throw Error("complete_matrix: fit does not match the matrix dimensions");
  }

  if (method.kind == CompletionKind::coop_bernoulli) {
    const auto& p = fit->params;
    if (p.lambda.size() != v.rows() || p.mu.size() != v.cols()) {
      throw Error("complete_matrix: method 2 needs a CoOP fit");
    }
    for (const auto& [i, j] : zeros) {
      const double prob = imputation_probability(p.pi(fit->row_clustering[i], fit->col_clustering[j]), p.rate(i, j));
      if (unif(rng) < prob) out(i, j) = 1;
    }
    return BinaryMatrix(std::move(out));
  }

  if (method.n_miss < 0 || method.n_miss > static_cast<std::int64_t>(zeros.size())) {
    throw Error(fmt::format("complete_matrix: n_miss = {} but only {} zero cells", method.n_miss, zeros.size()));
  }
  // Weighted sampling without replacement: keep the n_miss largest log(u)/w.
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(zeros.size());
  for (std::size_t c = 0; c < zeros.size(); ++c) {
    double w = 1.0;
    if (method.kind == CompletionKind::lbm_oracle_nmiss) {
      w = fit->params.pi(fit->row_clustering[zeros[c].first], fit->col_clustering[zeros[c].second]);
    }
    const double u = unif(rng);
    keys.emplace_back(w > 0.0 ? std::log(u) / w : -std::numeric_limits<double>::infinity(), c);
  }
  const auto n = static_cast<std::size_t>(method.n_miss);
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n), keys.end(),
                    [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t c = 0; c < n; ++c) {
    const auto& [i, j] = zeros[keys[c].second];
    out(i, j) = 1;
  }
  return BinaryMatrix(std::move(out));
}

double rmse(const VectorXd& truth, const VectorXd& estimate) {
  if (truth.size() != estimate.size()) throw Error("rmse: vectors differ in length");
  if (truth.size() == 0) return 0.0;
  return std::sqrt((truth - estimate).squaredNorm() / static_cast<double>(truth.size()));
}

}  // namespace coop
