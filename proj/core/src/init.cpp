#include "coop/sem.hpp"

#include "cluster_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace coop {

namespace {

// Ward linkage via the Lance-Williams update. On binary profiles Manhattan
// distance equals squared Euclidean distance, so this is exact Ward.
std::vector<int> ward_cut(const MatrixXd& profiles, int q) {
  const Index n = profiles.rows();
  MatrixXd dist(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = a; b < n; ++b) {
      dist(a, b) = dist(b, a) = (profiles.row(a) - profiles.row(b)).cwiseAbs().sum();
    }
  }
  std::vector<Index> size(static_cast<std::size_t>(n), 1);
  std::vector<bool> active(static_cast<std::size_t>(n), true);
  std::vector<Index> owner(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) owner[static_cast<std::size_t>(i)] = i;

  for (Index clusters = n; clusters > q; --clusters) {
    Index best_a = -1, best_b = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index a = 0; a < n; ++a) {
      if (!active[static_cast<std::size_t>(a)]) continue;
      for (Index b = a + 1; b < n; ++b) {
        if (active[static_cast<std::size_t>(b)] && dist(a, b) < best) {
          best = dist(a, b);
          best_a = a;
          best_b = b;
        }
      }
    }
    const auto na = static_cast<double>(size[static_cast<std::size_t>(best_a)]);
    const auto nb = static_cast<double>(size[static_cast<std::size_t>(best_b)]);
    for (Index c = 0; c < n; ++c) {
      if (!active[static_cast<std::size_t>(c)] || c == best_a || c == best_b) continue;
      const auto nc = static_cast<double>(size[static_cast<std::size_t>(c)]);
      const double d = ((na + nc) * dist(best_a, c) + (nb + nc) * dist(best_b, c) - nc * best) /
                       (na + nb + nc);
      dist(best_a, c) = dist(c, best_a) = d;
    }
    size[static_cast<std::size_t>(best_a)] += size[static_cast<std::size_t>(best_b)];
    active[static_cast<std::size_t>(best_b)] = false;
    for (auto& o : owner) {
      if (o == best_b) o = best_a;
    }
  }

  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<Index> ids;
  for (Index i = 0; i < n; ++i) {
    const Index o = owner[static_cast<std::size_t>(i)];
    auto it = std::find(ids.begin(), ids.end(), o);
    if (it == ids.end()) {
      ids.push_back(o);
      it = ids.end() - 1;
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(it - ids.begin());
  }
  return labels;
}

struct KMeansRun {
  std::vector<int> labels;
  double inertia = 0.0;
};

KMeansRun lloyd(const MatrixXd& x, int q, Rng& rng) {
  const Index n = x.rows();
  MatrixXd centers(q, x.cols());
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // k-means++ seeding
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centers.row(0) = x.row(pick(rng));
  VectorXd d2(n);
  for (int c = 1; c < q; ++c) {
    for (Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < c; ++k) best = std::min(best, (x.row(i) - centers.row(k)).squaredNorm());
      d2(i) = best;
    }
    const double total = d2.sum();
    Index chosen = pick(rng);
    if (total > 0.0) {
      double u = unif(rng) * total;
      for (Index i = 0; i < n; ++i) {
        u -= d2(i);
        if (u < 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centers.row(c) = x.row(chosen);
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      int best_k = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < q; ++k) {
        const double d = (x.row(i) - centers.row(k)).squaredNorm();
        if (d < best) {
          best = d;
          best_k = k;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best_k) {
        labels[static_cast<std::size_t>(i)] = best_k;
        changed = true;
      }
    }
    MatrixXd sums = MatrixXd::Zero(q, x.cols());
    VectorXd counts = VectorXd::Zero(q);
    for (Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
      counts(labels[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (int k = 0; k < q; ++k) {
      if (counts(k) > 0.0) {
        centers.row(k) = sums.row(k) / counts(k);
        continue;
      }
      // Re-seed an empty cluster at the point farthest from its center.
      Index far = 0;
      double far_d = -1.0;
      for (Index i = 0; i < n; ++i) {
        const double d = (x.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      centers.row(k) = x.row(far);
      labels[static_cast<std::size_t>(far)] = k;
      changed = true;
    }
    if (!changed) break;
  }

  KMeansRun run{labels, 0.0};
  for (Index i = 0; i < n; ++i) {
    run.inertia += (x.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return run;
}

Clustering cluster_profiles(const MatrixXd& profiles, int q, InitMethod method, Rng& rng) {
  if (q == 1) return Clustering::single_block(profiles.rows());
  std::vector<int> labels = method == InitMethod::hierarchical ? ward_cut(profiles, q)
                                                               : detail::kmeans_labels(profiles, q, rng);
  return Clustering(std::move(labels), q).canonical();
}

}  // namespace

namespace detail {

std::vector<int> kmeans_labels(const MatrixXd& x, int q, Rng& rng, int n_init) {
  KMeansRun best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int t = 0; t < n_init; ++t) {
    KMeansRun run = lloyd(x, q, rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best.labels;
}

}  // namespace detail

const char* to_string(InitMethod method) {
  switch (method) {
    case InitMethod::hierarchical: return "hierarchical";
    case InitMethod::spectral: return "spectral";
    case InitMethod::kmeans: return "kmeans";
  }
  return "?";
}

InitMethod parse_init_method(const std::string& name) {
  if (name == "hierarchical") return InitMethod::hierarchical;
  if (name == "spectral") return InitMethod::spectral;
  if (name == "kmeans") return InitMethod::kmeans;
  throw Error(fmt::format("unknown initialization method '{}'", name));
}

ClusteringPair init_clustering(const BinaryMatrix& v, int q1, int q2, InitMethod method,
                               std::uint64_t seed) {
  if (q1 < 1 || q2 < 1) throw Error("block counts must be at least 1");
  if (q1 > v.rows() || q2 > v.cols()) {
    throw Error(fmt::format("cannot split {}x{} matrix into {}x{} blocks", v.rows(), v.cols(), q1, q2));
  }
  Rng rng = make_rng(seed, 0x494e4954);
  const MatrixXd x = v.as_double();

  if (method != InitMethod::spectral) {
    Clustering rows = cluster_profiles(x, q1, method, rng);
    Clustering cols = cluster_profiles(x.transpose(), q2, method, rng);
    return {std::move(rows), std::move(cols)};
  }

  const VectorXd d1 = x.rowwise().sum().cwiseMax(1.0).cwiseSqrt().cwiseInverse();
  const VectorXd d2 = x.colwise().sum().transpose().cwiseMax(1.0).cwiseSqrt().cwiseInverse();
  const MatrixXd a = d1.asDiagonal() * x * d2.asDiagonal();
  Eigen::BDCSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index k1 = std::min<Index>(q1, svd.matrixU().cols());
  const Index k2 = std::min<Index>(q2, svd.matrixV().cols());
  const MatrixXd row_embed = d1.asDiagonal() * svd.matrixU().leftCols(k1);
  const MatrixXd col_embed = d2.asDiagonal() * svd.matrixV().leftCols(k2);
  Clustering rows = cluster_profiles(row_embed, q1, method, rng);
  Clustering cols = cluster_profiles(col_embed, q2, method, rng);
  return {std::move(rows), std::move(cols)};
}

ClusteringPair init_clustering(const CountMatrix& r, int q1, int q2, InitMethod method,
                               std::uint64_t seed) {
  return init_clustering(observed_support(r), q1, q2, method, seed);
}

}  // namespace coop
