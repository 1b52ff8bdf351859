#pragma once

#include "coop/net_core.hpp"

#include <vector>

namespace coop::detail {

/// Best of `n_init` k-means++ / Lloyd runs by inertia; labels in 0..q-1.
std::vector<int> kmeans_labels(const MatrixXd& x, int q, Rng& rng, int n_init = 5);

}  // namespace coop::detail
