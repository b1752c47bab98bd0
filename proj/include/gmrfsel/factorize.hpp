#pragma once

#include <vector>

#include "gmrfsel/model.hpp"
#include "gmrfsel/tree_decomposition.hpp"

namespace gmrfsel {

enum class FactorMode { Gff, General };

// One symmetric factor per cluster; the factors sum to the model precision.
struct ClusterFactors {
  std::vector<SupportedMatrix> factors;

  SupportedMatrix sum() const;
};

// Gff mode hands each edge Laplacian to the first cluster covering the edge.
// General mode splits Lambda - lambda_min I into Cholesky outer products, each
// given to the top cluster of its pivot, then spreads lambda_min I over the
// clusters holding each vertex.
ClusterFactors factorize(const Model& model, const TreeDecomposition& td, FactorMode mode);

}  // namespace gmrfsel
