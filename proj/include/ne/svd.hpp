#pragma once

#include <Eigen/Dense>

#include "ne/tfidf.hpp"

namespace ne {

// Projection onto the top right-singular subspace of the corpus tfidf matrix.
struct DenseProjector {
  Eigen::MatrixXd basis;  // dim x vocab_size
  std::vector<double> singular_values;
  int32_t dim = 0;

  std::vector<float> project(const SparseVec& v) const;
};

// Truncated SVD via randomized subspace iteration (seeded Gaussian test
// matrix, power iterations with re-orthonormalization). dim is shrunk with a
// warning when it exceeds the numerical rank.
DenseProjector fit_projector(const TfidfModel& m, const std::vector<IdSeq>& sources, int32_t dim,
                             uint64_t seed, int power_iterations = 8);

// Same algorithm on an explicit dense matrix; exposed for testing against a
// dense SVD oracle.
DenseProjector randomized_svd(const Eigen::MatrixXd& a, int32_t dim, uint64_t seed,
                              int power_iterations = 8);

}  // namespace ne
