#include "ne/svd.hpp"

#include <functional>
#include <iostream>

namespace ne {

namespace {

using Eigen::MatrixXd;

struct LinOp {
  int64_t rows = 0;
  int64_t cols = 0;
  std::function<MatrixXd(const MatrixXd&)> mul;   // A  * X
  std::function<MatrixXd(const MatrixXd&)> tmul;  // A^T * X
};

MatrixXd thin_q(const MatrixXd& y) {
  Eigen::HouseholderQR<MatrixXd> qr(y);
  MatrixXd q = MatrixXd::Identity(y.rows(), y.cols());
  q = qr.householderQ() * q;
  return q;
}

DenseProjector rsvd(const LinOp& a, int32_t dim, uint64_t seed, int power_iterations) {
  if (dim < 1) fail("fit_projector: dim must be >= 1");
  const int64_t min_dim = std::min(a.rows, a.cols);
  int64_t requested = dim;
  if (requested > min_dim) {
    std::cerr << "warning: dim " << requested << " exceeds matrix rank bound " << min_dim
              << ", shrinking\n";
    requested = min_dim;
  }
  const int64_t block = std::min<int64_t>(min_dim, std::max<int64_t>(2 * requested, requested + 48));

  Rng rng(seed);
  MatrixXd omega(a.cols, block);
  for (int64_t i = 0; i < a.cols; ++i)
    for (int64_t j = 0; j < block; ++j) omega(i, j) = rng.normal();

  MatrixXd q = thin_q(a.mul(omega));
  for (int it = 0; it < power_iterations; ++it) {
    MatrixXd z = thin_q(a.tmul(q));
    q = thin_q(a.mul(z));
  }
  MatrixXd b = a.tmul(q).transpose();  // block x cols
  Eigen::BDCSVD<MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);

  const auto& sv = svd.singularValues();
  int32_t rank = 0;
  const double cutoff = sv.size() > 0 ? sv(0) * 1e-12 : 0.0;
  for (Eigen::Index i = 0; i < sv.size() && i < requested; ++i)
    if (sv(i) > cutoff) ++rank;
  if (rank == 0) fail("fit_projector: zero matrix");
  if (rank < dim)
    std::cerr << "warning: numerical rank " << rank << " below requested dim " << dim << "\n";

  DenseProjector proj;
  proj.dim = rank;
  proj.basis = svd.matrixV().leftCols(rank).transpose();  // rank x cols
  proj.singular_values.assign(sv.data(), sv.data() + rank);
  return proj;
}

}  // namespace

std::vector<float> DenseProjector::project(const SparseVec& v) const {
  std::vector<float> out(static_cast<size_t>(dim), 0.0f);
  for (const auto& [t, w] : v) {
    const double wd = w;
    for (int32_t r = 0; r < dim; ++r)
      out[static_cast<size_t>(r)] += static_cast<float>(basis(r, t) * wd);
  }
  return out;
}

DenseProjector fit_projector(const TfidfModel& m, const std::vector<IdSeq>& sources, int32_t dim,
                             uint64_t seed, int power_iterations) {
  if (sources.empty()) fail("fit_projector: empty corpus");
  std::vector<SparseVec> rows;
  rows.reserve(sources.size());
  for (const auto& s : sources) rows.push_back(tfidf_vector(m, s, true));

  LinOp op;
  op.rows = static_cast<int64_t>(rows.size());
  op.cols = m.vocab_size();
  op.mul = [&rows, &op](const MatrixXd& x) {
    MatrixXd y = MatrixXd::Zero(op.rows, x.cols());
    for (int64_t i = 0; i < op.rows; ++i)
      for (const auto& [t, w] : rows[static_cast<size_t>(i)])
        y.row(i) += static_cast<double>(w) * x.row(t);
    return y;
  };
  op.tmul = [&rows, &op](const MatrixXd& x) {
    MatrixXd y = MatrixXd::Zero(op.cols, x.cols());
    for (int64_t i = 0; i < op.rows; ++i)
      for (const auto& [t, w] : rows[static_cast<size_t>(i)])
        y.row(t) += static_cast<double>(w) * x.row(i);
    return y;
  };
  return rsvd(op, dim, seed, power_iterations);
}

DenseProjector randomized_svd(const Eigen::MatrixXd& a, int32_t dim, uint64_t seed,
                              int power_iterations) {
  LinOp op;
  op.rows = a.rows();
  op.cols = a.cols();
  op.mul = [&a](const MatrixXd& x) { return MatrixXd(a * x); };
  op.tmul = [&a](const MatrixXd& x) { return MatrixXd(a.transpose() * x); };
  return rsvd(op, dim, seed, power_iterations);
}

}  // namespace ne
