#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lockbif/tridiagonal.hpp"
#include "lockbif/types.hpp"

namespace lockbif {

/// Symmetric block-tridiagonal operator S (x) I_p - blockdiag(K_1, ..., K_M)
/// in node-major ordering, where S is a scalar symmetric tridiagonal matrix
/// and each K_i is a symmetric p x p block. This is the shape of every
/// (reduced) Hessian once the omega-weight is folded into a congruence.
template <typename Scalar>
class BlockTridiagonal {
 public:
  BlockTridiagonal(SymTridiagonal<Scalar> s, std::vector<Matrix<Scalar>> blocks)
      : s_(std::move(s)), blocks_(std::move(blocks)) {
    require(static_cast<Index>(blocks_.size()) == s_.size() && !blocks_.empty(),
            Errc::size_mismatch, "one coupling block per node");
    p_ = blocks_.front().rows();
  }

  Index nodes() const { return s_.size(); }
  Index block_size() const { return p_; }
  Index dimension() const { return nodes() * p_; }

  /// y = (S (x) I - K) x with x stored as nodes x p.
  Matrix<Scalar> apply(const Matrix<Scalar>& x) const {
    const Index m = nodes();
    Matrix<Scalar> y(m, p_);
    for (Index i = 0; i < m; ++i) {
      y.row(i) = s_.diag(i) * x.row(i) - (blocks_[static_cast<std::size_t>(i)] * x.row(i).transpose()).transpose();
      if (i > 0) y.row(i) += s_.off(i - 1) * x.row(i - 1);
      if (i + 1 < m) y.row(i) += s_.off(i) * x.row(i + 1);
    }
    return y;
  }

  /// Number of eigenvalues strictly below sigma (block LDL^T inertia).
  Index count_below(Scalar sigma) const {
    const Index m = nodes();
    const Scalar floor = pivot_floor();
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(p_);
    Matrix<Scalar> inv_prev = Matrix<Scalar>::Zero(p_, p_);
    Matrix<Scalar> d(p_, p_);
    Index negatives = 0;
    for (Index i = 0; i < m; ++i) {
      d = -blocks_[static_cast<std::size_t>(i)];
      d.diagonal().array() += s_.diag(i) - sigma;
      if (i > 0) d -= (s_.off(i - 1) * s_.off(i - 1)) * inv_prev;
      eig.compute(d);
      Vector<Scalar> values = eig.eigenvalues();
      for (Index k = 0; k < p_; ++k) {
        if (std::abs(values(k)) < floor) values(k) = -floor;
        if (values(k) < 0) ++negatives;
      }
      inv_prev = eig.eigenvectors() * values.cwiseInverse().asDiagonal() *
                 eig.eigenvectors().transpose();
    }
    return negatives;
  }

  std::pair<Scalar, Scalar> gershgorin() const {
    Scalar lo = std::numeric_limits<Scalar>::max();
    Scalar hi = std::numeric_limits<Scalar>::lowest();
    const Index m = nodes();
    for (Index i = 0; i < m; ++i) {
      const auto& k = blocks_[static_cast<std::size_t>(i)];
      Scalar link = 0;
      if (i > 0) link += std::abs(s_.off(i - 1));
      if (i + 1 < m) link += std::abs(s_.off(i));
      for (Index r = 0; r < p_; ++r) {
        const Scalar center = s_.diag(i) - k(r, r);
        const Scalar radius = link + k.row(r).cwiseAbs().sum() - std::abs(k(r, r));
        lo = std::min(lo, center - radius);
        hi = std::max(hi, center + radius);
      }
    }
    return {lo, hi};
  }

  Vector<Scalar> lowest_eigenvalues(Index count) const {
    count = std::min(count, dimension());
    auto [lo, hi] = gershgorin();
    return bisect_lowest<Scalar>([this](Scalar s) { return count_below(s); }, lo, hi, count);
  }

  /// Dense matrix in node-major ordering; for tests and small problems.
  Matrix<Scalar> dense() const {
    const Index m = nodes();
    Matrix<Scalar> out = Matrix<Scalar>::Zero(dimension(), dimension());
    for (Index i = 0; i < m; ++i) {
      out.block(i * p_, i * p_, p_, p_) = -blocks_[static_cast<std::size_t>(i)];
      out.block(i * p_, i * p_, p_, p_).diagonal().array() += s_.diag(i);
      if (i + 1 < m) {
        out.block(i * p_, (i + 1) * p_, p_, p_).diagonal().setConstant(s_.off(i));
        out.block((i + 1) * p_, i * p_, p_, p_).diagonal().setConstant(s_.off(i));
      }
    }
    return out;
  }

 private:
  Scalar pivot_floor() const {
    Scalar scale = s_.diag.cwiseAbs().maxCoeff();
    for (const auto& k : blocks_) scale = std::max(scale, Scalar(k.cwiseAbs().maxCoeff()));
    return std::max(scale, Scalar(1)) * std::numeric_limits<Scalar>::min() /
           std::numeric_limits<Scalar>::epsilon();
  }

  SymTridiagonal<Scalar> s_;
  std::vector<Matrix<Scalar>> blocks_;
  Index p_ = 1;
};

}  // namespace lockbif
