#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lockbif/types.hpp"

namespace lockbif {

/// Symmetric tridiagonal matrix: `diag` has size M, `off` has size M-1.
template <typename Scalar>
struct SymTridiagonal {
  Vector<Scalar> diag;
  Vector<Scalar> off;

  Index size() const { return diag.size(); }

  Vector<Scalar> apply(const Vector<Scalar>& x) const {
    const Index m = size();
    Vector<Scalar> y = diag.cwiseProduct(x);
    for (Index i = 0; i + 1 < m; ++i) {
      y(i) += off(i) * x(i + 1);
      y(i + 1) += off(i) * x(i);
    }
    return y;
  }
};

namespace detail {

template <typename Scalar>
Scalar pivot_floor(const SymTridiagonal<Scalar>& t) {
  Scalar scale = t.diag.cwiseAbs().maxCoeff();
  if (t.off.size() > 0) {
    scale = std::max(scale, Scalar(t.off.cwiseAbs().maxCoeff()));
  }
  return std::max(scale, Scalar(1)) * std::numeric_limits<Scalar>::min() /
         std::numeric_limits<Scalar>::epsilon();
}

}  // namespace detail

/// Number of eigenvalues of the pencil (T, diag(weight)) strictly below
/// `sigma`, by Sylvester's law of inertia on the LDL^T factorization of
/// T - sigma * diag(weight). An empty `weight` means the identity.
template <typename Scalar>
Index sturm_count(const SymTridiagonal<Scalar>& t, const Vector<Scalar>& weight, Scalar sigma) {
  const Index m = t.size();
  const bool weighted = weight.size() == m;
  const Scalar floor = detail::pivot_floor(t);
  Index negatives = 0;
  Scalar d = Scalar(1);
  for (Index i = 0; i < m; ++i) {
    const Scalar shift = weighted ? sigma * weight(i) : sigma;
    d = t.diag(i) - shift - (i > 0 ? t.off(i - 1) * t.off(i - 1) / d : Scalar(0));
    if (std::abs(d) < floor) {
      d = -floor;
    }
    if (d < 0) {
      ++negatives;
    }
  }
  return negatives;
}

/// Interval that contains the whole pencil spectrum (Gershgorin on the
/// diagonally rescaled matrix).
template <typename Scalar>
std::pair<Scalar, Scalar> pencil_bounds(const SymTridiagonal<Scalar>& t, const Vector<Scalar>& weight) {
  const Index m = t.size();
  const bool weighted = weight.size() == m;
  Scalar lo = std::numeric_limits<Scalar>::max();
  Scalar hi = std::numeric_limits<Scalar>::lowest();
  for (Index i = 0; i < m; ++i) {
    const Scalar wi = weighted ? weight(i) : Scalar(1);
    Scalar radius = 0;
    if (i > 0) {
      const Scalar wl = weighted ? weight(i - 1) : Scalar(1);
      radius += std::abs(t.off(i - 1)) / std::sqrt(wl * wi);
    }
    if (i + 1 < m) {
      const Scalar wr = weighted ? weight(i + 1) : Scalar(1);
      radius += std::abs(t.off(i)) / std::sqrt(wr * wi);
    }
    const Scalar center = t.diag(i) / wi;
    lo = std::min(lo, center - radius);
    hi = std::max(hi, center + radius);
  }
  return {lo, hi};
}

/// Generic bisection driver: lowest `count` eigenvalues of any symmetric
/// operator whose inertia is exposed through `count_below(sigma)`.
template <typename Scalar, typename CountFn>
Vector<Scalar> bisect_lowest(CountFn&& count_below, Scalar lo, Scalar hi, Index count) {
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar width = std::max(Scalar(1), std::max(std::abs(lo), std::abs(hi)));
  lo -= eps * width;
  hi += eps * width;
  Vector<Scalar> out(count);
  Scalar left = lo;
  for (Index k = 0; k < count; ++k) {
    Scalar a = left;
    Scalar b = hi;
    for (int it = 0; it < 400; ++it) {
      const Scalar mid = a + (b - a) / 2;
      const Scalar tol = 2 * eps * std::max(std::abs(a), std::abs(b)) +
                         std::numeric_limits<Scalar>::min();
      if (b - a <= tol || mid <= a || mid >= b) {
        break;
      }
      if (count_below(mid) > k) {
        b = mid;
      } else {
        a = mid;
      }
    }
    out(k) = a + (b - a) / 2;
    left = a;
  }
  return out;
}

/// Lowest `count` eigenvalues of the symmetric-definite pencil
/// T x = lambda diag(weight) x.
template <typename Scalar>
Vector<Scalar> pencil_eigenvalues(const SymTridiagonal<Scalar>& t, const Vector<Scalar>& weight,
                                  Index count) {
  require(count >= 0 && count <= t.size(), Errc::eigensolver_failure,
          "requested more eigenvalues than the matrix dimension");
  auto [lo, hi] = pencil_bounds(t, weight);
  return bisect_lowest<Scalar>([&](Scalar s) { return sturm_count(t, weight, s); }, lo, hi, count);
}

/// General tridiagonal solve with partial pivoting (LAPACK gtsv scheme).
/// `lower(i)` couples row i+1 to column i, `upper(i)` couples row i to i+1.
template <typename Scalar>
Vector<Scalar> solve_tridiagonal(Vector<Scalar> lower, Vector<Scalar> diag, Vector<Scalar> upper,
                                 Vector<Scalar> rhs) {
  const Index m = diag.size();
  require(rhs.size() == m && lower.size() == std::max<Index>(m - 1, 0) &&
              upper.size() == std::max<Index>(m - 1, 0),
          Errc::size_mismatch, "tridiagonal solve");
  Vector<Scalar> second = Vector<Scalar>::Zero(std::max<Index>(m - 2, 0));
  Scalar scale = diag.cwiseAbs().maxCoeff();
  const Scalar tiny = std::max(scale, Scalar(1)) * std::numeric_limits<Scalar>::epsilon() *
                      std::numeric_limits<Scalar>::epsilon();
  for (Index i = 0; i + 1 < m; ++i) {
    if (std::abs(diag(i)) >= std::abs(lower(i))) {
      if (std::abs(diag(i)) < tiny) {
        diag(i) = tiny;
      }
      const Scalar factor = lower(i) / diag(i);
      diag(i + 1) -= factor * upper(i);
      rhs(i + 1) -= factor * rhs(i);
      if (i + 2 < m) {
        second(i) = 0;
      }
    } else {
      // Swap rows i and i+1.
      const Scalar factor = diag(i) / lower(i);
      diag(i) = lower(i);
      const Scalar tmp = diag(i + 1);
      diag(i + 1) = upper(i) - factor * tmp;
      if (i + 2 < m) {
        second(i) = upper(i + 1);
        upper(i + 1) = -factor * second(i);
      }
      upper(i) = tmp;
      std::swap(rhs(i), rhs(i + 1));
      rhs(i + 1) -= factor * rhs(i);
    }
  }
  if (m > 0 && std::abs(diag(m - 1)) < tiny) {
    diag(m - 1) = tiny;
  }
  Vector<Scalar> x(m);
  for (Index i = m - 1; i >= 0; --i) {
    Scalar acc = rhs(i);
    if (i + 1 < m) acc -= upper(i) * x(i + 1);
    if (i + 2 < m) acc -= second(i) * x(i + 2);
    x(i) = acc / diag(i);
  }
  return x;
}

/// Eigenvectors of the pencil (T, diag(weight)) for the given eigenvalues by
/// inverse iteration. Vectors inside a cluster (consecutive entries of
/// `cluster_of` that agree) are re-orthogonalized in the weight-product.
/// Returned columns are normalized to x^T diag(weight) x = 1.
template <typename Scalar>
Matrix<Scalar> pencil_eigenvectors(const SymTridiagonal<Scalar>& t, const Vector<Scalar>& weight,
                                   const Vector<Scalar>& eigenvalues,
                                   const std::vector<Index>& cluster_of) {
  const Index m = t.size();
  const Index count = eigenvalues.size();
  const Vector<Scalar> wt = weight.size() == m ? weight : Vector<Scalar>::Ones(m);
  Matrix<Scalar> vecs(m, count);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (Index k = 0; k < count; ++k) {
    const Scalar lambda = eigenvalues(k);
    // Tiny shift off the eigenvalue keeps the factorization finite.
    const Scalar shift = lambda + 16 * eps * std::max(Scalar(1), std::abs(lambda));
    Vector<Scalar> diag = t.diag - shift * wt;
    Vector<Scalar> x(m);
    // Deterministic, non-symmetric start vector.
    for (Index i = 0; i < m; ++i) {
      x(i) = Scalar(1) + Scalar(0.1) * std::sin(Scalar(0.37) * Scalar(i + 1) + Scalar(k));
    }
    for (int it = 0; it < 4; ++it) {
      x = solve_tridiagonal<Scalar>(t.off, diag, t.off, wt.cwiseProduct(x));
      for (Index j = 0; j < k; ++j) {
        if (cluster_of[static_cast<std::size_t>(j)] == cluster_of[static_cast<std::size_t>(k)]) {
          const Scalar proj = (vecs.col(j).cwiseProduct(wt)).dot(x);
          x -= proj * vecs.col(j);
        }
      }
      x /= std::sqrt(x.cwiseProduct(wt).dot(x));
    }
    vecs.col(k) = x;
  }
  return vecs;
}

}  // namespace lockbif
