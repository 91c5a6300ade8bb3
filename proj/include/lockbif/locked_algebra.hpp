#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lockbif/scalar_problem.hpp"
#include "lockbif/types.hpp"

namespace lockbif {

/// Self-interaction strengths mu_1..mu_n > 0, in user order.
template <typename Scalar>
class CouplingSpec {
 public:
  CouplingSpec() = default;

  explicit CouplingSpec(Vector<Scalar> mu) : mu_(std::move(mu)) {
    require(mu_.size() >= 2, Errc::invalid_config, "at least two components required");
    require(mu_.minCoeff() > 0, Errc::invalid_config, "all mu_j must be positive");
  }

  static CouplingSpec from(const std::vector<double>& mu) {
    Vector<Scalar> v(static_cast<Index>(mu.size()));
    for (std::size_t i = 0; i < mu.size(); ++i) v(static_cast<Index>(i)) = Scalar(mu[i]);
    return CouplingSpec(std::move(v));
  }

  Index n() const { return mu_.size(); }
  const Vector<Scalar>& mu() const { return mu_; }
  Scalar mu(Index j) const { return mu_(j); }
  Scalar mu_min() const { return mu_.minCoeff(); }
  Scalar mu_max() const { return mu_.maxCoeff(); }

 private:
  Vector<Scalar> mu_;
};

/// g(beta) = 1 + beta * sum_k 1 / (mu_k - beta).
template <typename Scalar>
Scalar eval_g(const CouplingSpec<Scalar>& c, Scalar beta) {
  Scalar sum = 0;
  for (Index k = 0; k < c.n(); ++k) {
    require(c.mu(k) != beta, Errc::pole, "beta coincides with some mu_k");
    sum += Scalar(1) / (c.mu(k) - beta);
  }
  return Scalar(1) + beta * sum;
}

/// The unique root of g below mu_min; always negative.
template <typename Scalar>
Scalar beta_bar(const CouplingSpec<Scalar>& c) {
  Scalar lo = -1;
  while (eval_g(c, lo) >= 0) lo *= 2;
  Scalar hi = 0;
  for (int it = 0; it < 400; ++it) {
    const Scalar mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    if (eval_g(c, mid) < 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // Pick whichever endpoint has the smaller |g|.
  return std::abs(eval_g(c, lo)) < std::abs(eval_g(c, hi)) ? lo : hi;
}

/// The closed-form data of the locked branch: beta_bar and the admissible
/// parameter set (beta_bar, mu_min) U (mu_max, inf).
template <typename Scalar>
struct LockedBranchAlgebra {
  CouplingSpec<Scalar> coupling;
  Scalar beta_bar = 0;

  explicit LockedBranchAlgebra(CouplingSpec<Scalar> c)
      : coupling(std::move(c)), beta_bar(lockbif::beta_bar(coupling)) {}

  bool in_lower_interval(Scalar beta) const {
    return beta > beta_bar && beta < coupling.mu_min();
  }
  bool in_upper_interval(Scalar beta) const { return beta > coupling.mu_max(); }
  bool admissible(Scalar beta) const { return in_lower_interval(beta) || in_upper_interval(beta); }
};

template <typename Scalar>
struct LockedCoefficients {
  std::optional<Vector<Scalar>> gamma;  // (mu_j - beta)^(-1/2), only for beta < mu_min
  Vector<Scalar> alpha;                 // ((mu_j - beta) g(beta))^(-1/2)
};

template <typename Scalar>
void require_admissible(const CouplingSpec<Scalar>& c, Scalar beta) {
  // g is increasing below mu_min with its root at beta_bar.
  const bool lower = beta < c.mu_min() && eval_g(c, beta) > 0;
  const bool upper = beta > c.mu_max();
  require(lower || upper, Errc::out_of_domain,
          "beta must lie in (beta_bar, mu_min) or (mu_max, inf)");
}

template <typename Scalar>
Vector<Scalar> gammas(const CouplingSpec<Scalar>& c, Scalar beta) {
  require(beta < c.mu_min(), Errc::out_of_domain, "gamma_j requires beta < mu_min");
  return (c.mu().array() - beta).rsqrt().matrix();
}

template <typename Scalar>
LockedCoefficients<Scalar> gammas_alphas(const CouplingSpec<Scalar>& c, Scalar beta) {
  require_admissible(c, beta);
  const Scalar g = eval_g(c, beta);
  LockedCoefficients<Scalar> out;
  out.alpha = ((c.mu().array() - beta) * g).rsqrt().matrix();
  if (beta < c.mu_min()) out.gamma = gammas(c, beta);
  return out;
}

/// u_j = alpha_j(beta) w.
template <typename Scalar>
MultiField<Scalar> locked_solution(const Vector<Scalar>& w, const CouplingSpec<Scalar>& c,
                                   Scalar beta) {
  const Vector<Scalar> alpha = gammas_alphas(c, beta).alpha;
  return w * alpha.transpose();
}

/// Locked solutions at beta = mu_1 = ... = mu_n: alpha proportional to
/// `direction` with sum alpha_j^2 = 1 / mu.
template <typename Scalar>
MultiField<Scalar> locked_family_equal_mu(const Vector<Scalar>& w, const CouplingSpec<Scalar>& c,
                                          const Vector<Scalar>& direction) {
  require(c.mu_max() == c.mu_min(), Errc::unequal_mu, "all mu_j must coincide");
  require(direction.size() == c.n(), Errc::size_mismatch, "direction length must equal n");
  require(direction.minCoeff() > 0, Errc::nonpositive_direction, "direction must be positive");
  const Vector<Scalar> alpha = direction / (direction.norm() * std::sqrt(c.mu(0)));
  return w * alpha.transpose();
}

template <typename Scalar>
struct CouplingMatrices {
  Matrix<Scalar> C;
  Matrix<Scalar> D;
};

/// D_ij = beta gamma_i gamma_j (i != j), D_ii = mu_i gamma_i^2 and
/// C = I + (2 / g) D.
template <typename Scalar>
CouplingMatrices<Scalar> matrix_CD(const CouplingSpec<Scalar>& c, Scalar beta) {
  require(beta < c.mu_min() && eval_g(c, beta) > 0, Errc::out_of_domain,
          "C(beta) is formed on (beta_bar, mu_min)");
  const Vector<Scalar> gamma = gammas(c, beta);
  const Index n = c.n();
  CouplingMatrices<Scalar> out;
  out.D = beta * gamma * gamma.transpose();
  for (Index i = 0; i < n; ++i) out.D(i, i) = c.mu(i) / (c.mu(i) - beta);
  out.C = Matrix<Scalar>::Identity(n, n) + (Scalar(2) / eval_g(c, beta)) * out.D;
  return out;
}

/// f(beta) = 1 + 2 / g(beta).
template <typename Scalar>
Scalar eval_f(const CouplingSpec<Scalar>& c, Scalar beta) {
  const Scalar g = eval_g(c, beta);
  require(g != 0, Errc::pole, "f has a pole at beta_bar");
  return Scalar(1) + Scalar(2) / g;
}

/// Inverse of the decreasing bijection f : (beta_bar, mu_min) -> (1, inf).
template <typename Scalar>
Scalar f_inverse(const CouplingSpec<Scalar>& c, Scalar lambda, std::optional<Scalar> bbar = {}) {
  require(lambda > 1, Errc::lambda_not_above_one, "f takes values in (1, inf) only");
  Scalar lo = bbar ? *bbar : beta_bar(c);
  Scalar hi = c.mu_min();
  for (int it = 0; it < 400; ++it) {
    const Scalar mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    const Scalar g = eval_g(c, mid);
    // f(mid) > lambda  <=>  g(mid) < 2 / (lambda - 1)   (g > 0 on the interval)
    if (g <= 0 || Scalar(1) + Scalar(2) / g > lambda) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const Scalar flo = eval_g(c, lo) > 0 ? std::abs(eval_f(c, lo) - lambda)
                                       : std::numeric_limits<Scalar>::infinity();
  const Scalar fhi = hi < c.mu_min() ? std::abs(eval_f(c, hi) - lambda)
                                     : std::numeric_limits<Scalar>::infinity();
  return flo < fhi ? lo : hi;
}

/// Eigen-structure of C(beta): eigenvalue 3 on b_1 = gamma, f(beta) on its
/// orthogonal complement, and a rotation T with T^T C T = diag(3, f, ..., f).
template <typename Scalar>
struct SpectralDecompC {
  Scalar eigenvalue_3 = 3;
  Scalar f_value = 3;
  Vector<Scalar> b1;       // gamma(beta), unnormalized
  Matrix<Scalar> b_raw;    // columns b_2..b_n as in the closed form, unnormalized
  Matrix<Scalar> T;        // orthogonal, det +1, first column b1 / |b1|
  bool degenerate = false; // beta == 0: C = 3 I
};

template <typename Scalar>
SpectralDecompC<Scalar> eigen_C(const CouplingSpec<Scalar>& c, Scalar beta) {
  require(beta < c.mu_min() && eval_g(c, beta) > 0, Errc::out_of_domain,
          "C(beta) is diagonalized on (beta_bar, mu_min)");
  const Index n = c.n();
  SpectralDecompC<Scalar> out;
  out.f_value = eval_f(c, beta);
  out.b1 = gammas(c, beta);
  out.b_raw = Matrix<Scalar>::Zero(n, n - 1);
  for (Index j = 1; j < n; ++j) {
    out.b_raw(0, j - 1) = out.b1(j);
    out.b_raw(j, j - 1) = -out.b1(0);
  }
  if (beta == 0) {
    out.degenerate = true;
    out.T = Matrix<Scalar>::Identity(n, n);
    return out;
  }
  out.T.resize(n, n);
  out.T.col(0) = out.b1.normalized();
  const Scalar pivot_min = Scalar(1e-8);
  Index filled = 1;
  auto try_add = [&](Vector<Scalar> v) {
    for (Index k = 0; k < filled; ++k) v -= out.T.col(k).dot(v) * out.T.col(k);
    for (Index k = 0; k < filled; ++k) v -= out.T.col(k).dot(v) * out.T.col(k);
    const Scalar norm = v.norm();
    if (norm < pivot_min) return false;
    out.T.col(filled++) = v / norm;
    return true;
  };
  for (Index j = 0; j < n - 1 && filled < n; ++j) {
    try_add(out.b_raw.col(j));
  }
  // Seed fallback: coordinate vectors, rotated through the indices.
  for (Index s = 0; s < n && filled < n; ++s) {
    try_add(Vector<Scalar>::Unit(n, (s + 1) % n));
  }
  require(filled == n, Errc::eigensolver_failure, "could not complete the orthonormal basis");
  if (out.T.determinant() < 0) out.T.col(n - 1) = -out.T.col(n - 1);
  return out;
}

template <typename Scalar>
struct BifurcationPoint {
  int k = 0;
  Scalar lambda = 0;
  int multiplicity = 1;
  Scalar beta = 0;
  int kernel_dim = 0;
};

/// beta_k = f^{-1}(lambda_k) for k >= 2, sorted by decreasing beta.
template <typename Scalar>
std::vector<BifurcationPoint<Scalar>> bifurcation_points(const CouplingSpec<Scalar>& c,
                                                         const WeightedSpectrum<Scalar>& spectrum) {
  require(!spectrum.near_three, Errc::degenerate_spectrum,
          "weighted eigenvalue 3 present; the ground state is degenerate");
  const Scalar bbar = beta_bar(c);
  std::vector<BifurcationPoint<Scalar>> out;
  for (std::size_t k = 2; k <= spectrum.clusters(); ++k) {
    BifurcationPoint<Scalar> p;
    p.k = static_cast<int>(k);
    p.lambda = spectrum.lambda(k);
    p.multiplicity = spectrum.multiplicity(k);
    p.beta = f_inverse(c, p.lambda, std::optional<Scalar>(bbar));
    p.kernel_dim = static_cast<int>(c.n() - 1) * p.multiplicity;
    out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.beta > b.beta; });
  return out;
}

}  // namespace lockbif
