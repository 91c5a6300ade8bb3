#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "lockbif/block_sturm.hpp"
#include "lockbif/locked_algebra.hpp"
#include "lockbif/radial_operator.hpp"
#include "lockbif/scalar_problem.hpp"
#include "lockbif/types.hpp"

namespace lockbif {

/// A candidate solution (beta, u_1..u_n) of the coupled system.
template <typename Scalar>
struct SystemState {
  Scalar beta = 0;
  MultiField<Scalar> u;

  Index components() const { return u.cols(); }
  Scalar min_value() const { return u.minCoeff(); }
  bool positive() const { return u.size() > 0 && u.minCoeff() > 0; }
};

template <typename Scalar>
struct HessianSpectrum {
  std::vector<Scalar> eigenvalues;  // lowest `count`, ascending
  int morse_index = 0;              // eigenvalues < -zero_tol
  int kernel_dim = 0;               // |eigenvalue| <= zero_tol
  Scalar zero_tol = 0;
};

namespace detail {

template <typename Scalar>
void check_state(const SystemState<Scalar>& s, const CouplingSpec<Scalar>& c,
                 const SchrodingerOperator<Scalar>& op) {
  require(s.u.rows() == op.size() && s.u.cols() == c.n(), Errc::size_mismatch,
          "state must hold n fields on the grid");
}

}  // namespace detail

/// J = 1/2 sum ||u_j||_E^2 - 1/4 sum mu_j |u_j|_4^4 - beta/2 sum_{i<j} int u_i^2 u_j^2.
template <typename Scalar>
Scalar energy(const SystemState<Scalar>& s, const CouplingSpec<Scalar>& c,
              const SchrodingerOperator<Scalar>& op) {
  detail::check_state(s, c, op);
  const auto& omega = op.grid().weights;
  const Index n = c.n();
  const MultiField<Scalar> sq = s.u.cwiseProduct(s.u);
  Scalar quad = 0;
  Scalar quartic = 0;
  Scalar cross = 0;
  for (Index j = 0; j < n; ++j) {
    quad += op.energy_norm_sq(Vector<Scalar>(s.u.col(j)));
    quartic += c.mu(j) * omega.dot(sq.col(j).cwiseProduct(sq.col(j)));
    for (Index i = 0; i < j; ++i) cross += omega.dot(sq.col(i).cwiseProduct(sq.col(j)));
  }
  return quad / 2 - quartic / 4 - s.beta * cross / 2;
}

/// Component j: A u_j - mu_j u_j^3 - beta sum_{k != j} u_k^2 u_j.
template <typename Scalar>
MultiField<Scalar> system_residual(const SystemState<Scalar>& s, const CouplingSpec<Scalar>& c,
                                   const SchrodingerOperator<Scalar>& op) {
  detail::check_state(s, c, op);
  const MultiField<Scalar> sq = s.u.cwiseProduct(s.u);
  const Vector<Scalar> total = sq.rowwise().sum();
  MultiField<Scalar> out = op.apply(s.u);
  for (Index j = 0; j < c.n(); ++j) {
    const auto uj = s.u.col(j).array();
    out.col(j).array() -=
        c.mu(j) * uj * uj * uj + s.beta * (total.array() - sq.col(j).array()) * uj;
  }
  return out;
}

template <typename Scalar>
Scalar residual_norm(const SystemState<Scalar>& s, const CouplingSpec<Scalar>& c,
                     const SchrodingerOperator<Scalar>& op) {
  return weighted_norm(op.grid(), system_residual(s, c, op));
}

/// Node-local second-derivative blocks of the nonlinearity:
/// K_jj = 3 mu_j u_j^2 + beta sum_{k != j} u_k^2,  K_jk = 2 beta u_j u_k.
template <typename Scalar>
std::vector<Matrix<Scalar>> coupling_blocks(const MultiField<Scalar>& u,
                                            const CouplingSpec<Scalar>& c, Scalar beta) {
  const Index m = u.rows();
  const Index n = c.n();
  std::vector<Matrix<Scalar>> blocks(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    const Vector<Scalar> ui = u.row(i).transpose();
    Matrix<Scalar> k = (2 * beta) * ui * ui.transpose();
    const Scalar total = ui.squaredNorm();
    for (Index j = 0; j < n; ++j) {
      k(j, j) = 3 * c.mu(j) * ui(j) * ui(j) + beta * (total - ui(j) * ui(j));
    }
    blocks[static_cast<std::size_t>(i)] = std::move(k);
  }
  return blocks;
}

/// Component j: A phi_j - 3 mu_j u_j^2 phi_j - beta sum_{k != j}(u_k^2 phi_j + 2 u_k u_j phi_k).
template <typename Scalar>
MultiField<Scalar> hessian_apply(const SystemState<Scalar>& s, const CouplingSpec<Scalar>& c,
                                 const SchrodingerOperator<Scalar>& op,
                                 const MultiField<Scalar>& phi) {
  detail::check_state(s, c, op);
  require(phi.rows() == s.u.rows() && phi.cols() == s.u.cols(), Errc::size_mismatch,
          "hessian_apply direction");
  MultiField<Scalar> out = op.apply(phi);
  const auto blocks = coupling_blocks(s.u, c, s.beta);
  for (Index i = 0; i < phi.rows(); ++i) {
    out.row(i) -= (blocks[static_cast<std::size_t>(i)] * phi.row(i).transpose()).transpose();
  }
  return out;
}

/// The Hessian as a symmetric block-tridiagonal matrix (omega folded in).
template <typename Scalar>
BlockTridiagonal<Scalar> hessian_operator(const SystemState<Scalar>& s,
                                          const CouplingSpec<Scalar>& c,
                                          const SchrodingerOperator<Scalar>& op) {
  detail::check_state(s, c, op);
  return BlockTridiagonal<Scalar>(op.symmetrized(), coupling_blocks(s.u, c, s.beta));
}

template <typename Scalar>
HessianSpectrum<Scalar> spectrum_of(const BlockTridiagonal<Scalar>& h, Index count,
                                    Scalar zero_tol) {
  HessianSpectrum<Scalar> out;
  out.zero_tol = zero_tol;
  out.morse_index = static_cast<int>(h.count_below(-zero_tol));
  out.kernel_dim = static_cast<int>(h.count_below(zero_tol)) - out.morse_index;
  if (count > 0) {
    const Vector<Scalar> values = h.lowest_eigenvalues(count);
    out.eigenvalues.assign(values.data(), values.data() + values.size());
  }
  return out;
}

/// Lowest `count` Hessian eigenvalues plus the Morse index and kernel
/// dimension, both counted exactly by inertia at -zero_tol and +zero_tol.
template <typename Scalar>
HessianSpectrum<Scalar> hessian_spectrum(const SystemState<Scalar>& s,
                                         const CouplingSpec<Scalar>& c,
                                         const SchrodingerOperator<Scalar>& op, Index count,
                                         Scalar zero_tol = Scalar(1e-7)) {
  return spectrum_of(hessian_operator(s, c, op), count, zero_tol);
}

/// m(beta) = sum_{lambda_k < 3} n_k + (n - 1) sum_{lambda_k < f(beta)} n_k on the
/// locked branch over (beta_bar, mu_min).
///
/// Rotating by T(beta) splits the Hessian into A - 3 w^2 and n - 1 copies of
/// A - f(beta) w^2; the number of negative eigenvalues of A - c w^2 equals the
/// number of weighted eigenvalues below c.
template <typename Scalar>
int morse_index_formula(const CouplingSpec<Scalar>& c, Scalar beta,
                        const WeightedSpectrum<Scalar>& spectrum, Scalar rel_tol = Scalar(1e-9)) {
  require(!spectrum.near_three, Errc::degenerate_spectrum, "weighted eigenvalue 3 present");
  const Scalar f = eval_f(c, beta);
  require(beta < c.mu_min() && eval_g(c, beta) > 0, Errc::out_of_domain,
          "the formula covers (beta_bar, mu_min)");
  require(!spectrum.eigenvalues.empty() &&
              spectrum.eigenvalues.back() > std::max(Scalar(3), f),
          Errc::insufficient_spectrum, "spectrum does not reach max(3, f(beta))");
  int below_three = 0;
  int below_f = 0;
  for (std::size_t k = 0; k < spectrum.clusters(); ++k) {
    const Scalar lambda = spectrum.eigenvalues[k];
    require(std::abs(lambda - f) > rel_tol * lambda, Errc::at_bifurcation,
            "f(beta) coincides with a weighted eigenvalue");
    if (lambda < 3) below_three += spectrum.multiplicities[k];
    if (lambda < f) below_f += spectrum.multiplicities[k];
  }
  return below_three + static_cast<int>(c.n() - 1) * below_f;
}

/// omega-orthonormal basis of {phi : phi_j in V_k, sum_j gamma_j phi_j = 0}
/// built from b_j(beta_k) (x) psi, j = 2..n, psi in V_k.
template <typename Scalar>
std::vector<MultiField<Scalar>> kernel_basis_at_bif(const CouplingSpec<Scalar>& c, Scalar beta_k,
                                                    const MultiField<Scalar>& vk,
                                                    const RadialGrid<Scalar>& grid,
                                                    std::optional<int> expected_multiplicity = {}) {
  require(vk.cols() > 0 && vk.rows() == grid.size(), Errc::wrong_multiplicity,
          "eigenbasis must be non-empty and sized to the grid");
  require(!expected_multiplicity || *expected_multiplicity == vk.cols(), Errc::wrong_multiplicity,
          "eigenbasis size differs from n_k");
  const auto dec = eigen_C(c, beta_k);
  std::vector<MultiField<Scalar>> basis;
  for (Index p = 0; p < vk.cols(); ++p) {
    for (Index j = 0; j < dec.b_raw.cols(); ++j) {
      MultiField<Scalar> phi = vk.col(p) * dec.b_raw.col(j).transpose();
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : basis) phi -= weighted_inner(grid, q, phi) * q;
      }
      phi /= weighted_norm(grid, phi);
      basis.push_back(std::move(phi));
    }
  }
  return basis;
}

}  // namespace lockbif
