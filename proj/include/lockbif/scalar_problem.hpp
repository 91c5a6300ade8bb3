#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "lockbif/radial_operator.hpp"
#include "lockbif/tridiagonal.hpp"
#include "lockbif/types.hpp"

namespace lockbif {

struct GroundStateOptions {
  double tolerance = 1e-11;
  int max_iterations = 50;
  int max_halvings = 30;
  /// Half-width of the exclusion window around the weighted eigenvalue 3.
  double degeneracy_window = 1e-6;
};

/// Positive solution of -Delta w + a w = w^3.
template <typename Scalar>
struct GroundState {
  Vector<Scalar> w;
  Scalar residual_norm = 0;
  int iterations = 0;
  bool nondegenerate = false;
  /// sqrt of the omega-mass fraction on the outer 10% of the grid.
  Scalar tail_mass = 0;
};

template <typename Scalar>
Vector<Scalar> scalar_residual(const SchrodingerOperator<Scalar>& op, const Vector<Scalar>& w) {
  require(w.size() == op.size(), Errc::size_mismatch, "scalar_residual");
  return op.apply(w) - w.cwiseProduct(w).cwiseProduct(w);
}

/// Number of weighted eigenvalues (A psi = lambda w^2 psi) below `level`.
template <typename Scalar>
Index weighted_count_below(const SchrodingerOperator<Scalar>& op, const Vector<Scalar>& w,
                           Scalar level) {
  return sturm_count(op.symmetrized(), Vector<Scalar>(w.cwiseProduct(w)), level);
}

/// True when no weighted eigenvalue lies within `window` of 3.
template <typename Scalar>
bool is_nondegenerate(const SchrodingerOperator<Scalar>& op, const Vector<Scalar>& w,
                      double window = 1e-6) {
  return weighted_count_below(op, w, Scalar(3 + window)) ==
         weighted_count_below(op, w, Scalar(3 - window));
}

template <typename Scalar>
void require_nondegenerate(const GroundState<Scalar>& gs) {
  require(gs.nondegenerate, Errc::degenerate_ground_state,
          "a weighted eigenvalue of the ground state equals 3; bifurcation analysis refused");
}

namespace detail {

/// Galerkin-optimal multiple of the first eigenfunction of A.
template <typename Scalar>
Vector<Scalar> galerkin_guess(const SchrodingerOperator<Scalar>& op, Scalar& nu1) {
  const auto& sym = op.symmetrized();
  const Vector<Scalar> nu = pencil_eigenvalues(sym, Vector<Scalar>(), Index(1));
  nu1 = nu(0);
  const Matrix<Scalar> x = pencil_eigenvectors(sym, Vector<Scalar>(), nu, {0});
  const auto& grid = op.grid();
  Vector<Scalar> phi = x.col(0).cwiseQuotient(grid.weights.cwiseSqrt());
  if (phi.sum() < 0) phi = -phi;
  const Scalar quad = weighted_inner(grid, phi, phi);
  const Scalar quartic = (grid.weights.array() * phi.array().pow(4)).sum();
  return std::sqrt(nu(0) * quad / quartic) * phi;
}

template <typename Scalar>
bool newton_ground_state(const SchrodingerOperator<Scalar>& op, Vector<Scalar> w,
                         const GroundStateOptions& opts, GroundState<Scalar>& out, bool& lost) {
  const auto& grid = op.grid();
  Vector<Scalar> f = scalar_residual(op, w);
  Scalar norm = weighted_norm(grid, f);
  lost = false;
  for (int it = 0; it <= opts.max_iterations; ++it) {
    if (norm <= Scalar(opts.tolerance)) {
      out.w = std::move(w);
      out.residual_norm = norm;
      out.iterations = it;
      return true;
    }
    if (it == opts.max_iterations) break;
    const Vector<Scalar> jdiag = op.diagonal() - Scalar(3) * w.cwiseProduct(w);
    const Vector<Scalar> step = solve_tridiagonal<Scalar>(op.lower(), jdiag, op.upper(), -f);
    Scalar t = 1;
    bool accepted = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving, t /= 2) {
      Vector<Scalar> trial = w + t * step;
      if (trial.minCoeff() <= 0) continue;
      Vector<Scalar> ftrial = scalar_residual(op, trial);
      const Scalar ntrial = weighted_norm(grid, ftrial);
      if (ntrial < norm) {
        w = std::move(trial);
        f = std::move(ftrial);
        norm = ntrial;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      lost = (w + t * step).minCoeff() <= 0;
      break;
    }
  }
  out.w = std::move(w);
  out.residual_norm = norm;
  return false;
}

}  // namespace detail

/// Newton's method on F(w) = Aw - w^3 started from the Galerkin multiple of
/// the first eigenfunction of A, with backtracking on ||F||_omega that also
/// rejects non-positive iterates. If that fails, the start amplitude is
/// rescaled and Newton retried.
template <typename Scalar>
GroundState<Scalar> solve_ground_state(const SchrodingerOperator<Scalar>& op,
                                       const GroundStateOptions& opts = {}) {
  require_positive(op);
  Scalar nu1 = 0;
  const Vector<Scalar> guess = detail::galerkin_guess(op, nu1);
  GroundState<Scalar> gs;
  bool lost = false;
  bool any_lost = false;
  bool ok = false;
  for (double factor : std::array<double, 5>{1.0, 1.5, 0.75, 2.0, 0.5}) {
    ok = detail::newton_ground_state(op, Vector<Scalar>(Scalar(factor) * guess), opts, gs, lost);
    any_lost = any_lost || lost;
    // Any nontrivial solution has max w^2 >= nu_1 since <Aw, w> = sum omega w^4;
    // this rejects iterates that collapsed onto w = 0.
    ok = ok && gs.w.maxCoeff() >= std::sqrt(nu1) * Scalar(0.5);
    if (ok) break;
  }
  if (!ok) {
    throw Error(any_lost ? Errc::positivity_lost : Errc::no_convergence,
                "ground-state Newton iteration did not reach the residual tolerance");
  }
  gs.nondegenerate = is_nondegenerate(op, gs.w, opts.degeneracy_window);
  gs.tail_mass = tail_mass_fraction(op.grid(), gs.w);
  return gs;
}

/// Eigen-data of -Delta psi + a psi = lambda w^2 psi, grouped into clusters.
/// Basis vectors of each cluster are orthonormal in <u, v> = sum omega w^2 u v.
template <typename Scalar>
struct WeightedSpectrum {
  std::vector<Scalar> eigenvalues;          // lambda_k, one per cluster
  std::vector<int> multiplicities;          // n_k
  std::vector<MultiField<Scalar>> bases;    // V_k, columns are fields
  bool near_three = false;                  // some eigenvalue within the window of 3

  std::size_t clusters() const { return eigenvalues.size(); }
  /// 1-based cluster index, matching lambda_1 = 1.
  Scalar lambda(std::size_t k) const { return eigenvalues.at(k - 1); }
  int multiplicity(std::size_t k) const { return multiplicities.at(k - 1); }
  const MultiField<Scalar>& basis(std::size_t k) const { return bases.at(k - 1); }
};

template <typename Scalar>
WeightedSpectrum<Scalar> weighted_spectrum(const SchrodingerOperator<Scalar>& op,
                                           const GroundState<Scalar>& gs, Index kmax,
                                           double cluster_tol = 1e-7,
                                           double degeneracy_window = 1e-6) {
  require(kmax >= 2, Errc::eigensolver_failure, "kmax must be at least 2");
  require(gs.w.size() == op.size() && gs.w.minCoeff() > 0, Errc::size_mismatch,
          "ground state must be positive and sized to the grid");
  kmax = std::min(kmax, op.size());
  // A few extra eigenpairs so that the cluster starting at kmax-1 is complete.
  const Index total = std::min(kmax + 3, op.size());
  const auto& grid = op.grid();
  const Vector<Scalar> weight = gs.w.cwiseProduct(gs.w);
  const Vector<Scalar> values = pencil_eigenvalues(op.symmetrized(), weight, total);
  for (Index k = 0; k < total; ++k) {
    require(std::isfinite(static_cast<double>(values(k))), Errc::eigensolver_failure,
            "non-finite weighted eigenvalue");
  }

  std::vector<Index> cluster_of(static_cast<std::size_t>(total));
  Index cluster = 0;
  for (Index k = 0; k < total; ++k) {
    if (k > 0 && values(k) - values(k - 1) >
                     Scalar(cluster_tol) * std::max(Scalar(1), std::abs(values(k - 1)))) {
      ++cluster;
    }
    cluster_of[static_cast<std::size_t>(k)] = cluster;
  }
  const Matrix<Scalar> x = pencil_eigenvectors(op.symmetrized(), weight, values, cluster_of);
  const Vector<Scalar> unscale = grid.weights.cwiseSqrt().cwiseInverse();

  WeightedSpectrum<Scalar> out;
  Index start = 0;
  while (start < kmax) {
    Index stop = start;
    while (stop < total && cluster_of[static_cast<std::size_t>(stop)] ==
                               cluster_of[static_cast<std::size_t>(start)]) {
      ++stop;
    }
    // A cluster running into the end of the computed range may be truncated.
    if (stop == total && total < op.size()) break;
    const Index mult = stop - start;
    MultiField<Scalar> basis(op.size(), mult);
    for (Index c = 0; c < mult; ++c) {
      Vector<Scalar> psi = x.col(start + c).cwiseProduct(unscale);
      if (psi.sum() < 0) psi = -psi;
      basis.col(c) = psi;
    }
    out.eigenvalues.push_back(values.segment(start, mult).mean());
    out.multiplicities.push_back(static_cast<int>(mult));
    out.bases.push_back(std::move(basis));
    start = stop;
  }
  out.near_three = !is_nondegenerate(op, gs.w, degeneracy_window);
  return out;
}

}  // namespace lockbif
