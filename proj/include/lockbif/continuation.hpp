#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "lockbif/coupled_system.hpp"
#include "lockbif/locked_algebra.hpp"
#include "lockbif/partition.hpp"
#include "lockbif/scalar_problem.hpp"
#include "lockbif/types.hpp"

namespace lockbif {

struct ContinuationOpts {
  double ds0 = 0.05;
  double ds_min = 1e-5;
  double ds_max = 0.2;
  double newton_tol = 1e-10;
  int max_newton = 15;
  int max_steps = 40;
  /// Parameter window; unset means (beta_bar, mu_min) shrunk by `margin`.
  std::optional<double> beta_min;
  std::optional<double> beta_max;
  /// Relative margin, as a fraction of mu_min - beta_bar.
  double margin = 1e-3;
  double eps = 1e-2;
  /// Reduced Morse index every `morse_every` accepted points; 0 disables.
  int morse_every = 0;
};

inline void validate(const ContinuationOpts& o) {
  require(o.ds_min > 0 && o.ds_min <= o.ds0 && o.ds0 <= o.ds_max, Errc::invalid_config,
          "need 0 < ds_min <= ds0 <= ds_max");
  require(o.newton_tol > 0 && o.eps > 0 && o.margin > 0, Errc::invalid_config,
          "tolerances, eps and margin must be positive");
  require(o.max_newton > 0 && o.max_steps >= 0, Errc::invalid_config, "iteration limits");
}

enum class Termination { max_steps, beta_bound, positivity_lost, newton_failure, returned_to_locked };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::max_steps: return "max-steps";
    case Termination::beta_bound: return "beta-bound";
    case Termination::positivity_lost: return "positivity-lost";
    case Termination::newton_failure: return "newton-failure";
    case Termination::returned_to_locked: return "returned-to-locked";
  }
  return "unknown";
}

template <typename Scalar>
struct BranchOrigin {
  int k = 0;
  Scalar beta_k = 0;
  Scalar lambda_k = 0;
  int n_k = 1;
};

template <typename Scalar>
struct BranchPoint {
  Scalar beta = 0;
  MultiField<Scalar> u;
  Scalar s = 0;
  Scalar residual = 0;       // reduced residual, omega-norm
  Scalar full_residual = 0;  // residual of the embedded n-component state
  std::optional<int> morse_index;
  Scalar min_u = 0;
  Scalar dist_locked = 0;
};

template <typename Scalar>
struct Branch {
  std::vector<BranchPoint<Scalar>> points;
  Partition partition;
  BranchOrigin<Scalar> origin;
  int direction = 1;
  Termination termination = Termination::max_steps;
  /// Kernel direction chosen among several (n_k > 1).
  bool ambiguous = false;
};

/// Misfit of u from the set {(c_1 w, ..., c_n w)}: each component is replaced
/// by its best multiple of w.
template <typename Scalar>
Scalar distance_to_locked(const MultiField<Scalar>& u, const Vector<Scalar>& w,
                          const RadialGrid<Scalar>& grid) {
  const Scalar ww = weighted_inner(grid, w, w);
  Scalar sum = 0;
  for (Index j = 0; j < u.cols(); ++j) {
    const Vector<Scalar> uj = u.col(j);
    const Vector<Scalar> rest = uj - (weighted_inner(grid, uj, w) / ww) * w;
    sum += weighted_inner(grid, rest, rest);
  }
  return std::sqrt(sum);
}

template <typename Scalar>
std::pair<Scalar, Scalar> beta_window(const CouplingSpec<Scalar>& c, const ContinuationOpts& o) {
  const Scalar bbar = beta_bar(c);
  const Scalar margin = Scalar(o.margin) * (c.mu_min() - bbar);
  Scalar lo = o.beta_min ? Scalar(*o.beta_min) : bbar + margin;
  Scalar hi = o.beta_max ? Scalar(*o.beta_max) : c.mu_min() - margin;
  require(lo < hi && lo > bbar && hi < c.mu_min(), Errc::invalid_config,
          "continuation window must lie inside (beta_bar, mu_min)");
  return {lo, hi};
}

/// Points (beta, alpha(beta) w) of the locked branch, Morse-annotated by the
/// closed-form count wherever it applies.
template <typename Scalar>
Branch<Scalar> sample_locked_branch(const SchrodingerOperator<Scalar>& op,
                                    const GroundState<Scalar>& gs,
                                    const WeightedSpectrum<Scalar>& spectrum,
                                    const CouplingSpec<Scalar>& c, Scalar beta_lo, Scalar beta_hi,
                                    int samples) {
  require(samples >= 2, Errc::invalid_config, "need at least two samples");
  require_admissible(c, beta_lo);
  require_admissible(c, beta_hi);
  require((beta_hi <= c.mu_min()) == (beta_lo <= c.mu_min()), Errc::out_of_domain,
          "a sampled range must stay inside one admissible interval");
  Branch<Scalar> out;
  out.partition = Partition::single_block(c.n());
  const auto& grid = op.grid();
  for (int s = 0; s < samples; ++s) {
    const Scalar beta = beta_lo + (beta_hi - beta_lo) * Scalar(s) / Scalar(samples - 1);
    BranchPoint<Scalar> p;
    p.beta = beta;
    p.u = locked_solution(gs.w, c, beta);
    const SystemState<Scalar> st{beta, p.u};
    p.residual = residual_norm(st, c, op);
    p.full_residual = p.residual;
    p.min_u = p.u.minCoeff();
    p.dist_locked = 0;
    if (beta < c.mu_min()) {
      try {
        p.morse_index = morse_index_formula(c, beta, spectrum);
      } catch (const Error& e) {
        if (e.code() != Errc::at_bifurcation && e.code() != Errc::insufficient_spectrum) throw;
      }
    }
    if (!out.points.empty()) {
      const auto& prev = out.points.back();
      const Scalar du = weighted_norm(grid, MultiField<Scalar>(p.u - prev.u));
      p.s = prev.s + std::sqrt(du * du + (beta - prev.beta) * (beta - prev.beta));
    }
    out.points.push_back(std::move(p));
  }
  return out;
}

template <typename Scalar>
struct PlannedBifurcation {
  BifurcationPoint<Scalar> point;
  std::vector<Partition> partitions;
};

template <typename Scalar>
std::vector<PlannedBifurcation<Scalar>> plan_bifurcations(const GroundState<Scalar>& gs,
                                                          const CouplingSpec<Scalar>& c,
                                                          const WeightedSpectrum<Scalar>& spectrum) {
  require(gs.nondegenerate && !spectrum.near_three, Errc::degenerate_spectrum,
          "bifurcation planning needs a nondegenerate ground state");
  std::vector<PlannedBifurcation<Scalar>> out;
  for (const auto& bp : bifurcation_points(c, spectrum)) {
    out.push_back({bp, pair_partitions(c.n())});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.point.k < b.point.k; });
  return out;
}

template <typename Scalar>
struct Predictor {
  Partition partition;
  BranchOrigin<Scalar> origin;
  int direction = 1;
  Scalar eps = 0;
  Scalar beta = 0;
  MultiField<Scalar> locked;  // u(beta_k)
  MultiField<Scalar> phi;     // kernel direction in X^P, unit omega-norm
  MultiField<Scalar> u;       // locked + direction * eps * phi
  bool ambiguous = false;
};

/// Kick predictor u(beta_k) +- eps phi with phi in the kernel intersected
/// with X^P: phi = i^P(t psi) where psi in V_k and the block coefficients t
/// solve sum_b t_b sum_{j in b} gamma_j^2 / gamma_rep(b) = 0.
template <typename Scalar>
Predictor<Scalar> branch_switch_predictor(const Partition& p, const CouplingSpec<Scalar>& c,
                                          const GroundState<Scalar>& gs,
                                          const BifurcationPoint<Scalar>& bp,
                                          const MultiField<Scalar>& vk,
                                          const RadialGrid<Scalar>& grid, Scalar eps,
                                          int direction) {
  require(p.size() == 2 && p.n() == c.n(), Errc::not_pair_partition,
          "branch switching uses two-block partitions");
  require(eps > 0 && (direction == 1 || direction == -1), Errc::invalid_config,
          "eps > 0 and direction +-1");
  require(vk.cols() > 0 && vk.rows() == grid.size(), Errc::empty_kernel, "empty eigenbasis");
  const Vector<Scalar> gamma = gammas(c, bp.beta);
  Vector<Scalar> weight = Vector<Scalar>::Zero(2);
  for (Index j = 0; j < c.n(); ++j) {
    const Index b = p.block_of(j);
    weight(b) += gamma(j) * gamma(j) / gamma(p.representative(b));
  }
  Vector<Scalar> t(2);
  t << weight(1), -weight(0);
  const Vector<Scalar> rho = embedding_ratios(p, c, bp.beta);
  Vector<Scalar> coeff(c.n());
  for (Index j = 0; j < c.n(); ++j) coeff(j) = t(p.block_of(j)) * rho(j);

  Predictor<Scalar> out;
  out.partition = p;
  out.origin = {bp.k, bp.beta, bp.lambda, bp.multiplicity};
  out.direction = direction;
  out.eps = eps;
  out.beta = bp.beta;
  out.ambiguous = vk.cols() > 1;
  out.phi = vk.col(0) * coeff.transpose();
  const Scalar norm = weighted_norm(grid, out.phi);
  require(norm > 0 && std::isfinite(static_cast<double>(norm)), Errc::empty_kernel,
          "kernel direction vanished");
  out.phi /= norm;
  out.locked = locked_solution(gs.w, c, bp.beta);
  out.u = out.locked + Scalar(direction) * eps * out.phi;
  return out;
}

namespace detail {

/// Newton corrector for the reduced system R(v, beta) = 0 bordered by one
/// linear constraint <c_v, v>_nodal + c_beta beta = rhs.
template <typename Scalar>
class ReducedCorrector {
 public:
  ReducedCorrector(const Partition& p, const CouplingSpec<Scalar>& c,
                   const SchrodingerOperator<Scalar>& op)
      : p_(p), c_(c), op_(op) {}

  struct Result {
    bool converged = false;
    int iterations = 0;
    ReducedState<Scalar> state;
    Scalar residual = 0;
  };

  Scalar reduced_norm(const MultiField<Scalar>& r) const { return weighted_norm(op_.grid(), r); }

  Result solve(ReducedState<Scalar> s, const MultiField<Scalar>& cv, Scalar cb, Scalar rhs,
               Scalar tol, int max_iter, Scalar beta_cap) const {
    Result out;
    const Index m = op_.size();
    const Index q = p_.size();
    const Index dim = m * q + 1;
    Scalar prev = std::numeric_limits<Scalar>::infinity();
    for (int it = 0; it <= max_iter; ++it) {
      if (!(s.beta < beta_cap)) return out;
      const MultiField<Scalar> r = reduced_residual(p_, c_, s, op_);
      const Scalar cres = (cv.cwiseProduct(s.v)).sum() + cb * s.beta - rhs;
      const Scalar norm = reduced_norm(r);
      out.iterations = it;
      if (!std::isfinite(static_cast<double>(norm))) return out;
      if (norm <= tol && std::abs(cres) <= tol) {
        out.converged = true;
        out.state = std::move(s);
        out.residual = norm;
        return out;
      }
      // Diverging iterates are abandoned early.
      if (it > 3 && norm > 4 * prev) return out;
      prev = norm;
      if (it == max_iter) return out;

      Eigen::SparseMatrix<Scalar> jac(dim, dim);
      assemble(s, cv, cb, jac);
      Vector<Scalar> rhs_vec(dim);
      for (Index i = 0; i < m; ++i) {
        for (Index b = 0; b < q; ++b) rhs_vec(i * q + b) = -r(i, b);
      }
      rhs_vec(dim - 1) = -cres;
      Eigen::SparseLU<Eigen::SparseMatrix<Scalar>, Eigen::COLAMDOrdering<int>> lu;
      lu.compute(jac);
      if (lu.info() != Eigen::Success) return out;
      const Vector<Scalar> delta = lu.solve(rhs_vec);
      if (lu.info() != Eigen::Success) return out;
      for (Index i = 0; i < m; ++i) {
        for (Index b = 0; b < q; ++b) s.v(i, b) += delta(i * q + b);
      }
      s.beta += delta(dim - 1);
    }
    return out;
  }

 private:
  void assemble(const ReducedState<Scalar>& s, const MultiField<Scalar>& cv, Scalar cb,
                Eigen::SparseMatrix<Scalar>& jac) const {
    const Index m = op_.size();
    const Index q = p_.size();
    const Index dim = m * q + 1;
    const Vector<Scalar> rho = embedding_ratios(p_, c_, s.beta);
    const Vector<Scalar> drho = embedding_ratio_derivatives(p_, c_, s.beta);
    const Matrix<Scalar> r = embedding_matrix(p_, rho);
    const Matrix<Scalar> dr = embedding_matrix(p_, drho);
    const Vector<Scalar> gdiag = (r.transpose() * r).diagonal();
    const MultiField<Scalar> u = s.v * r.transpose();
    const SystemState<Scalar> full{s.beta, u};
    const auto blocks = coupling_blocks(u, c_, s.beta);

    // d/dbeta of the reduced residual.
    const MultiField<Scalar> f = system_residual(full, c_, op_);
    const MultiField<Scalar> du = s.v * dr.transpose();
    MultiField<Scalar> df = hessian_apply(full, c_, op_, du);
    const MultiField<Scalar> sq = u.cwiseProduct(u);
    const Vector<Scalar> total = sq.rowwise().sum();
    for (Index j = 0; j < c_.n(); ++j) {
      df.col(j).array() -= (total.array() - sq.col(j).array()) * u.col(j).array();
    }
    const MultiField<Scalar> dbeta = f * dr + df * r;

    std::vector<Eigen::Triplet<Scalar>> trip;
    trip.reserve(static_cast<std::size_t>(m * q * (q + 3) + 2 * m * q + 1));
    for (Index i = 0; i < m; ++i) {
      const Matrix<Scalar> kr = r.transpose() * blocks[static_cast<std::size_t>(i)] * r;
      for (Index b = 0; b < q; ++b) {
        const Index row = i * q + b;
        for (Index b2 = 0; b2 < q; ++b2) {
          Scalar v = -kr(b, b2);
          if (b2 == b) v += gdiag(b) * op_.diagonal()(i);
          trip.emplace_back(row, i * q + b2, v);
        }
        if (i > 0) trip.emplace_back(row, (i - 1) * q + b, gdiag(b) * op_.lower()(i - 1));
        if (i + 1 < m) trip.emplace_back(row, (i + 1) * q + b, gdiag(b) * op_.upper()(i));
        trip.emplace_back(row, dim - 1, dbeta(i, b));
        trip.emplace_back(dim - 1, row, cv(i, b));
      }
    }
    trip.emplace_back(dim - 1, dim - 1, cb);
    jac.setFromTriplets(trip.begin(), trip.end());
  }

  const Partition& p_;
  const CouplingSpec<Scalar>& c_;
  const SchrodingerOperator<Scalar>& op_;
};

}  // namespace detail

/// Pseudo-arclength continuation of a P-locked branch from a kick predictor.
///
/// The first corrector fixes the kernel amplitude in the (omega w^2)-product,
/// in which the locked branch has none, so it cannot fall back onto T_w.
/// Later steps use secant predictors and the arclength constraint in the norm
/// sum_b G_b ||v_b||_omega^2 + beta^2 on reduced coordinates.
template <typename Scalar>
Branch<Scalar> continue_branch(const Predictor<Scalar>& pred, const CouplingSpec<Scalar>& c,
                               const SchrodingerOperator<Scalar>& op,
                               const GroundState<Scalar>& gs, const ContinuationOpts& opts) {
  validate(opts);
  const auto [beta_lo, beta_hi] = beta_window(c, opts);
  require(pred.beta > beta_lo && pred.beta < beta_hi, Errc::invalid_config,
          "bifurcation point lies outside the continuation window");
  const auto& grid = op.grid();
  const Partition& p = pred.partition;
  const Index m = op.size();
  const Index q = p.size();
  const Scalar tol = Scalar(opts.newton_tol);
  detail::ReducedCorrector<Scalar> corrector(p, c, op);

  Branch<Scalar> br;
  br.partition = p;
  br.origin = pred.origin;
  br.direction = pred.direction;
  br.ambiguous = pred.ambiguous;

  auto make_point = [&](const ReducedState<Scalar>& s, Scalar reduced_res) {
    BranchPoint<Scalar> pt;
    pt.beta = s.beta;
    pt.u = embed(p, c, s.beta, s.v);
    pt.residual = reduced_res;
    pt.full_residual = residual_norm(SystemState<Scalar>{s.beta, pt.u}, c, op);
    pt.min_u = pt.u.minCoeff();
    pt.dist_locked = distance_to_locked(pt.u, gs.w, grid);
    return pt;
  };
  auto annotate_morse = [&](BranchPoint<Scalar>& pt, const ReducedState<Scalar>& s, int step) {
    if (opts.morse_every > 0 && step % opts.morse_every == 0) {
      pt.morse_index = reduced_hessian_spectrum(p, c, s, op, 0).morse_index;
    }
  };

  // Origin: the locked point itself.
  ReducedState<Scalar> x0{pred.beta, project(p, pred.locked)};
  BranchPoint<Scalar> origin = make_point(x0, corrector.reduced_norm(reduced_residual(p, c, x0, op)));
  annotate_morse(origin, x0, 0);
  br.points.push_back(origin);

  // First corrector with the kernel amplitude pinned.
  const Vector<Scalar> rho0 = embedding_ratios(p, c, pred.beta);
  const Vector<Scalar> g0 = (embedding_matrix(p, rho0).transpose() * embedding_matrix(p, rho0)).diagonal();
  const MultiField<Scalar> phi_red = project(p, pred.phi);
  MultiField<Scalar> cv(m, q);
  for (Index b = 0; b < q; ++b) {
    cv.col(b) = g0(b) * grid.weights.cwiseProduct(gs.w).cwiseProduct(gs.w).cwiseProduct(phi_red.col(b));
  }
  const ReducedState<Scalar> start{pred.beta, project(p, pred.u)};
  const Scalar target = cv.cwiseProduct(start.v).sum();
  auto first = corrector.solve(start, cv, Scalar(0), target, tol, opts.max_newton * 2,
                               c.mu_min());
  if (!first.converged) {
    throw Error(Errc::predictor_diverged,
                "first corrector from the kick predictor did not converge; try another eps");
  }
  const Scalar kick_dist = distance_to_locked(pred.u, gs.w, grid);
  BranchPoint<Scalar> p1 = make_point(first.state, first.residual);
  if (p1.dist_locked < Scalar(0.1) * kick_dist) {
    br.termination = Termination::returned_to_locked;
    return br;
  }

  auto arc_norm2 = [&](const ReducedState<Scalar>& a, const ReducedState<Scalar>& b) {
    Scalar sum = 0;
    for (Index k = 0; k < q; ++k) {
      const Vector<Scalar> d = a.v.col(k) - b.v.col(k);
      sum += g0(k) * weighted_inner(grid, d, d);
    }
    return sum + (a.beta - b.beta) * (a.beta - b.beta);
  };

  if (p1.beta <= beta_lo || p1.beta >= beta_hi) {
    br.termination = Termination::beta_bound;
    return br;
  }
  if (p1.min_u <= 0) {
    br.termination = Termination::positivity_lost;
    return br;
  }
  p1.s = std::sqrt(arc_norm2(first.state, x0));
  annotate_morse(p1, first.state, 1);
  br.points.push_back(p1);
  const Scalar first_dist = p1.dist_locked;

  ReducedState<Scalar> prev = x0;
  ReducedState<Scalar> curr = first.state;
  Scalar ds = Scalar(opts.ds0);
  int step = 1;
  br.termination = Termination::max_steps;
  while (step < opts.max_steps) {
    const Scalar chord = std::sqrt(arc_norm2(curr, prev));
    ReducedState<Scalar> tangent{(curr.beta - prev.beta) / chord,
                                 MultiField<Scalar>((curr.v - prev.v) / chord)};
    MultiField<Scalar> tv(m, q);
    for (Index b = 0; b < q; ++b) {
      tv.col(b) = g0(b) * grid.weights.cwiseProduct(tangent.v.col(b));
    }
    const Scalar base = tv.cwiseProduct(curr.v).sum() + tangent.beta * curr.beta;

    typename detail::ReducedCorrector<Scalar>::Result res;
    while (true) {
      ReducedState<Scalar> guess{curr.beta + ds * tangent.beta,
                                 MultiField<Scalar>(curr.v + ds * tangent.v)};
      res = corrector.solve(guess, tv, tangent.beta, base + ds, tol, opts.max_newton, c.mu_min());
      if (res.converged) break;
      ds /= 2;
      if (ds < Scalar(opts.ds_min)) break;
    }
    if (!res.converged) {
      br.termination = Termination::newton_failure;
      break;
    }
    BranchPoint<Scalar> pt = make_point(res.state, res.residual);
    if (pt.beta <= beta_lo || pt.beta >= beta_hi) {
      br.termination = Termination::beta_bound;
      break;
    }
    if (pt.min_u <= 0) {
      br.termination = Termination::positivity_lost;
      break;
    }
    ++step;
    pt.s = br.points.back().s + std::sqrt(arc_norm2(res.state, curr));
    annotate_morse(pt, res.state, step);
    const bool back_home = pt.dist_locked < Scalar(0.1) * first_dist;
    br.points.push_back(std::move(pt));
    if (back_home) {
      br.termination = Termination::returned_to_locked;
      break;
    }
    prev = std::move(curr);
    curr = std::move(res.state);
    if (res.iterations <= 3) ds = std::min(2 * ds, Scalar(opts.ds_max));
  }
  return br;
}

/// beta at which the branch meets the locked set, extrapolated linearly in
/// distance-to-locked from the first two points after the origin.
template <typename Scalar>
std::optional<Scalar> extrapolated_origin(const Branch<Scalar>& br) {
  if (br.points.size() < 3) return std::nullopt;
  const auto& a = br.points[1];
  const auto& b = br.points[2];
  if (b.dist_locked == a.dist_locked) return std::nullopt;
  return a.beta - a.dist_locked * (b.beta - a.beta) / (b.dist_locked - a.dist_locked);
}

/// Largest sup-norm distance between two branches over their common beta
/// range, interpolating each linearly along its points.
template <typename Scalar>
Scalar branch_separation(const Branch<Scalar>& a, const Branch<Scalar>& b) {
  auto interpolate = [](const Branch<Scalar>& br, Scalar beta) -> std::optional<MultiField<Scalar>> {
    for (std::size_t i = 0; i + 1 < br.points.size(); ++i) {
      const auto& p0 = br.points[i];
      const auto& p1 = br.points[i + 1];
      const Scalar lo = std::min(p0.beta, p1.beta);
      const Scalar hi = std::max(p0.beta, p1.beta);
      if (beta >= lo && beta <= hi && hi > lo) {
        const Scalar t = (beta - p0.beta) / (p1.beta - p0.beta);
        return MultiField<Scalar>((1 - t) * p0.u + t * p1.u);
      }
    }
    return std::nullopt;
  };
  Scalar best = 0;
  auto scan = [&](const Branch<Scalar>& x, const Branch<Scalar>& y) {
    for (std::size_t i = 1; i < x.points.size(); ++i) {
      const auto other = interpolate(y, x.points[i].beta);
      if (other) best = std::max(best, Scalar((x.points[i].u - *other).cwiseAbs().maxCoeff()));
    }
  };
  scan(a, b);
  scan(b, a);
  return best;
}

}  // namespace lockbif
