#include "lockbif/app/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lockbif/app/output.hpp"
#include "lockbif/continuation.hpp"
#include "lockbif/coupled_system.hpp"
#include "lockbif/locked_algebra.hpp"
#include "lockbif/partition.hpp"

namespace lockbif::app {

namespace {

using Field = Vector<Real>;
using Multi = MultiField<Real>;

struct Suite {
  std::vector<CheckRow> rows;
  std::ostream& log;

  /// `measure` returns the value that must stay at or below `threshold`.
  void bound(const std::string& name, double threshold, const std::function<double(std::string&)>& measure) {
    CheckRow row{name, false, 0, threshold, {}};
    try {
      row.value = measure(row.detail);
      row.passed = std::isfinite(row.value) && row.value <= threshold;
    } catch (const std::exception& e) {
      row.value = std::nan("");
      row.detail = e.what();
    }
    log << (row.passed ? "pass  " : "FAIL  ") << name << "  value " << format_number(row.value)
        << "  bound " << format_number(row.threshold);
    if (!row.detail.empty()) log << "  (" << row.detail << ")";
    log << '\n';
    rows.push_back(std::move(row));
  }
};

Field random_field(std::mt19937_64& rng, Index m, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Field v(m);
  for (Index i = 0; i < m; ++i) v(i) = Real(dist(rng));
  return v;
}

}  // namespace

std::vector<CheckRow> run_verify(const Problem& pb, std::ostream& log) {
  Suite suite{{}, log};
  const auto& op = pb.op;
  const auto& grid = pb.grid;
  const auto& c = pb.coupling;
  const auto& gs = pb.gs;
  const Index m = grid.size();
  const Index n = c.n();
  const Real zero_tol = Real(pb.cfg.solver.zero_tol);
  std::mt19937_64 rng(20240607);

  suite.bound("operator-symmetry", 1e-12, [&](std::string&) {
    Real worst = 0;
    for (int t = 0; t < 5; ++t) {
      const Field u = random_field(rng, m, -1, 1);
      const Field v = random_field(rng, m, -1, 1);
      const Real lhs = weighted_inner(grid, op.apply(u), v);
      const Real rhs = weighted_inner(grid, u, op.apply(v));
      worst = std::max(worst, std::abs(lhs - rhs) / (weighted_norm(grid, u) * weighted_norm(grid, v)));
    }
    return static_cast<double>(worst);
  });

  suite.bound("operator-positivity", 0, [&](std::string& detail) {
    const Real nu = operator_smallest_eigenvalue(op);
    detail = "smallest eigenvalue " + format_number(nu);
    return nu > 0 ? 0.0 : 1.0;
  });

  suite.bound("ground-state-residual", pb.cfg.solver.tolerance, [&](std::string& detail) {
    detail = std::to_string(gs.iterations) + " iterations, min w " + format_number(gs.w.minCoeff());
    if (gs.w.minCoeff() <= 0) return 1.0;
    return static_cast<double>(weighted_norm(grid, scalar_residual(op, gs.w)));
  });

  const auto sp = pb.spectrum();
  suite.bound("ground-state-nondegenerate", 0, [&](std::string&) {
    return gs.nondegenerate && !sp.near_three ? 0.0 : 1.0;
  });

  suite.bound("first-weighted-eigenvalue", 1e-9, [&](std::string& detail) {
    const Field psi = sp.basis(1).col(0);
    const Real cosine = std::abs(weighted_inner(grid, psi, gs.w)) /
                        (weighted_norm(grid, psi) * weighted_norm(grid, gs.w));
    detail = "angle to w " + format_number(std::acos(std::min(Real(1), cosine)));
    return static_cast<double>(std::abs(sp.lambda(1) - 1));
  });

  suite.bound("eigenbasis-orthonormality", 1e-10, [&](std::string&) {
    std::vector<Field> all;
    for (const auto& b : sp.bases) {
      for (Index j = 0; j < b.cols(); ++j) all.push_back(b.col(j));
    }
    const Field w2 = gs.w.cwiseProduct(gs.w);
    Real worst = 0;
    for (std::size_t a = 0; a < all.size(); ++a) {
      for (std::size_t b = a; b < all.size(); ++b) {
        const Real ip = (grid.weights.cwiseProduct(w2).cwiseProduct(all[a]).cwiseProduct(all[b])).sum();
        worst = std::max(worst, std::abs(ip - Real(a == b ? 1 : 0)));
      }
    }
    return static_cast<double>(worst);
  });

  suite.bound("locked-branch-residual", 1e-10, [&](std::string& detail) {
    Real worst = 0;
    std::vector<Real> betas = pb.scan_betas();
    for (int s = 0; s < 10; ++s) betas.push_back(c.mu_max() + Real(0.1) + Real(4.9) * Real(s) / 9);
    for (Real beta : betas) {
      const SystemState<Real> st{beta, locked_solution(gs.w, c, beta)};
      worst = std::max(worst, residual_norm(st, c, op));
    }
    detail = std::to_string(betas.size()) + " samples";
    return static_cast<double>(worst);
  });

  suite.bound("coupling-matrix-spectrum", 1e-10, [&](std::string&) {
    Real worst = 0;
    for (Real beta : pb.scan_betas()) {
      const auto cd = matrix_CD(c, beta);
      Eigen::SelfAdjointEigenSolver<Matrix<Real>> eig(cd.C, Eigen::EigenvaluesOnly);
      std::vector<Real> expected(static_cast<std::size_t>(n), eval_f(c, beta));
      expected[0] = 3;
      std::sort(expected.begin(), expected.end());
      const Real scale = std::max(Real(1), std::abs(eval_f(c, beta)));
      for (Index j = 0; j < n; ++j) {
        worst = std::max(worst, std::abs(eig.eigenvalues()(j) - expected[static_cast<std::size_t>(j)]) / scale);
      }
    }
    return static_cast<double>(worst);
  });

  const auto plan = plan_bifurcations(gs, c, sp);
  auto locked_state = [&](Real beta) { return SystemState<Real>{beta, locked_solution(gs.w, c, beta)}; };

  suite.bound("kernel-dimension", 0, [&](std::string& detail) {
    int bad = 0;
    std::ostringstream os;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      const auto& bp = plan[i].point;
      const int at = hessian_spectrum(locked_state(bp.beta), c, op, 0, zero_tol).kernel_dim;
      os << "k" << bp.k << ":" << at;
      if (at != bp.kernel_dim) ++bad;
      if (i + 1 < plan.size()) {
        const Real mid = (bp.beta + plan[i + 1].point.beta) / 2;
        const int off = hessian_spectrum(locked_state(mid), c, op, 0, zero_tol).kernel_dim;
        os << "/" << off << " ";
        if (off != 0) ++bad;
      }
    }
    detail = os.str();
    return static_cast<double>(bad);
  });

  suite.bound("morse-direct-vs-formula", 0, [&](std::string& detail) {
    int bad = 0;
    int used = 0;
    for (Real beta : pb.scan_betas()) {
      int formula = 0;
      try {
        formula = morse_index_formula(c, beta, sp);
      } catch (const Error& e) {
        if (e.code() == Errc::at_bifurcation || e.code() == Errc::insufficient_spectrum) continue;
        throw;
      }
      ++used;
      if (hessian_spectrum(locked_state(beta), c, op, 0, zero_tol).morse_index != formula) ++bad;
    }
    detail = std::to_string(used) + " samples compared";
    return static_cast<double>(bad);
  });

  const Real eps = Real(1e-3) * (c.mu_min() - beta_bar(c));
  const auto partitions = pair_partitions(n);
  suite.bound("morse-jumps", 0, [&](std::string& detail) {
    int bad = 0;
    for (const auto& p : plan) {
      const Real b = p.point.beta;
      const int left = hessian_spectrum(locked_state(b - eps), c, op, 0, zero_tol).morse_index;
      const int right = hessian_spectrum(locked_state(b + eps), c, op, 0, zero_tol).morse_index;
      if (left - right != p.point.kernel_dim) ++bad;
      for (const auto& part : partitions) {
        auto reduced = [&](Real beta) {
          const ReducedState<Real> rs{beta, project(part, locked_solution(gs.w, c, beta))};
          return reduced_hessian_spectrum(part, c, rs, op, 0, zero_tol).morse_index;
        };
        if (reduced(b - eps) - reduced(b + eps) != (part.size() - 1) * p.point.multiplicity) ++bad;
      }
    }
    detail = std::to_string(plan.size()) + " points x " + std::to_string(partitions.size() + 1) + " systems";
    return static_cast<double>(bad);
  });

  suite.bound("hidden-symmetry", 1e-12, [&](std::string&) {
    Real worst = 0;
    const auto [lo, hi] = pb.scan_window();
    std::uniform_real_distribution<double> beta_dist(static_cast<double>(lo), static_cast<double>(hi));
    std::uniform_int_distribution<Index> pick(0, n - 1);
    for (int t = 0; t < 20; ++t) {
      const Real beta = Real(beta_dist(rng));
      Multi u(m, n);
      for (Index j = 0; j < n; ++j) u.col(j) = random_field(rng, m, 0.1, 2.0);
      const Index i = pick(rng);
      Index j = pick(rng);
      if (j == i) j = (i + 1) % n;
      u.col(j) = locked_ratio(c, beta, i, j) * u.col(i);
      worst = std::max(worst, residual_transfer_check(c, beta, i, j, u, op));
    }
    return static_cast<double>(worst);
  });

  if (plan.empty()) return suite.rows;
  // Smallest k available, normally k = 2.
  const auto& bp2 = std::min_element(plan.begin(), plan.end(), [](const auto& a, const auto& b) {
                      return a.point.k < b.point.k;
                    })->point;

  suite.bound("predictor-kernel", 1e-7, [&](std::string& detail) {
    Real worst_h = 0;
    Real worst_gamma = 0;
    Real worst_ratio = 0;
    const Field gamma = gammas(c, bp2.beta);
    const SystemState<Real> at = locked_state(bp2.beta);
    for (const auto& part : partitions) {
      for (int dir : {1, -1}) {
        const auto pred = branch_switch_predictor(part, c, gs, bp2, sp.basis(bp2.k), grid,
                                                  Real(pb.cfg.continuation.eps), dir);
        worst_h = std::max(worst_h, weighted_norm(grid, hessian_apply(at, c, op, pred.phi)));
        worst_gamma = std::max(worst_gamma, Real((pred.phi * gamma).cwiseAbs().maxCoeff()));
        const Field rho = embedding_ratios(part, c, bp2.beta);
        for (Index j = 0; j < n; ++j) {
          const Index r = part.representative(part.block_of(j));
          const Real scale = std::max(Real(1), Real(pred.u.col(r).cwiseAbs().maxCoeff()));
          worst_ratio = std::max(worst_ratio,
                                 Real((pred.u.col(j) - rho(j) * pred.u.col(r)).cwiseAbs().maxCoeff()) / scale);
        }
      }
    }
    detail = "gamma.phi " + format_number(worst_gamma) + ", ratio " + format_number(worst_ratio);
    const bool exact = worst_gamma <= Real(1e-12) && worst_ratio <= Real(1e-12);
    return exact ? static_cast<double>(worst_h) : 1.0;
  });

  suite.bound("continuation-reduction", 10 * pb.cfg.continuation.newton_tol, [&](std::string& detail) {
    ContinuationOpts o = pb.cfg.continuation;
    o.max_steps = std::min(o.max_steps, 6);
    const auto pred = branch_switch_predictor(partitions.front(), c, gs, bp2, sp.basis(bp2.k), grid,
                                              Real(o.eps), 1);
    const auto br = continue_branch(pred, c, op, gs, o);
    Real worst = 0;
    bool monotone = true;
    for (std::size_t i = 0; i < br.points.size(); ++i) {
      worst = std::max(worst, br.points[i].full_residual);
      if (i > 0 && br.points[i].s < br.points[i - 1].s) monotone = false;
    }
    detail = std::to_string(br.points.size()) + " points, " + to_string(br.termination) +
             (monotone ? "" : ", arclength decreased");
    return monotone && br.points.size() > 1 ? static_cast<double>(worst) : 1.0;
  });

  return suite.rows;
}

}  // namespace lockbif::app
