#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "lockbif/tridiagonal.hpp"
#include "lockbif/types.hpp"

namespace lockbif {

enum class DomainKind { interval, ball, annulus, truncated_space };

struct DomainSpec {
  DomainKind kind = DomainKind::interval;
  int dimension = 1;
  double inner_radius = 0.0;
  double outer_radius = 3.141592653589793;
};

enum class PotentialKind { constant, harmonic, tabulated };

/// a(r): constant `value`, `scale * r^2`, or piecewise-linear through `table`
/// (pairs of radius and value, sorted by radius, held constant outside).
struct PotentialSpec {
  PotentialKind kind = PotentialKind::constant;
  double value = 1.0;
  double scale = 1.0;
  std::vector<std::pair<double, double>> table;
};

inline bool origin_is_interior(DomainKind kind) {
  return kind == DomainKind::ball || kind == DomainKind::truncated_space;
}

inline void validate(const DomainSpec& d) {
  require(d.dimension >= 1 && d.dimension <= 3, Errc::invalid_domain, "dimension must be 1, 2 or 3");
  require(d.outer_radius > d.inner_radius, Errc::invalid_domain, "R1 must exceed R0");
  require(d.kind != DomainKind::interval || d.dimension == 1, Errc::invalid_domain,
          "an interval is one-dimensional");
  if (origin_is_interior(d.kind)) {
    require(d.inner_radius == 0.0, Errc::invalid_domain, "ball and truncated space start at r = 0");
    require(d.dimension >= 2, Errc::invalid_domain,
            "radial ball/whole-space problems need N >= 2 (use kind = interval for N = 1)");
  }
  if (d.kind == DomainKind::annulus) {
    require(d.inner_radius > 0.0, Errc::invalid_domain, "annulus needs R0 > 0");
  }
}

inline void validate(const PotentialSpec& p, const DomainSpec& d) {
  if (p.kind == PotentialKind::harmonic) {
    require(p.scale > 0.0, Errc::invalid_domain, "harmonic scale must be positive");
  }
  if (p.kind == PotentialKind::tabulated) {
    require(!p.table.empty(), Errc::invalid_domain, "empty potential table");
    for (std::size_t i = 0; i < p.table.size(); ++i) {
      require(std::isfinite(p.table[i].first) && std::isfinite(p.table[i].second),
              Errc::invalid_domain, "potential table values must be finite");
      require(i == 0 || p.table[i].first > p.table[i - 1].first, Errc::invalid_domain,
              "potential table radii must increase");
    }
  }
  if (d.kind == DomainKind::truncated_space) {
    require(p.kind == PotentialKind::harmonic, Errc::invalid_domain,
            "truncated space needs a potential unbounded at infinity (harmonic)");
  }
}

template <typename Scalar>
Scalar evaluate_potential(const PotentialSpec& p, Scalar r) {
  switch (p.kind) {
    case PotentialKind::constant:
      return Scalar(p.value);
    case PotentialKind::harmonic:
      return Scalar(p.scale) * r * r;
    case PotentialKind::tabulated: {
      const auto& t = p.table;
      if (r <= Scalar(t.front().first)) return Scalar(t.front().second);
      if (r >= Scalar(t.back().first)) return Scalar(t.back().second);
      auto it = std::upper_bound(t.begin(), t.end(), r,
                                 [](Scalar x, const auto& e) { return x < Scalar(e.first); });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const Scalar s = (r - Scalar(lo.first)) / Scalar(hi.first - lo.first);
      return Scalar(lo.second) + s * Scalar(hi.second - lo.second);
    }
  }
  return Scalar(0);
}

/// Suggested truncation radius for the harmonic whole-space problem.
inline double default_truncation_radius(double harmonic_scale) {
  return 8.0 * std::pow(harmonic_scale, -0.25);
}

/// Uniform interior grid on (R0, R1) with radial quadrature weights
/// omega_i = r_i^(N-1) h.
template <typename Scalar>
struct RadialGrid {
  DomainSpec domain;
  Vector<Scalar> nodes;
  Vector<Scalar> weights;
  Scalar spacing = 0;

  Index size() const { return nodes.size(); }
  int dimension() const { return domain.dimension; }
};

template <typename Scalar>
RadialGrid<Scalar> build_grid(const DomainSpec& domain, Index points) {
  require(domain.outer_radius > domain.inner_radius, Errc::invalid_domain, "R1 must exceed R0");
  validate(domain);
  require(points >= 16, Errc::too_few_points, "at least 16 grid points required");
  RadialGrid<Scalar> g;
  g.domain = domain;
  const Scalar r0 = Scalar(domain.inner_radius);
  g.spacing = (Scalar(domain.outer_radius) - r0) / Scalar(points + 1);
  g.nodes.resize(points);
  g.weights.resize(points);
  for (Index i = 0; i < points; ++i) {
    const Scalar r = r0 + Scalar(i + 1) * g.spacing;
    g.nodes(i) = r;
    g.weights(i) = std::pow(r, Scalar(domain.dimension - 1)) * g.spacing;
  }
  return g;
}

/// Unchecked variant of build_grid (no minimum size); used by the examples
/// that illustrate the grid arithmetic on tiny grids.
template <typename Scalar>
RadialGrid<Scalar> build_grid_unchecked(const DomainSpec& domain, Index points) {
  validate(domain);
  require(points >= 1, Errc::too_few_points, "empty grid");
  RadialGrid<Scalar> g;
  g.domain = domain;
  const Scalar r0 = Scalar(domain.inner_radius);
  g.spacing = (Scalar(domain.outer_radius) - r0) / Scalar(points + 1);
  g.nodes.resize(points);
  g.weights.resize(points);
  for (Index i = 0; i < points; ++i) {
    g.nodes(i) = r0 + Scalar(i + 1) * g.spacing;
    g.weights(i) = std::pow(g.nodes(i), Scalar(domain.dimension - 1)) * g.spacing;
  }
  return g;
}

template <typename Scalar>
Scalar weighted_inner(const RadialGrid<Scalar>& grid, const Vector<Scalar>& u,
                      const Vector<Scalar>& v) {
  require(u.size() == grid.size() && v.size() == grid.size(), Errc::size_mismatch,
          "weighted_inner");
  return (grid.weights.cwiseProduct(u)).dot(v);
}

template <typename Scalar>
Scalar weighted_norm(const RadialGrid<Scalar>& grid, const Vector<Scalar>& u) {
  return std::sqrt(weighted_inner(grid, u, u));
}

/// Sum of the component-wise weighted inner products of two multi-fields.
template <typename Scalar>
Scalar weighted_inner(const RadialGrid<Scalar>& grid, const MultiField<Scalar>& u,
                      const MultiField<Scalar>& v) {
  require(u.rows() == grid.size() && v.rows() == grid.size() && u.cols() == v.cols(),
          Errc::size_mismatch, "weighted_inner");
  return (grid.weights.asDiagonal() * u).cwiseProduct(v).sum();
}

template <typename Scalar>
Scalar weighted_norm(const RadialGrid<Scalar>& grid, const MultiField<Scalar>& u) {
  return std::sqrt(weighted_inner(grid, u, u));
}

/// -u'' - (N-1)/r u' + a(r) u in conservative form,
///
///   (Au)_i = [c_{i-1/2}(u_i - u_{i-1}) + c_{i+1/2}(u_i - u_{i+1})] / (h^2 r_i^(N-1)) + a_i u_i,
///
/// with face coefficients c_{i+1/2} = (r_i r_{i+1})^((N-1)/2) and u = 0 at
/// Dirichlet ends. W A is symmetric for W = diag(omega). At the origin
/// c_{1/2} = 0, which is the discrete form of u'(0) = 0.
template <typename Scalar>
class SchrodingerOperator {
 public:
  SchrodingerOperator(RadialGrid<Scalar> grid, Vector<Scalar> potential)
      : grid_(std::move(grid)), potential_(std::move(potential)) {
    const Index m = grid_.size();
    const Scalar h = grid_.spacing;
    const Scalar p = Scalar(grid_.dimension() - 1) / 2;
    const Scalar r0 = Scalar(grid_.domain.inner_radius);
    const Scalar r1 = Scalar(grid_.domain.outer_radius);
    faces_.resize(m + 1);
    for (Index f = 0; f <= m; ++f) {
      const Scalar left = f == 0 ? r0 : grid_.nodes(f - 1);
      const Scalar right = f == m ? r1 : grid_.nodes(f);
      faces_(f) = std::pow(left * right, p);
    }
    if (origin_is_interior(grid_.domain.kind)) {
      faces_(0) = 0;
    }
    Vector<Scalar> radial(m);
    for (Index i = 0; i < m; ++i) {
      radial(i) = std::pow(grid_.nodes(i), Scalar(grid_.dimension() - 1));
    }
    diag_.resize(m);
    lower_.resize(m - 1);
    upper_.resize(m - 1);
    sym_.diag.resize(m);
    sym_.off.resize(m - 1);
    for (Index i = 0; i < m; ++i) {
      const Scalar denom = h * h * radial(i);
      diag_(i) = (faces_(i) + faces_(i + 1)) / denom + potential_(i);
      if (i + 1 < m) {
        upper_(i) = -faces_(i + 1) / denom;
        lower_(i) = -faces_(i + 1) / (h * h * radial(i + 1));
        sym_.off(i) = -faces_(i + 1) / (h * std::sqrt(grid_.weights(i) * grid_.weights(i + 1)));
      }
    }
    sym_.diag = diag_;
  }

  const RadialGrid<Scalar>& grid() const { return grid_; }
  const Vector<Scalar>& potential() const { return potential_; }
  Index size() const { return grid_.size(); }

  /// Tridiagonal entries of A in nodal coordinates (not symmetric).
  const Vector<Scalar>& diagonal() const { return diag_; }
  const Vector<Scalar>& lower() const { return lower_; }
  const Vector<Scalar>& upper() const { return upper_; }

  /// W^{1/2} A W^{-1/2}: symmetric, same spectrum as A.
  const SymTridiagonal<Scalar>& symmetrized() const { return sym_; }

  Vector<Scalar> apply(const Vector<Scalar>& u) const {
    require(u.size() == size(), Errc::size_mismatch, "operator apply");
    const Index m = size();
    Vector<Scalar> out(m);
    const Scalar h2 = grid_.spacing * grid_.spacing;
    for (Index i = 0; i < m; ++i) {
      // Differences first: neighbouring values nearly cancel exactly.
      const Scalar left = i > 0 ? u(i) - u(i - 1) : u(i);
      const Scalar right = i + 1 < m ? u(i) - u(i + 1) : u(i);
      const Scalar radial = grid_.weights(i) / grid_.spacing;
      out(i) = (faces_(i) * left + faces_(i + 1) * right) / (h2 * radial) + potential_(i) * u(i);
    }
    return out;
  }

  MultiField<Scalar> apply(const MultiField<Scalar>& u) const {
    MultiField<Scalar> out(u.rows(), u.cols());
    for (Index j = 0; j < u.cols(); ++j) {
      out.col(j) = apply(Vector<Scalar>(u.col(j)));
    }
    return out;
  }

  /// ||u||_E^2 = <Au, u>_omega.
  Scalar energy_norm_sq(const Vector<Scalar>& u) const {
    return weighted_inner(grid_, apply(u), u);
  }

 private:
  RadialGrid<Scalar> grid_;
  Vector<Scalar> potential_;
  Vector<Scalar> faces_;
  Vector<Scalar> diag_;
  Vector<Scalar> lower_;
  Vector<Scalar> upper_;
  SymTridiagonal<Scalar> sym_;
};

template <typename Scalar>
Scalar operator_smallest_eigenvalue(const SchrodingerOperator<Scalar>& op) {
  const Vector<Scalar> values = pencil_eigenvalues(op.symmetrized(), Vector<Scalar>(), Index(1));
  require(std::isfinite(static_cast<double>(values(0))), Errc::eigensolver_failure,
          "smallest eigenvalue is not finite");
  return values(0);
}

/// Throws nonpositive-operator unless -Delta + a is positive on the grid.
template <typename Scalar>
void require_positive(const SchrodingerOperator<Scalar>& op) {
  // Positivity is equivalent to the LDL^T of the symmetrized matrix having no
  // nonpositive pivot at shift 0.
  require(sturm_count(op.symmetrized(), Vector<Scalar>(), Scalar(0)) == 0 &&
              operator_smallest_eigenvalue(op) > 0,
          Errc::nonpositive_operator, "-Delta + a is not positive on this grid");
}

/// Builds the operator without the positivity gate.
template <typename Scalar>
SchrodingerOperator<Scalar> assemble_operator_unchecked(const RadialGrid<Scalar>& grid,
                                                        const PotentialSpec& potential) {
  validate(potential, grid.domain);
  Vector<Scalar> a(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    a(i) = evaluate_potential<Scalar>(potential, grid.nodes(i));
  }
  return SchrodingerOperator<Scalar>(grid, std::move(a));
}

template <typename Scalar>
SchrodingerOperator<Scalar> assemble_operator(const RadialGrid<Scalar>& grid,
                                              const PotentialSpec& potential) {
  auto op = assemble_operator_unchecked(grid, potential);
  require_positive(op);
  return op;
}

/// Fraction of the omega-mass of u carried by the outer 10% of the grid.
template <typename Scalar>
Scalar tail_mass_fraction(const RadialGrid<Scalar>& grid, const Vector<Scalar>& u) {
  const Index m = grid.size();
  const Index start = m - std::max<Index>(1, m / 10);
  Scalar tail = 0;
  for (Index i = start; i < m; ++i) tail += grid.weights(i) * u(i) * u(i);
  const Scalar total = weighted_inner(grid, u, u);
  return total > 0 ? std::sqrt(tail / total) : Scalar(0);
}

}  // namespace lockbif
