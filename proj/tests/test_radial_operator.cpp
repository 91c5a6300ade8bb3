#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"

using namespace lockbif;
using fixtures::Field;

namespace {

const Real pi = std::acos(Real(-1));

DomainSpec ball(int dim, double r1) {
  return DomainSpec{DomainKind::ball, dim, 0.0, r1};
}

PotentialSpec constant(double a) {
  PotentialSpec p;
  p.value = a;
  return p;
}

}  // namespace

TEST_CASE("grid layout") {
  SUBCASE("interval with three nodes") {
    const auto g = build_grid_unchecked<Real>(DomainSpec{}, 3);
    CHECK(g.spacing == doctest::Approx(static_cast<double>(pi / 4)));
    for (Index i = 0; i < 3; ++i) {
      CHECK(static_cast<double>(g.nodes(i)) == doctest::Approx(static_cast<double>((i + 1) * pi / 4)));
      CHECK(static_cast<double>(g.weights(i)) == doctest::Approx(static_cast<double>(pi / 4)));
    }
  }
  SUBCASE("three-dimensional ball with four nodes") {
    const auto g = build_grid_unchecked<Real>(ball(3, 1.0), 4);
    for (Index i = 0; i < 4; ++i) {
      const double r = 0.2 * double(i + 1);
      CHECK(static_cast<double>(g.nodes(i)) == doctest::Approx(r));
      CHECK(static_cast<double>(g.weights(i)) == doctest::Approx(r * r * 0.2));
    }
  }
  SUBCASE("annulus") {
    const auto g = build_grid<Real>(DomainSpec{DomainKind::annulus, 2, 1.0, 2.0}, 99);
    CHECK(g.size() == 99);
    CHECK(static_cast<double>(g.spacing) == doctest::Approx(0.01));
    for (Index i = 0; i < 99; ++i) {
      CHECK(std::abs(g.weights(i) - g.nodes(i) * Real(0.01)) < Real(1e-15));
    }
  }
}

TEST_CASE("grid and domain validation") {
  CHECK_THROWS_AS(build_grid<Real>(DomainSpec{}, 15), Error);
  try {
    build_grid<Real>(DomainSpec{}, 15);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::too_few_points);
  }
  auto code_of = [](const DomainSpec& d) {
    try {
      build_grid<Real>(d, 32);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::invariant_violation;
  };
  CHECK(code_of(DomainSpec{DomainKind::interval, 1, 1.0, 1.0}) == Errc::invalid_domain);
  CHECK(code_of(DomainSpec{DomainKind::interval, 3, 0.0, 1.0}) == Errc::invalid_domain);
  CHECK(code_of(DomainSpec{DomainKind::ball, 3, 0.5, 1.0}) == Errc::invalid_domain);
  CHECK(code_of(DomainSpec{DomainKind::ball, 1, 0.0, 1.0}) == Errc::invalid_domain);
  CHECK(code_of(DomainSpec{DomainKind::annulus, 2, 0.0, 1.0}) == Errc::invalid_domain);
  CHECK(code_of(DomainSpec{DomainKind::interval, 4, 0.0, 1.0}) == Errc::invalid_domain);

  const auto g = build_grid<Real>(DomainSpec{DomainKind::truncated_space, 3, 0.0, 8.0}, 64);
  CHECK_THROWS_AS(assemble_operator(g, constant(1.0)), Error);
}

TEST_CASE("smallest eigenvalue matches the closed-form finite-difference spectrum") {
  const auto g = build_grid<Real>(DomainSpec{}, 799);
  const Real h = g.spacing;
  const Real exact = 4 / (h * h) * std::pow(std::sin(h / 2), 2);
  const auto op0 = assemble_operator(g, constant(0.0));
  CHECK(std::abs(operator_smallest_eigenvalue(op0) - exact) < Real(1e-12));

  const auto op1 = assemble_operator(g, constant(1.0));
  const Vector<Real> e0 = pencil_eigenvalues(op0.symmetrized(), Vector<Real>(), 5);
  const Vector<Real> e1 = pencil_eigenvalues(op1.symmetrized(), Vector<Real>(), 5);
  for (Index k = 0; k < 5; ++k) CHECK(std::abs(e1(k) - e0(k) - 1) < Real(1e-12));
  CHECK(std::abs(operator_smallest_eigenvalue(op1) - (1 + exact)) < Real(1e-12));
}

TEST_CASE("three-dimensional ball reduces to the one-dimensional stencil for r u") {
  // Dirichlet eigenvalues of the unit ball in radial form are those of
  // -v'' on (0, 1) with v = r u, discretized with the same spacing.
  const auto g = build_grid<Real>(ball(3, 1.0), 99);
  const auto op = assemble_operator(g, constant(0.0));
  const Real h = g.spacing;
  for (int k = 1; k <= 3; ++k) {
    const Real exact = 4 / (h * h) * std::pow(std::sin(k * pi * h / 2), 2);
    const Vector<Real> ev = pencil_eigenvalues(op.symmetrized(), Vector<Real>(), 3);
    CHECK(std::abs(ev(k - 1) - exact) < Real(1e-9) * exact);
  }
  // Frozen from the closed form at h = 1/100.
  CHECK(static_cast<double>(operator_smallest_eigenvalue(op)) == doctest::Approx(9.868792685368858).epsilon(1e-12));
}

TEST_CASE("constants are annihilated by the interior ball stencil") {
  const auto g = build_grid<Real>(ball(3, 1.0), 50);
  const auto op = assemble_operator(g, constant(1.0));
  const Field au = op.apply(Field(Field::Ones(50)));
  for (Index i = 0; i + 1 < 50; ++i) CHECK(std::abs(au(i) - 1) < Real(1e-9));
  CHECK(au(49) > 1);
}

TEST_CASE("weighted inner product") {
  const auto g3 = build_grid_unchecked<Real>(DomainSpec{}, 3);
  CHECK(std::abs(weighted_inner(g3, Field(Field::Ones(3)), Field(Field::Ones(3))) - 3 * pi / 4) < Real(1e-15));
  CHECK(weighted_inner(g3, Field(Field::Ones(3)), Field(Field::Zero(3))) == 0);

  const auto g = build_grid<Real>(DomainSpec{}, 800);
  const Field s = g.nodes.array().sin().matrix();
  CHECK(std::abs(weighted_inner(g, s, s) - pi / 2) < Real(1e-12));
  CHECK_THROWS_AS(weighted_inner(g, s, Field(Field::Ones(3))), Error);
}

TEST_CASE("operator is symmetric in the weighted product") {
  std::mt19937_64 rng(7);
  for (const DomainSpec& d : {DomainSpec{}, ball(3, 2.0), ball(2, 1.0), DomainSpec{DomainKind::annulus, 2, 1.0, 2.0}}) {
    const auto g = build_grid<Real>(d, 300);
    const auto op = assemble_operator(g, constant(1.0));
    const Field u = fixtures::random_field(rng, 300, -1, 1);
    const Field v = fixtures::random_field(rng, 300, -1, 1);
    const Real defect = std::abs(weighted_inner(g, op.apply(u), v) - weighted_inner(g, u, op.apply(v)));
    CHECK(defect <= Real(1e-12) * weighted_norm(g, u) * weighted_norm(g, v));
  }
}

TEST_CASE("eigenvalues converge at second order") {
  auto errors = [](Index m) {
    const auto op = assemble_operator(build_grid<Real>(DomainSpec{}, m), constant(0.0));
    const Vector<Real> ev = pencil_eigenvalues(op.symmetrized(), Vector<Real>(), 3);
    Vector<Real> err(3);
    for (Index k = 0; k < 3; ++k) err(k) = std::abs(ev(k) - Real((k + 1) * (k + 1)));
    return err;
  };
  const Vector<Real> coarse = errors(99);
  const Vector<Real> fine = errors(199);
  for (Index k = 0; k < 3; ++k) {
    const double ratio = static_cast<double>(coarse(k) / fine(k));
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.2));
  }
}

TEST_CASE("positivity gate") {
  const auto g = build_grid<Real>(DomainSpec{}, 100);
  const auto op = assemble_operator_unchecked(g, constant(-10.0));
  CHECK(operator_smallest_eigenvalue(op) < 0);
  try {
    assemble_operator(g, constant(-10.0));
    FAIL("expected nonpositive-operator");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::nonpositive_operator);
  }
}

TEST_CASE("tabulated potential interpolates and clamps") {
  PotentialSpec p;
  p.kind = PotentialKind::tabulated;
  p.table = {{0.0, 1.0}, {1.0, 3.0}, {2.0, 3.0}};
  CHECK(static_cast<double>(evaluate_potential<Real>(p, Real(0.5))) == doctest::Approx(2.0));
  CHECK(static_cast<double>(evaluate_potential<Real>(p, Real(-1))) == doctest::Approx(1.0));
  CHECK(static_cast<double>(evaluate_potential<Real>(p, Real(5))) == doctest::Approx(3.0));
  p.table = {{1.0, 1.0}, {0.5, 2.0}};
  CHECK_THROWS_AS(validate(p, DomainSpec{}), Error);
}

TEST_CASE("truncated whole space with a harmonic trap keeps a negligible tail") {
  PotentialSpec p;
  p.kind = PotentialKind::harmonic;
  p.scale = 1.0;
  const DomainSpec d{DomainKind::truncated_space, 3, 0.0, default_truncation_radius(1.0)};
  CHECK(d.outer_radius == doctest::Approx(8.0));
  const auto g = build_grid<Real>(d, 400);
  const auto op = assemble_operator(g, p);
  const auto gs = solve_ground_state(op);
  CHECK(gs.w.minCoeff() > 0);
  CHECK(gs.tail_mass < Real(1e-6));
}
