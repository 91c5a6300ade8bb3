#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace lockbif;
using fixtures::Field;

TEST_CASE("ground state on the reference interval") {
  const auto& ref = fixtures::reference800();
  CHECK(ref.gs.w.minCoeff() > 0);
  CHECK(ref.gs.residual_norm <= Real(1e-11));
  CHECK(weighted_norm(ref.grid, scalar_residual(ref.op, ref.gs.w)) <= Real(1e-11));
  CHECK(ref.gs.nondegenerate);
  // Independent dense Newton solve in double precision.
  CHECK(static_cast<double>(ref.gs.w.maxCoeff()) == doctest::Approx(1.708456257339777).epsilon(1e-11));
}

TEST_CASE("scalar residual identities") {
  const auto& ref = fixtures::reference200();
  CHECK(scalar_residual(ref.op, Field(Field::Zero(200))).cwiseAbs().maxCoeff() == 0);
  const Field w = ref.gs.w;
  const Field r = scalar_residual(ref.op, Field(2 * w));
  const Field expected = -6 * w.array().cube().matrix() + 2 * scalar_residual(ref.op, w);
  CHECK((r - expected).cwiseAbs().maxCoeff() < Real(1e-9));
  CHECK(r.norm() > 1);
  CHECK_THROWS_AS(scalar_residual(ref.op, Field(Field::Zero(3))), Error);
}

TEST_CASE("ground state converges at second order") {
  // Nested grids: nodes of M = 199 are every other node of 399, and so on.
  auto solve = [](Index m) {
    const auto op = assemble_operator(build_grid<Real>(DomainSpec{}, m), PotentialSpec{});
    return solve_ground_state(op).w;
  };
  const Field w1 = solve(199);
  const Field w2 = solve(399);
  const Field w3 = solve(799);
  Real e1 = 0;
  Real e2 = 0;
  for (Index i = 0; i < 199; ++i) e1 = std::max(e1, std::abs(w1(i) - w2(2 * i + 1)));
  for (Index i = 0; i < 399; ++i) e2 = std::max(e2, std::abs(w2(i) - w3(2 * i + 1)));
  CHECK(static_cast<double>(e1 / e2) == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("nonpositive operator is refused") {
  PotentialSpec p;
  p.value = -10;
  const auto op = assemble_operator_unchecked(build_grid<Real>(DomainSpec{}, 100), p);
  try {
    solve_ground_state(op);
    FAIL("expected nonpositive-operator");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::nonpositive_operator);
  }
}

TEST_CASE("weighted spectrum of the reference problem") {
  const auto& ref = fixtures::reference800();
  const auto& sp = ref.spectrum;
  REQUIRE(sp.clusters() >= 6);
  // Independent oracle: reciprocal pencil diag(w^2) psi = (1/lambda) A psi,
  // dense SciPy solve on the same discretization.
  const double oracle[] = {1.0, 3.9997634537994, 9.0958564120650, 16.3438883953927,
                           25.7644376447521, 37.3667352176738};
  for (std::size_t k = 1; k <= 6; ++k) {
    CHECK(static_cast<double>(sp.lambda(k)) == doctest::Approx(oracle[k - 1]).epsilon(1e-10));
    CHECK(sp.multiplicity(k) == 1);
    if (k > 1) CHECK(sp.lambda(k) > sp.lambda(k - 1));
  }
  CHECK(std::abs(sp.lambda(1) - 1) < Real(1e-9));
  CHECK_FALSE(sp.near_three);

  const Field psi = sp.basis(1).col(0);
  const Real cosine = weighted_inner(ref.grid, psi, ref.gs.w) /
                      (weighted_norm(ref.grid, psi) * weighted_norm(ref.grid, ref.gs.w));
  CHECK(std::acos(std::min(Real(1), cosine)) < Real(1e-6));

  const Field w2 = ref.gs.w.cwiseProduct(ref.gs.w);
  for (std::size_t a = 1; a <= 6; ++a) {
    for (std::size_t b = a; b <= 6; ++b) {
      const Real ip = ref.grid.weights.cwiseProduct(w2)
                          .cwiseProduct(sp.basis(a).col(0))
                          .cwiseProduct(sp.basis(b).col(0))
                          .sum();
      CHECK(std::abs(ip - Real(a == b ? 1 : 0)) < Real(1e-10));
    }
  }
  // Each basis vector solves the pencil.
  for (std::size_t k = 1; k <= 6; ++k) {
    const Field v = sp.basis(k).col(0);
    const Field r = ref.op.apply(v) - sp.lambda(k) * w2.cwiseProduct(v);
    CHECK(weighted_norm(ref.grid, r) < Real(1e-8) * weighted_norm(ref.grid, ref.op.apply(v)));
  }
}

TEST_CASE("weighted spectrum on a three-dimensional ball") {
  const DomainSpec d{DomainKind::ball, 3, 0.0, 3.0};
  const auto op = assemble_operator(build_grid<Real>(d, 300), PotentialSpec{});
  const auto gs = solve_ground_state(op);
  const auto sp = weighted_spectrum(op, gs, 4);
  CHECK(std::abs(sp.lambda(1) - 1) < Real(1e-9));
  for (std::size_t k = 1; k <= sp.clusters(); ++k) {
    CHECK(sp.multiplicity(k) == 1);
    if (k > 1) CHECK(sp.lambda(k) > sp.lambda(k - 1));
  }
}
