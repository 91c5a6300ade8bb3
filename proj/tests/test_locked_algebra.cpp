#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"

using namespace lockbif;
using fixtures::Field;

namespace {

double d(Real x) { return static_cast<double>(x); }

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::invariant_violation;
}

}  // namespace

TEST_CASE("g, f and gamma at a sample coupling") {
  const auto c = fixtures::coupling({1, 2, 3});
  // Exact rationals: g(-1/2) = 34/105, f = 122/17.
  CHECK(d(eval_g(c, Real(-0.5))) == doctest::Approx(34.0 / 105.0).epsilon(1e-15));
  CHECK(d(eval_f(c, Real(-0.5))) == doctest::Approx(122.0 / 17.0).epsilon(1e-15));
  const Field gamma = gammas(c, Real(-0.5));
  CHECK(d(gamma(0)) == doctest::Approx(0.816496580927726));
  CHECK(d(gamma(1)) == doctest::Approx(0.6324555320336759));
  CHECK(d(gamma(2)) == doctest::Approx(0.5345224838248488));
  CHECK(d(eval_g(c, Real(0))) == 1.0);
  CHECK(d(eval_f(c, Real(0))) == 3.0);

  // Root computed to 30 digits with an independent solver.
  CHECK(std::abs(beta_bar(c) - Real(-0.879385241571816768108L)) < Real(1e-15));
  CHECK(code_of([&] { eval_g(c, Real(2)); }) == Errc::pole);
  CHECK(code_of([&] { eval_f(c, beta_bar(c)); }) != Errc::invariant_violation);
}

TEST_CASE("locked coefficients and admissibility") {
  const auto c = fixtures::coupling({1, 2, 3});
  const LockedBranchAlgebra<Real> alg(c);
  CHECK(alg.in_lower_interval(Real(-0.5)));
  CHECK_FALSE(alg.admissible(Real(-0.95)));
  CHECK_FALSE(alg.admissible(Real(1.5)));
  CHECK(alg.in_upper_interval(Real(4)));

  for (Real beta : {Real(-0.8), Real(-0.3), Real(0.5), Real(4), Real(10)}) {
    const auto co = gammas_alphas(c, beta);
    const Real g = eval_g(c, beta);
    for (Index j = 0; j < 3; ++j) {
      CHECK(std::abs(co.alpha(j) - 1 / std::sqrt((c.mu(j) - beta) * g)) < Real(1e-15));
    }
    CHECK(co.gamma.has_value() == (beta < 1));
  }
  CHECK(code_of([&] { gammas_alphas(c, Real(-0.9)); }) == Errc::out_of_domain);
  CHECK(code_of([&] { gammas_alphas(c, Real(2.5)); }) == Errc::out_of_domain);
  CHECK(code_of([&] { gammas(c, Real(1.5)); }) == Errc::out_of_domain);
}

TEST_CASE("equal mu closed forms") {
  for (int n : {2, 3, 5}) {
    const Real m = 2;
    const auto c = CouplingSpec<Real>(Field::Constant(n, m));
    CHECK(std::abs(beta_bar(c) + m / (n - 1)) < Real(1e-15));
    for (Real beta : {Real(-0.4), Real(0.3), Real(1.2)}) {
      const Real g = (m + (n - 1) * beta) / (m - beta);
      CHECK(std::abs(eval_g(c, beta) - g) < Real(1e-15));
      const Field alpha = gammas_alphas(c, beta).alpha;
      for (Index j = 0; j < n; ++j) {
        CHECK(std::abs(alpha(j) - 1 / std::sqrt(m + (n - 1) * beta)) < Real(1e-15));
      }
    }
    // f(beta) = lambda  <=>  beta = m (3 - lambda) / ((n - 1)(lambda - 1) + 2)
    for (Real lambda : {Real(2), Real(4), Real(9.5)}) {
      const Real beta = f_inverse(c, lambda);
      const Real expected = m * (3 - lambda) / ((n - 1) * lambda - (n - 1) + 2);
      CHECK(std::abs(beta - expected) < Real(1e-14));
    }
  }
}

TEST_CASE("f inverse round trip and monotonicity") {
  const auto c = fixtures::coupling({1, 2, 3});
  const Real bbar = beta_bar(c);
  Real previous = std::numeric_limits<Real>::infinity();
  for (int i = 1; i < 40; ++i) {
    const Real beta = bbar + (1 - bbar) * Real(i) / 40;
    const Real f = eval_f(c, beta);
    CHECK(f < previous);
    CHECK(f > 1);
    previous = f;
    CHECK(std::abs(f_inverse(c, f) - beta) < Real(1e-13));
  }
  CHECK(code_of([&] { f_inverse(c, Real(1)); }) == Errc::lambda_not_above_one);
  CHECK(code_of([&] { f_inverse(c, Real(0.5)); }) == Errc::lambda_not_above_one);
  // Root of f(beta) = lambda_2 of the reference problem, 30-digit solver.
  CHECK(std::abs(f_inverse(c, Real(3.9997634537994L)) - Real(-0.209482589636829195L)) < Real(1e-13));
}

TEST_CASE("coupling matrix spectrum") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mu_dist(0.5, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 5;
    std::vector<double> mu(static_cast<std::size_t>(n));
    for (auto& m : mu) m = mu_dist(rng);
    const auto c = CouplingSpec<Real>::from(mu);
    const Real bbar = beta_bar(c);
    std::uniform_real_distribution<double> beta_dist(0.02, 0.98);
    const Real beta = bbar + (c.mu_min() - bbar) * Real(beta_dist(rng));
    const auto cd = matrix_CD(c, beta);
    const Field gamma = gammas(c, beta);

    // D gamma = g gamma, and D b = b for b orthogonal to gamma.
    CHECK((cd.D * gamma - eval_g(c, beta) * gamma).norm() < Real(1e-12) * gamma.norm());
    const auto dec = eigen_C(c, beta);
    for (Index j = 0; j < dec.b_raw.cols(); ++j) {
      const Field b = dec.b_raw.col(j);
      CHECK(std::abs(b.dot(gamma)) < Real(1e-14));
      CHECK((cd.D * b - b).norm() < Real(1e-12) * b.norm());
    }
    const Matrix<Real> t = dec.T;
    CHECK((t.transpose() * t - Matrix<Real>::Identity(n, n)).norm() < Real(1e-13));
    CHECK(std::abs(t.determinant() - 1) < Real(1e-13));
    Matrix<Real> expected = Matrix<Real>::Identity(n, n) * dec.f_value;
    expected(0, 0) = 3;
    CHECK((t.transpose() * cd.C * t - expected).norm() < Real(1e-11) * dec.f_value);

    const Field ev = Eigen::SelfAdjointEigenSolver<Matrix<Real>>(cd.C).eigenvalues();
    int threes = 0;
    int fs = 0;
    for (Index k = 0; k < n; ++k) {
      if (std::abs(ev(k) - 3) < Real(1e-10)) ++threes;
      if (std::abs(ev(k) - dec.f_value) < Real(1e-10) * dec.f_value) ++fs;
    }
    CHECK(threes >= 1);
    CHECK(fs >= n - 1);
  }
}

TEST_CASE("eigen decomposition at beta = 0") {
  const auto c = fixtures::coupling({1, 2, 3});
  const auto dec = eigen_C(c, Real(0));
  CHECK(dec.degenerate);
  CHECK((dec.T - Matrix<Real>::Identity(3, 3)).norm() == 0);
  CHECK(matrix_CD(c, Real(0)).C.isApprox(3 * Matrix<Real>::Identity(3, 3)));
}

TEST_CASE("locked solutions solve the system") {
  const auto& ref = fixtures::reference200();
  const auto c = fixtures::coupling({1, 2, 3});
  for (Real beta : {Real(-0.85), Real(-0.4), Real(0), Real(0.6), Real(5)}) {
    const SystemState<Real> s{beta, locked_solution(ref.gs.w, c, beta)};
    CHECK(s.positive());
    CHECK(residual_norm(s, c, ref.op) < Real(1e-10));
  }

  const auto eq = fixtures::coupling({1, 1});
  const Field dir = (Field(2) << 3, 4).finished();
  const auto u = locked_family_equal_mu(ref.gs.w, eq, dir);
  const Index i = 50;
  CHECK(d(u(i, 0) / ref.gs.w(i)) == doctest::Approx(0.6));
  CHECK(d(u(i, 1) / ref.gs.w(i)) == doctest::Approx(0.8));
  CHECK(residual_norm(SystemState<Real>{Real(1), u}, eq, ref.op) < Real(1e-10));
  CHECK(code_of([&] { locked_family_equal_mu(ref.gs.w, fixtures::coupling({1, 2}), dir); }) ==
        Errc::unequal_mu);
  CHECK(code_of([&] { locked_family_equal_mu(ref.gs.w, eq, Field((Field(2) << 1, -1).finished())); }) ==
        Errc::nonpositive_direction);
}

TEST_CASE("bifurcation points of the reference problem") {
  const auto& ref = fixtures::reference800();
  const auto c = fixtures::coupling({1, 2, 3});
  const auto pts = bifurcation_points(c, ref.spectrum);
  REQUIRE(pts.size() == 5);
  // beta_k = f^{-1}(lambda_k) with lambda_k from the dense oracle.
  const double expected[] = {-0.2094825896368, -0.5789889030553, -0.7113019680682,
                             -0.7725166695755, -0.8056119320282};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(pts[i].k == int(i + 2));
    CHECK(d(pts[i].beta) == doctest::Approx(expected[i]).epsilon(1e-10));
    CHECK(pts[i].kernel_dim == 2);
    CHECK(pts[i].beta > beta_bar(c));
  }
}
