#include <doctest.h>

#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "lockbif/tridiagonal.hpp"

using namespace lockbif;

namespace {

SymTridiagonal<double> random_tridiagonal(std::mt19937_64& rng, Index m) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  SymTridiagonal<double> t;
  t.diag.resize(m);
  t.off.resize(m - 1);
  for (Index i = 0; i < m; ++i) t.diag(i) = 4.0 + d(rng);
  for (Index i = 0; i + 1 < m; ++i) t.off(i) = d(rng);
  return t;
}

Matrix<double> dense(const SymTridiagonal<double>& t) {
  const Index m = t.size();
  Matrix<double> a = Matrix<double>::Zero(m, m);
  a.diagonal() = t.diag;
  for (Index i = 0; i + 1 < m; ++i) a(i, i + 1) = a(i + 1, i) = t.off(i);
  return a;
}

}  // namespace

TEST_CASE("sturm count matches a dense eigensolver") {
  std::mt19937_64 rng(1);
  const auto t = random_tridiagonal(rng, 40);
  const Vector<double> ev = Eigen::SelfAdjointEigenSolver<Matrix<double>>(dense(t)).eigenvalues();
  for (Index k = 0; k + 1 < ev.size(); ++k) {
    const double mid = (ev(k) + ev(k + 1)) / 2;
    CHECK(sturm_count(t, Vector<double>(), mid) == k + 1);
  }
}

TEST_CASE("pencil eigenvalues and vectors match the generalized dense problem") {
  std::mt19937_64 rng(2);
  const Index m = 30;
  const auto t = random_tridiagonal(rng, m);
  std::uniform_real_distribution<double> d(0.5, 2.0);
  Vector<double> weight(m);
  for (Index i = 0; i < m; ++i) weight(i) = d(rng);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix<double>> ges(dense(t), Matrix<double>(weight.asDiagonal()));
  const Vector<double> values = pencil_eigenvalues(t, weight, 5);
  for (Index k = 0; k < 5; ++k) CHECK(values(k) == doctest::Approx(ges.eigenvalues()(k)).epsilon(1e-12));

  std::vector<Index> clusters{0, 1, 2, 3, 4};
  const Matrix<double> x = pencil_eigenvectors(t, weight, values, clusters);
  for (Index k = 0; k < 5; ++k) {
    const Vector<double> v = x.col(k);
    const Vector<double> r = t.apply(v) - values(k) * weight.cwiseProduct(v);
    CHECK(r.norm() < 1e-10);
    CHECK(v.dot(weight.cwiseProduct(v)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pivoted tridiagonal solve agrees with dense LU") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const Index m = 25;
  Vector<double> lower(m - 1), diag(m), upper(m - 1), rhs(m);
  for (Index i = 0; i < m; ++i) {
    diag(i) = 0.1 * d(rng);  // weak diagonal forces row interchanges
    rhs(i) = d(rng);
  }
  for (Index i = 0; i + 1 < m; ++i) {
    lower(i) = d(rng);
    upper(i) = d(rng);
  }
  Matrix<double> a = Matrix<double>::Zero(m, m);
  a.diagonal() = diag;
  for (Index i = 0; i + 1 < m; ++i) {
    a(i + 1, i) = lower(i);
    a(i, i + 1) = upper(i);
  }
  const Vector<double> x = solve_tridiagonal(lower, diag, upper, rhs);
  const Vector<double> ref = a.partialPivLu().solve(rhs);
  CHECK((x - ref).norm() < 1e-10 * ref.norm());
}
