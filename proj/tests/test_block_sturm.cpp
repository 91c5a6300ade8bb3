#include <doctest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "lockbif/block_sturm.hpp"

using namespace lockbif;

namespace {

BlockTridiagonal<double> random_block(std::mt19937_64& rng, Index m, Index p) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  SymTridiagonal<double> s;
  s.diag.resize(m);
  s.off.resize(m - 1);
  for (Index i = 0; i < m; ++i) s.diag(i) = 2.0 + d(rng);
  for (Index i = 0; i + 1 < m; ++i) s.off(i) = -1.0 + 0.3 * d(rng);
  std::vector<Matrix<double>> blocks;
  for (Index i = 0; i < m; ++i) {
    Matrix<double> k(p, p);
    for (Index a = 0; a < p; ++a)
      for (Index b = 0; b < p; ++b) k(a, b) = d(rng);
    blocks.push_back(k + k.transpose());
  }
  return BlockTridiagonal<double>(s, blocks);
}

}  // namespace

TEST_CASE("block inertia matches a dense eigensolver") {
  std::mt19937_64 rng(3);
  for (Index p : {1, 2, 3, 4}) {
    const auto h = random_block(rng, 30, p);
    const Vector<double> ev = Eigen::SelfAdjointEigenSolver<Matrix<double>>(h.dense()).eigenvalues();
    for (Index k = 0; k + 1 < ev.size(); k += 3) {
      const double mid = (ev(k) + ev(k + 1)) / 2;
      CHECK(h.count_below(mid) == k + 1);
    }
    CHECK(h.count_below(ev(0) - 1) == 0);
    CHECK(h.count_below(ev(ev.size() - 1) + 1) == h.dimension());

    const Vector<double> low = h.lowest_eigenvalues(8);
    for (Index k = 0; k < 8; ++k) CHECK(low(k) == doctest::Approx(ev(k)).epsilon(1e-10));
    auto [lo, hi] = h.gershgorin();
    CHECK(lo <= ev(0));
    CHECK(hi >= ev(ev.size() - 1));
  }
}

TEST_CASE("block apply matches the dense matrix") {
  std::mt19937_64 rng(5);
  const auto h = random_block(rng, 12, 3);
  Matrix<double> x = Matrix<double>::Random(12, 3);
  const Matrix<double> y = h.apply(x);
  Vector<double> flat(36);
  for (Index i = 0; i < 12; ++i) flat.segment(3 * i, 3) = x.row(i).transpose();
  const Vector<double> dy = h.dense() * flat;
  for (Index i = 0; i < 12; ++i)
    for (Index j = 0; j < 3; ++j) CHECK(y(i, j) == doctest::Approx(dy(3 * i + j)));
}

TEST_CASE("repeated eigenvalues are counted with multiplicity") {
  // Decoupled identical components: every scalar eigenvalue appears p times.
  SymTridiagonal<double> s;
  s.diag = Vector<double>::Constant(20, 2.0);
  s.off = Vector<double>::Constant(19, -1.0);
  std::vector<Matrix<double>> blocks(20, Matrix<double>::Zero(3, 3));
  const BlockTridiagonal<double> h(s, blocks);
  const Vector<double> low = h.lowest_eigenvalues(6);
  const double pi = std::acos(-1.0);
  const double e1 = 2 - 2 * std::cos(pi / 21);
  const double e2 = 2 - 2 * std::cos(2 * pi / 21);
  for (Index k = 0; k < 3; ++k) CHECK(low(k) == doctest::Approx(e1));
  for (Index k = 3; k < 6; ++k) CHECK(low(k) == doctest::Approx(e2));
  CHECK(h.count_below((e1 + e2) / 2) == 3);
}
