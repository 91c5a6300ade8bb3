#pragma once

#include <random>

#include "lockbif/continuation.hpp"
#include "lockbif/coupled_system.hpp"
#include "lockbif/locked_algebra.hpp"
#include "lockbif/partition.hpp"
#include "lockbif/radial_operator.hpp"
#include "lockbif/scalar_problem.hpp"

namespace fixtures {

using lockbif::Real;
using Field = lockbif::Vector<Real>;
using Multi = lockbif::MultiField<Real>;

/// Interval (0, pi), a = 1, built once per binary.
struct Reference {
  lockbif::RadialGrid<Real> grid;
  lockbif::SchrodingerOperator<Real> op;
  lockbif::GroundState<Real> gs;
  lockbif::WeightedSpectrum<Real> spectrum;

  explicit Reference(lockbif::Index points)
      : grid(lockbif::build_grid<Real>(lockbif::DomainSpec{}, points)),
        op(lockbif::assemble_operator(grid, lockbif::PotentialSpec{})),
        gs(lockbif::solve_ground_state(op)),
        spectrum(lockbif::weighted_spectrum(op, gs, 6)) {}
};

inline const Reference& reference800() {
  static const Reference ref(800);
  return ref;
}

/// Coarser copy for tests that only need the structure.
inline const Reference& reference200() {
  static const Reference ref(200);
  return ref;
}

inline Field random_field(std::mt19937_64& rng, lockbif::Index m, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Field v(m);
  for (lockbif::Index i = 0; i < m; ++i) v(i) = Real(d(rng));
  return v;
}

inline Multi random_multi(std::mt19937_64& rng, lockbif::Index m, lockbif::Index n, double lo,
                          double hi) {
  Multi u(m, n);
  for (lockbif::Index j = 0; j < n; ++j) u.col(j) = random_field(rng, m, lo, hi);
  return u;
}

inline lockbif::CouplingSpec<Real> coupling(std::initializer_list<double> mu) {
  return lockbif::CouplingSpec<Real>::from(std::vector<double>(mu));
}

}  // namespace fixtures
