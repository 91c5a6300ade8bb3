#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace lockbif {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// One field per column: rows are grid nodes, columns are components.
template <typename Scalar>
using MultiField = Matrix<Scalar>;

using Index = Eigen::Index;

/// Working precision of the CLI and the acceptance suite. Grid operators carry
/// a 1/h^2 factor, so identities that must hold to 1e-12 at M = 800 need more
/// than 53 mantissa bits.
using Real = long double;

enum class Errc {
  invalid_domain,
  too_few_points,
  size_mismatch,
  nonpositive_operator,
  eigensolver_failure,
  no_convergence,
  positivity_lost,
  degenerate_ground_state,
  pole,
  out_of_domain,
  lambda_not_above_one,
  degenerate_spectrum,
  insufficient_spectrum,
  at_bifurcation,
  wrong_multiplicity,
  ratio_violated,
  zero_component,
  not_pair_partition,
  empty_kernel,
  predictor_diverged,
  newton_failure,
  invalid_partition,
  invalid_config,
  unequal_mu,
  nonpositive_direction,
  invariant_violation,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_domain: return "invalid-domain";
    case Errc::too_few_points: return "too-few-points";
    case Errc::size_mismatch: return "size-mismatch";
    case Errc::nonpositive_operator: return "nonpositive-operator";
    case Errc::eigensolver_failure: return "eigensolver-failure";
    case Errc::no_convergence: return "no-convergence";
    case Errc::positivity_lost: return "positivity-lost";
    case Errc::degenerate_ground_state: return "degenerate-ground-state";
    case Errc::pole: return "pole";
    case Errc::out_of_domain: return "out-of-domain";
    case Errc::lambda_not_above_one: return "lambda-not-above-one";
    case Errc::degenerate_spectrum: return "degenerate-spectrum";
    case Errc::insufficient_spectrum: return "insufficient-spectrum";
    case Errc::at_bifurcation: return "at-bifurcation";
    case Errc::wrong_multiplicity: return "wrong-multiplicity";
    case Errc::ratio_violated: return "ratio-violated";
    case Errc::zero_component: return "zero-component";
    case Errc::not_pair_partition: return "not-pair-partition";
    case Errc::empty_kernel: return "empty-kernel";
    case Errc::predictor_diverged: return "predictor-diverged";
    case Errc::newton_failure: return "newton-failure";
    case Errc::invalid_partition: return "invalid-partition";
    case Errc::invalid_config: return "invalid-config";
    case Errc::unequal_mu: return "unequal-mu";
    case Errc::nonpositive_direction: return "nonpositive-direction";
    case Errc::invariant_violation: return "invariant-violation";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool condition, Errc code, const std::string& what) {
  if (!condition) {
    throw Error(code, what);
  }
}

}  // namespace lockbif
