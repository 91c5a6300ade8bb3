#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "lockbif/block_sturm.hpp"
#include "lockbif/coupled_system.hpp"
#include "lockbif/locked_algebra.hpp"
#include "lockbif/types.hpp"

namespace lockbif {

/// Partition of the component indices {0..n-1}. Canonical form: each block
/// sorted, blocks ordered by their smallest index (the representative).
/// Text form is 1-based, blocks separated by '|', e.g. "1|2,3".
class Partition {
 public:
  Partition() = default;

  Partition(std::vector<std::vector<Index>> blocks, Index n) : n_(n), blocks_(std::move(blocks)) {
    require(n_ >= 1, Errc::invalid_partition, "empty index set");
    std::vector<int> seen(static_cast<std::size_t>(n_), 0);
    for (auto& b : blocks_) {
      require(!b.empty(), Errc::invalid_partition, "empty block");
      std::sort(b.begin(), b.end());
      for (Index j : b) {
        require(j >= 0 && j < n_, Errc::invalid_partition, "index out of range");
        require(seen[static_cast<std::size_t>(j)]++ == 0, Errc::invalid_partition,
                "index repeated");
      }
    }
    for (int s : seen) require(s == 1, Errc::invalid_partition, "blocks do not cover 1..n");
    std::sort(blocks_.begin(), blocks_.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    block_of_.assign(static_cast<std::size_t>(n_), 0);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      for (Index j : blocks_[b]) block_of_[static_cast<std::size_t>(j)] = static_cast<Index>(b);
    }
  }

  static Partition parse(const std::string& text, Index n) {
    std::vector<std::vector<Index>> blocks;
    std::stringstream outer(text);
    std::string block;
    while (std::getline(outer, block, '|')) {
      std::vector<Index> b;
      std::stringstream inner(block);
      std::string item;
      while (std::getline(inner, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        if (first == std::string::npos) {
          throw Error(Errc::invalid_partition, "empty index in '" + text + "'");
        }
        std::size_t used = 0;
        long value = 0;
        try {
          value = std::stol(item.substr(first), &used);
        } catch (const std::exception&) {
          throw Error(Errc::invalid_partition, "bad index '" + item + "'");
        }
        require(item.find_first_not_of(" \t", first + used) == std::string::npos,
                Errc::invalid_partition, "bad index '" + item + "'");
        b.push_back(static_cast<Index>(value - 1));
      }
      blocks.push_back(std::move(b));
    }
    return Partition(std::move(blocks), n);
  }

  static Partition discrete(Index n) {
    std::vector<std::vector<Index>> blocks;
    for (Index j = 0; j < n; ++j) blocks.push_back({j});
    return Partition(std::move(blocks), n);
  }

  static Partition single_block(Index n) {
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index(0));
    return Partition({all}, n);
  }

  /// {A, A^c} for a proper non-empty A.
  static Partition pair(const std::vector<Index>& a, Index n) {
    std::vector<Index> rest;
    for (Index j = 0; j < n; ++j) {
      if (std::find(a.begin(), a.end(), j) == a.end()) rest.push_back(j);
    }
    require(!a.empty() && !rest.empty(), Errc::invalid_partition, "A must be proper and non-empty");
    return Partition({a, rest}, n);
  }

  Index n() const { return n_; }
  Index size() const { return static_cast<Index>(blocks_.size()); }
  const std::vector<std::vector<Index>>& blocks() const { return blocks_; }
  const std::vector<Index>& block(Index b) const { return blocks_[static_cast<std::size_t>(b)]; }
  Index block_of(Index j) const { return block_of_[static_cast<std::size_t>(j)]; }
  Index representative(Index b) const { return blocks_[static_cast<std::size_t>(b)].front(); }

  /// True when every block of *this lies inside a block of `coarser`.
  bool refines(const Partition& coarser) const {
    for (const auto& b : blocks_) {
      const Index target = coarser.block_of(b.front());
      for (Index j : b) {
        if (coarser.block_of(j) != target) return false;
      }
    }
    return true;
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      if (b > 0) out += '|';
      for (std::size_t k = 0; k < blocks_[b].size(); ++k) {
        if (k > 0) out += ',';
        out += std::to_string(blocks_[b][k] + 1);
      }
    }
    return out;
  }

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.n_ == b.n_ && a.blocks_ == b.blocks_;
  }

 private:
  Index n_ = 0;
  std::vector<std::vector<Index>> blocks_;
  std::vector<Index> block_of_;
};

/// The 2^(n-1) - 1 partitions {A, A^c} with index 1 in A, ordered by the
/// bit pattern of A \ {1}.
inline std::vector<Partition> pair_partitions(Index n) {
  require(n >= 2 && n <= 30, Errc::invalid_partition, "pair partitions need 2 <= n <= 30");
  std::vector<Partition> out;
  const unsigned long full = (1ul << (n - 1)) - 1;
  for (unsigned long mask = 0; mask < full; ++mask) {
    std::vector<Index> a{0};
    for (Index j = 1; j < n; ++j) {
      if (mask & (1ul << (j - 1))) a.push_back(j);
    }
    out.push_back(Partition::pair(a, n));
  }
  return out;
}

/// gamma_j / gamma_i = ((mu_i - beta) / (mu_j - beta))^(1/2).
template <typename Scalar>
Scalar locked_ratio(const CouplingSpec<Scalar>& c, Scalar beta, Index i, Index j) {
  require(beta < c.mu_min(), Errc::out_of_domain, "locking ratios need beta < mu_min");
  return std::sqrt((c.mu(i) - beta) / (c.mu(j) - beta));
}

template <typename Scalar>
struct ReducedState {
  Scalar beta = 0;
  MultiField<Scalar> v;  // one column per block
};

/// rho_j = gamma_j / gamma_rep(block of j).
template <typename Scalar>
Vector<Scalar> embedding_ratios(const Partition& p, const CouplingSpec<Scalar>& c, Scalar beta) {
  Vector<Scalar> rho(c.n());
  for (Index j = 0; j < c.n(); ++j) {
    rho(j) = locked_ratio(c, beta, p.representative(p.block_of(j)), j);
  }
  return rho;
}

/// d rho_j / d beta.
template <typename Scalar>
Vector<Scalar> embedding_ratio_derivatives(const Partition& p, const CouplingSpec<Scalar>& c,
                                           Scalar beta) {
  const Vector<Scalar> rho = embedding_ratios(p, c, beta);
  Vector<Scalar> d(c.n());
  for (Index j = 0; j < c.n(); ++j) {
    const Index r = p.representative(p.block_of(j));
    d(j) = rho(j) * (Scalar(1) / (c.mu(j) - beta) - Scalar(1) / (c.mu(r) - beta)) / 2;
  }
  return d;
}

/// n x m matrix of the embedding: R(j, block_of(j)) = rho_j.
template <typename Scalar>
Matrix<Scalar> embedding_matrix(const Partition& p, const Vector<Scalar>& rho) {
  Matrix<Scalar> r = Matrix<Scalar>::Zero(p.n(), p.size());
  for (Index j = 0; j < p.n(); ++j) r(j, p.block_of(j)) = rho(j);
  return r;
}

template <typename Scalar>
MultiField<Scalar> embed(const Partition& p, const CouplingSpec<Scalar>& c, Scalar beta,
                         const MultiField<Scalar>& v) {
  require(v.cols() == p.size() && p.n() == c.n(), Errc::size_mismatch,
          "reduced state needs one column per block");
  return v * embedding_matrix(p, embedding_ratios(p, c, beta)).transpose();
}

template <typename Scalar>
MultiField<Scalar> project(const Partition& p, const MultiField<Scalar>& u) {
  require(u.cols() == p.n(), Errc::size_mismatch, "project");
  MultiField<Scalar> v(u.rows(), p.size());
  for (Index b = 0; b < p.size(); ++b) v.col(b) = u.col(p.representative(b));
  return v;
}

/// Gradient of J restricted to X^P: column b is sum_{j in b} rho_j F_j(embed(v)).
template <typename Scalar>
MultiField<Scalar> reduced_residual(const Partition& p, const CouplingSpec<Scalar>& c,
                                    const ReducedState<Scalar>& s,
                                    const SchrodingerOperator<Scalar>& op) {
  const Vector<Scalar> rho = embedding_ratios(p, c, s.beta);
  const Matrix<Scalar> r = embedding_matrix(p, rho);
  const SystemState<Scalar> full{s.beta, s.v * r.transpose()};
  return system_residual(full, c, op) * r;
}

/// (i^P)^T H i^P phi in nodal coordinates.
template <typename Scalar>
MultiField<Scalar> reduced_hessian_apply(const Partition& p, const CouplingSpec<Scalar>& c,
                                         const ReducedState<Scalar>& s,
                                         const SchrodingerOperator<Scalar>& op,
                                         const MultiField<Scalar>& phi) {
  const Matrix<Scalar> r = embedding_matrix(p, embedding_ratios(p, c, s.beta));
  const SystemState<Scalar> full{s.beta, s.v * r.transpose()};
  return hessian_apply(full, c, op, MultiField<Scalar>(phi * r.transpose())) * r;
}

/// Reduced Hessian in the product induced by the embedding,
/// sum_b G_b <v_b, v'_b>_omega with G_b = sum_{j in b} rho_j^2.
template <typename Scalar>
BlockTridiagonal<Scalar> reduced_hessian_operator(const Partition& p,
                                                  const CouplingSpec<Scalar>& c,
                                                  const ReducedState<Scalar>& s,
                                                  const SchrodingerOperator<Scalar>& op) {
  const Matrix<Scalar> r = embedding_matrix(p, embedding_ratios(p, c, s.beta));
  const Vector<Scalar> g_isqrt = (r.transpose() * r).diagonal().cwiseSqrt().cwiseInverse();
  const Matrix<Scalar> scaled = r * g_isqrt.asDiagonal();
  auto blocks = coupling_blocks(MultiField<Scalar>(s.v * r.transpose()), c, s.beta);
  for (auto& k : blocks) k = scaled.transpose() * k * scaled;
  return BlockTridiagonal<Scalar>(op.symmetrized(), std::move(blocks));
}

template <typename Scalar>
HessianSpectrum<Scalar> reduced_hessian_spectrum(const Partition& p, const CouplingSpec<Scalar>& c,
                                                 const ReducedState<Scalar>& s,
                                                 const SchrodingerOperator<Scalar>& op,
                                                 Index count, Scalar zero_tol = Scalar(1e-7)) {
  return spectrum_of(reduced_hessian_operator(p, c, s, op), count, zero_tol);
}

/// ||F_j - ratio * F_i||_omega for a state with u_j = ratio * u_i (unchecked).
template <typename Scalar>
Scalar residual_transfer_defect(const CouplingSpec<Scalar>& c, Scalar beta, Index i, Index j,
                                const MultiField<Scalar>& u, const SchrodingerOperator<Scalar>& op,
                                Scalar ratio) {
  const MultiField<Scalar> f = system_residual(SystemState<Scalar>{beta, u}, c, op);
  return weighted_norm(op.grid(), Vector<Scalar>(f.col(j) - ratio * f.col(i)));
}

/// Hidden-symmetry probe: if u_j is locked to u_i with the ratio
/// gamma_j / gamma_i, the j-th residual is ratio times the i-th one for
/// any u, solution or not. Returns the omega-norm of the difference.
template <typename Scalar>
Scalar residual_transfer_check(const CouplingSpec<Scalar>& c, Scalar beta, Index i, Index j,
                               const MultiField<Scalar>& u, const SchrodingerOperator<Scalar>& op) {
  const Scalar ratio = locked_ratio(c, beta, i, j);
  const Scalar scale = std::max(Scalar(1), Scalar(u.col(i).cwiseAbs().maxCoeff()));
  require((u.col(j) - ratio * u.col(i)).cwiseAbs().maxCoeff() <= Scalar(1e-12) * scale,
          Errc::ratio_violated, "u_j is not locked to u_i");
  return residual_transfer_defect(c, beta, i, j, u, op, ratio);
}

/// Finest partition in which every pair in a block has a constant pointwise
/// ratio, measured as the (omega u_i^2)-weighted relative spread of u_j / u_i.
template <typename Scalar>
Partition detect_partition(const MultiField<Scalar>& u, const RadialGrid<Scalar>& grid,
                           Scalar tol = Scalar(1e-6)) {
  const Index n = u.cols();
  for (Index j = 0; j < n; ++j) {
    require(u.col(j).cwiseAbs().maxCoeff() > 0, Errc::zero_component, "component vanishes");
  }
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index(0));
  auto find = [&](Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
    return x;
  };
  for (Index i = 0; i < n; ++i) {
    const Vector<Scalar> ui = u.col(i);
    const Scalar uu = weighted_inner(grid, ui, ui);
    for (Index j = i + 1; j < n; ++j) {
      const Vector<Scalar> uj = u.col(j);
      const Scalar ratio = weighted_inner(grid, ui, uj) / uu;
      const Scalar misfit = weighted_norm(grid, Vector<Scalar>(uj - ratio * ui));
      if (misfit <= tol * weighted_norm(grid, uj)) {
        const Index a = find(i);
        const Index b = find(j);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      }
    }
  }
  std::vector<std::vector<Index>> blocks;
  std::vector<Index> slot(static_cast<std::size_t>(n), -1);
  for (Index j = 0; j < n; ++j) {
    const Index root = find(j);
    if (slot[static_cast<std::size_t>(root)] < 0) {
      slot[static_cast<std::size_t>(root)] = static_cast<Index>(blocks.size());
      blocks.emplace_back();
    }
    blocks[static_cast<std::size_t>(slot[static_cast<std::size_t>(root)])].push_back(j);
  }
  return Partition(std::move(blocks), n);
}

}  // namespace lockbif
