// Copyright 2026 The loccdisc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LOCCDISC_EXPANSION_HPP
#define LOCCDISC_EXPANSION_HPP

#include <vector>

#include "loccdisc/types.hpp"

namespace loccdisc {

/// Weight below which a term side counts as dead. Dead sides carry no
/// direction vector and the cached pair overlap is 0 by convention.
inline constexpr double kDeadWeight = 1e-14;

/// One term of an expansion over an Alice basis vector: the probability
/// mass each state puts on it and Bob's conditional unit vectors.
struct ExpansionTerm {
  double phi_weight = 0.0;
  double psi_weight = 0.0;
  Vector phi_vec;        // unit when phi_weight is live
  Vector psi_vec;        // unit when psi_weight is live
  Complex pair_overlap{0.0, 0.0};  // <phi_vec|psi_vec>, 0 if a side is dead

  bool phi_live() const { return phi_weight > kDeadWeight; }
  bool psi_live() const { return psi_weight > kDeadWeight; }
  bool live() const { return phi_live() || psi_live(); }

  /// sqrt(phi_weight * psi_weight) * pair_overlap, the term's contribution
  /// to the total state overlap.
  Complex product() const {
    return std::sqrt(phi_weight * psi_weight) * pair_overlap;
  }
};

/// Both states written over one orthonormal Alice basis (the columns of
/// `basis`). Rotations below transform terms and basis together so the
/// reconstructed states never change.
struct AliceExpansion {
  Matrix basis;  // dim_a x dim_a unitary
  std::vector<ExpansionTerm> terms;
  int dim_b = 0;

  int dim_a() const { return static_cast<int>(basis.rows()); }
  int size() const { return static_cast<int>(terms.size()); }

  /// Total overlap carried by the expansion, sum of term products.
  Complex total_product() const;

  BipartiteState reconstruct_phi() const;
  BipartiteState reconstruct_psi() const;
};

/// The 2x2 interaction data of a term pair, the input to the phase and
/// angle solvers. diag_* are the two diagonal products; cross_* the two
/// off-diagonal ones; the *_inner fields the weighted same-state inner
/// products feeding the weight-update scalars.
struct CorrelationBlock {
  int i = 0;
  int j = 0;
  double diag_i = 0.0;        // Re of sqrt(s_i t_i) <phi_i|psi_i>
  double diag_j = 0.0;
  Complex cross_ij{0.0, 0.0}; // sqrt(s_i t_j) <phi_i|psi_j>
  Complex cross_ji{0.0, 0.0}; // sqrt(s_j t_i) <phi_j|psi_i>
  Complex phi_inner{0.0, 0.0};  // sqrt(s_i s_j) <phi_i|phi_j>
  Complex psi_inner{0.0, 0.0};  // sqrt(t_i t_j) <psi_i|psi_j>

  /// Weight-update scalars at a given rotation phase; mix_phi and mix_psi
  /// are real for any omega, mix_cross only for the solved omega.
  double mix_phi(double omega) const;
  double mix_psi(double omega) const;
  Complex mix_cross(double omega) const;
};

CorrelationBlock make_block(const AliceExpansion& e, int i, int j);

/// One two-term basis rotation: the unitary
///   [ cos(theta)              sin(theta) e^{-i omega} ]
///   [ sin(theta) e^{i omega}  -cos(theta)             ]
/// applied to terms (i, j) and compensated on the basis columns.
struct RotationStep {
  int i = 0;
  int j = 0;
  double theta = 0.0;
  double omega = 0.0;
};

/// Expand both states of the instance over the given Alice basis.
AliceExpansion expand_in_basis(const DiscriminationInstance& inst,
                               const Matrix& basis,
                               const Tolerances& tol = {});

/// The phase that makes the rotated diagonal products real for every
/// rotation angle, given a block whose diagonals are already real.
double solve_omega(const CorrelationBlock& block, const Tolerances& tol = {});

AliceExpansion rotate_pair(const AliceExpansion& e, const RotationStep& step,
                           const Tolerances& tol = {});

/// Rotate until every term's pair overlap is real. Requires the total
/// overlap to be real (canonicalized input).
AliceExpansion make_diagonal_real(const AliceExpansion& e,
                                  const Tolerances& tol = {});

/// Rotate until phi_weight == psi_weight for every term. Requires real
/// diagonals; preserves them.
AliceExpansion equalize_weights(const AliceExpansion& e,
                                const PriorPair& prior,
                                const Tolerances& tol = {});

/// Step log of fix_ratios: the equality/slack potential after each
/// accepted rotation.
struct RatioFixLog {
  std::vector<int> potentials;
};

/// Rotate until every live term satisfies
///   pair_overlap <= sqrt(s*phi_weight / (t*psi_weight)),
/// preserving real diagonals and s*phi_weight <= t*psi_weight. Only valid
/// when sqrt(s/t) >= total overlap (up to eps_opt).
AliceExpansion fix_ratios(const AliceExpansion& e, const PriorPair& prior,
                          const Tolerances& tol = {},
                          RatioFixLog* log = nullptr);

/// Termination measure of fix_ratios: twice the number of terms at the
/// ratio equality plus the number with strict slack, both classified with
/// tolerance `tol`.
int potential(const AliceExpansion& e, const PriorPair& prior, double tol);

/// Rotate until all live term products agree (each equals the total
/// overlap divided by the live-term count). Requires real diagonals.
AliceExpansion equalize_products(const AliceExpansion& e,
                                 const Tolerances& tol = {});

/// All expansion invariants against the instance it was derived from:
/// basis unitarity, weight sums, unit vectors, cached overlaps,
/// reconstruction of both states, and overlap preservation.
CheckReport check_expansion(const AliceExpansion& e,
                            const DiscriminationInstance& inst,
                            const Tolerances& tol = {});

/// Real roots of A x^2 + B x + C = 0, robust to small leading
/// coefficients. Returns 0, 1 or 2 roots.
int solve_quadratic(double a, double b, double c, double roots[2]);

}  // namespace loccdisc

#endif  // LOCCDISC_EXPANSION_HPP
