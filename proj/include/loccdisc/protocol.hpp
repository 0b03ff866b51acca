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

#ifndef LOCCDISC_PROTOCOL_HPP
#define LOCCDISC_PROTOCOL_HPP

#include <cstdint>
#include <memory>
#include <optional>

#include "loccdisc/expansion.hpp"
#include "loccdisc/optimum.hpp"
#include "loccdisc/types.hpp"

namespace loccdisc {

/// A label whose two joint states are orthogonal: Alice and Bob finish it
/// with the perfect-discrimination subprotocol.
struct OrthogonalBlock {
  int label = 0;
  double phi_weight = 0.0;
  double psi_weight = 0.0;
  BipartiteState phi_block;  // unit A(x)B state reached from phi
  BipartiteState psi_block;  // unit A(x)B state reached from psi
};

/// A label on which both states stay product over a single Alice basis
/// vector, with nonnegative ratio-bounded Bob overlap.
struct RatioTerm {
  int label = 0;
  Vector alice_vec;  // Alice basis column carrying this label
  double phi_weight = 0.0;
  double psi_weight = 0.0;
  Vector phi_vec;  // Bob's state given phi
  Vector psi_vec;  // Bob's state given psi
  double pair_overlap = 0.0;
};

/// Output of the ancilla splitting: orthogonal blocks (labels < m) plus
/// ratio terms, together with the isometry from Alice's original space
/// into the label-extended space that realizes the split.
struct AncillaExpansion {
  int dim_a = 0;
  int dim_b = 0;
  int labels = 0;  // N; extended Alice space has dimension labels*dim_a
  std::vector<OrthogonalBlock> blocks;
  std::vector<RatioTerm> ratio_terms;
  Matrix isometry;  // (labels*dim_a) x dim_a, isometry.adjoint()*isometry = I

  int block_count() const { return static_cast<int>(blocks.size()); }
};

/// Priors (s*, t*) with sqrt(s*/t*) equal to the overlap; the quadratic
/// case runs the construction pretending these were the preparation odds.
struct EffectivePriors {
  double phi = 0.0;
  double psi = 0.0;
};

struct LoccProtocol;

enum class BranchAction {
  Measure,        // Bob applies the branch measurement
  Walgate,        // descend into the perfect-discrimination subprotocol
  CertainPhi,     // the label is reachable only from phi
  CertainPsi,     // the label is reachable only from psi
  Inconclusive,   // identical states: give up
};

const char* branch_action_name(BranchAction a);

/// One outcome of Alice's label measurement, with the true posteriors and
/// Bob's follow-up.
struct OutcomeBranch {
  int label = 0;
  double probability = 0.0;  // s*s_i + t*t_i under the true priors
  double post_phi = 0.0;
  double post_psi = 0.0;
  BranchAction action = BranchAction::Inconclusive;

  // Measure branches.
  Measurement measurement;
  Vector bob_phi, bob_psi;   // Bob's conditional states
  double pair_overlap = 0.0;

  // Walgate branches.
  std::shared_ptr<const LoccProtocol> subprotocol;
};

struct LoccProtocol {
  DiscriminationInstance instance;
  CaseTag case_tag = CaseTag::Linear;
  std::optional<EffectivePriors> effective;  // set in the quadratic case
  AncillaExpansion ancilla;
  std::vector<OutcomeBranch> branches;
  double analytic_success = 0.0;
};

struct SimulationReport {
  long long trials = 0;
  long long correct_phi = 0;
  long long correct_psi = 0;
  long long inconclusive = 0;
  long long errors = 0;
  double empirical_success = 0.0;
  double analytic_success = 0.0;
  std::uint64_t seed = 0;
};

/// (s*, t*) solving sqrt(s*/t*) = c with s* + t* = 1. Requires c > 0.
EffectivePriors effective_priors(double c);

/// Outcome probability and posteriors of one label under the true priors.
struct BranchPosteriors {
  double probability = 0.0;
  double post_phi = 0.0;
  double post_psi = 0.0;
};

BranchPosteriors branch_posteriors(const PriorPair& prior, double phi_weight,
                                   double psi_weight);

/// Lemma-4 style split: cancel negative term products pairwise into
/// orthogonal blocks using fresh labels; everything left has nonnegative
/// overlap. construction_prior is the prior pair the ratio bound is
/// certified against.
AncillaExpansion split_terms(const AliceExpansion& e,
                             const PriorPair& construction_prior,
                             const Tolerances& tol = {});

/// Perfect-discrimination protocol for an orthogonal pair of bipartite
/// states: rotate the expansion until every term product vanishes, then
/// discriminate Bob's orthogonal conditionals per outcome.
LoccProtocol walgate_subprotocol(const BipartiteState& phi,
                                 const BipartiteState& psi,
                                 double prior_phi = 0.5,
                                 const Tolerances& tol = {});

/// Intermediate expansions of the protocol pipeline, for stage-by-stage
/// verification.
struct BuildTrace {
  bool ran_pipeline = false;
  PriorPair construction_prior;
  AliceExpansion initial;
  AliceExpansion real_diagonals;
  AliceExpansion equal_weights;
  AliceExpansion ratio_bounded;
  RatioFixLog ratio_log;
};

/// The full construction: expansion pipeline under the case-appropriate
/// priors, ancilla split, and per-label actions with true posteriors.
LoccProtocol build_protocol(const DiscriminationInstance& inst,
                            const Tolerances& tol = {},
                            BuildTrace* trace = nullptr);

/// Success probability recomputed from the branch data (closed form per
/// branch regime), independent of the value cached at build time.
double analytic_success(const LoccProtocol& protocol);

/// Success probability recomputed from Born weights of the stored
/// measurement operators; a second route that must agree with
/// analytic_success.
double born_success(const LoccProtocol& protocol);

/// Largest analytic probability, over branches, of the wrong conclusion:
/// psi reaching ConcludePhi or phi reaching ConcludePsi.
double max_cross_error(const LoccProtocol& protocol);

/// Monte Carlo run of the protocol. Each trial draws from its own
/// substream derived from (seed, trial index), so tallies are independent
/// of execution order.
SimulationReport simulate(const LoccProtocol& protocol,
                          const DiscriminationInstance& inst, long long trials,
                          std::uint64_t seed);

/// Protocol-level invariants: branch probabilities and posteriors, POVM
/// validity, zero-error residuals, ancilla bookkeeping (isometry, Gram
/// preservation, block orthogonality, ratio bounds), success optimality,
/// and the quadratic-case structure when applicable.
CheckReport check_protocol(const LoccProtocol& protocol,
                           const Tolerances& tol = {});

}  // namespace loccdisc

#endif  // LOCCDISC_PROTOCOL_HPP
