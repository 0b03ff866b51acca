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

#include "loccdisc/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "loccdisc/core.hpp"

namespace loccdisc {

const char* branch_action_name(BranchAction a) {
  switch (a) {
    case BranchAction::Measure: return "measure";
    case BranchAction::Walgate: return "walgate";
    case BranchAction::CertainPhi: return "certain_phi";
    case BranchAction::CertainPsi: return "certain_psi";
    case BranchAction::Inconclusive: return "inconclusive";
  }
  return "?";
}

EffectivePriors effective_priors(double c) {
  if (c <= 0.0 || c > 1.0 + 1e-10)
    throw std::invalid_argument("effective_priors: overlap must lie in (0,1]");
  c = std::min(c, 1.0);
  const double denom = 1.0 + c * c;
  return {c * c / denom, 1.0 / denom};
}

BranchPosteriors branch_posteriors(const PriorPair& prior, double phi_weight,
                                   double psi_weight) {
  if (phi_weight < 0.0 || psi_weight < 0.0)
    throw std::invalid_argument("branch_posteriors: negative weight");
  if (phi_weight <= 0.0 && psi_weight <= 0.0)
    throw std::invalid_argument("branch_posteriors: both weights zero");
  BranchPosteriors bp;
  bp.probability = prior.phi * phi_weight + prior.psi * psi_weight;
  if (bp.probability <= 0.0)
    throw std::invalid_argument("branch_posteriors: unreachable branch");
  bp.post_phi = prior.phi * phi_weight / bp.probability;
  bp.post_psi = prior.psi * psi_weight / bp.probability;
  return bp;
}

namespace {

Vector kron_ab(const Vector& alice, const Vector& bob) {
  const Eigen::Index da = alice.size(), db = bob.size();
  Vector out(da * db);
  for (Eigen::Index p = 0; p < da; ++p)
    out.segment(p * db, db) = alice(p) * bob;
  return out;
}

// Extended state assembled from the listed parts; the label-alpha slice of
// length dim_a*dim_b starts at alpha*dim_a*dim_b.
Vector assemble_extended(const AncillaExpansion& anc, bool phi_side) {
  const Eigen::Index joint = static_cast<Eigen::Index>(anc.dim_a) * anc.dim_b;
  Vector out = Vector::Zero(anc.labels * joint);
  for (const auto& blk : anc.blocks) {
    const double w = phi_side ? blk.phi_weight : blk.psi_weight;
    const BipartiteState& state = phi_side ? blk.phi_block : blk.psi_block;
    if (w <= kDeadWeight) continue;
    out.segment(blk.label * joint, joint) += std::sqrt(w) * state.amplitudes;
  }
  for (const auto& rt : anc.ratio_terms) {
    const double w = phi_side ? rt.phi_weight : rt.psi_weight;
    const Vector& bob = phi_side ? rt.phi_vec : rt.psi_vec;
    if (w <= kDeadWeight || bob.size() == 0) continue;
    out.segment(rt.label * joint, joint) +=
        std::sqrt(w) * kron_ab(rt.alice_vec, bob);
  }
  return out;
}

// Extended state obtained by actually applying the tracked isometry.
Vector apply_isometry(const AncillaExpansion& anc, const BipartiteState& s) {
  const Eigen::Index da = anc.dim_a, db = anc.dim_b;
  const Eigen::Index rows = anc.isometry.rows();
  Vector out = Vector::Zero(rows * db);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index q = 0; q < da; ++q) {
      const Complex v = anc.isometry(r, q);
      if (v == Complex{0.0, 0.0}) continue;
      out.segment(r * db, db) += v * s.amplitudes.segment(q * db, db);
    }
  }
  return out;
}

struct ProtoTerm {
  int orig = 0;       // index of the source expansion term
  double fraction = 0.0;
  double phi_weight = 0.0;
  double psi_weight = 0.0;
  double product = 0.0;

  double pair_overlap(const AliceExpansion& e) const {
    const ExpansionTerm& t = e.terms[orig];
    return (t.phi_live() && t.psi_live()) ? t.pair_overlap.real() : 0.0;
  }
};

ProtoTerm scaled(const ProtoTerm& p, double f) {
  return {p.orig, p.fraction * f, p.phi_weight * f, p.psi_weight * f,
          p.product * f};
}

}  // namespace

AncillaExpansion split_terms(const AliceExpansion& e,
                             const PriorPair& construction_prior,
                             const Tolerances& tol) {
  const int n = e.size();
  std::vector<ProtoTerm> protos;
  std::vector<int> dead;
  for (int k = 0; k < n; ++k) {
    const ExpansionTerm& t = e.terms[k];
    if (!t.live()) {
      dead.push_back(k);
      continue;
    }
    protos.push_back({k, 1.0, t.phi_weight, t.psi_weight, t.product().real()});
  }

  // Cancel negative products against positive partners. Each round fully
  // consumes one signed proto-term, so the loop runs at most n times.
  std::vector<std::pair<ProtoTerm, ProtoTerm>> paired;
  for (int round = 0; round <= n + 2; ++round) {
    int neg = -1;
    double neg_overlap = -1e-10;
    for (std::size_t k = 0; k < protos.size(); ++k) {
      const ProtoTerm& p = protos[k];
      if (p.phi_weight <= kDeadWeight || p.psi_weight <= kDeadWeight) continue;
      const double d = p.product / std::sqrt(p.phi_weight * p.psi_weight);
      if (d < neg_overlap) {
        neg_overlap = d;
        neg = static_cast<int>(k);
      }
    }
    if (neg < 0) break;
    int pos = -1;
    for (std::size_t k = 0; k < protos.size(); ++k)
      if (protos[k].product > 0.0 &&
          (pos < 0 || protos[k].product > protos[pos].product))
        pos = static_cast<int>(k);
    if (pos < 0)
      throw numerical_error("split_terms",
                            "negative product without positive partner",
                            neg_overlap);

    const double pi = protos[neg].product;
    const double pj = protos[pos].product;
    if (-pi <= pj) {
      const double lambda = -pi / pj;
      paired.emplace_back(protos[neg], scaled(protos[pos], lambda));
      protos[neg] = protos.back();  // consume the negative term
      if (neg != static_cast<int>(protos.size()) - 1 &&
          pos == static_cast<int>(protos.size()) - 1)
        pos = neg;
      protos.pop_back();
      if (1.0 - lambda > 1e-15)
        protos[pos] = scaled(protos[pos], 1.0 - lambda);
      else
        protos.erase(protos.begin() + pos);
    } else {
      const double lambda = -pj / pi;
      paired.emplace_back(scaled(protos[neg], lambda), protos[pos]);
      protos[pos] = protos.back();  // consume the positive term
      if (pos != static_cast<int>(protos.size()) - 1 &&
          neg == static_cast<int>(protos.size()) - 1)
        neg = pos;
      protos.pop_back();
      if (1.0 - lambda > 1e-15)
        protos[neg] = scaled(protos[neg], 1.0 - lambda);
      else
        protos.erase(protos.begin() + neg);
    }
  }

  AncillaExpansion anc;
  anc.dim_a = e.dim_a();
  anc.dim_b = e.dim_b;

  // Fraction of every original term routed to each label, feeding the
  // isometry; fractions per original term must sum to one.
  std::vector<std::vector<std::pair<int, double>>> routing;  // label -> (orig, frac)
  int label = 0;
  for (const auto& [a, b] : paired) {
    OrthogonalBlock blk;
    blk.label = label;
    blk.phi_weight = a.phi_weight + b.phi_weight;
    blk.psi_weight = a.psi_weight + b.psi_weight;
    Vector phi_amp =
        std::sqrt(a.phi_weight) * kron_ab(e.basis.col(a.orig), e.terms[a.orig].phi_vec) +
        std::sqrt(b.phi_weight) * kron_ab(e.basis.col(b.orig), e.terms[b.orig].phi_vec);
    Vector psi_amp =
        std::sqrt(a.psi_weight) * kron_ab(e.basis.col(a.orig), e.terms[a.orig].psi_vec) +
        std::sqrt(b.psi_weight) * kron_ab(e.basis.col(b.orig), e.terms[b.orig].psi_vec);
    blk.phi_block = {anc.dim_a, anc.dim_b,
                     Vector(phi_amp / std::sqrt(blk.phi_weight))};
    blk.psi_block = {anc.dim_a, anc.dim_b,
                     Vector(psi_amp / std::sqrt(blk.psi_weight))};
    anc.blocks.push_back(std::move(blk));
    routing.push_back({{a.orig, a.fraction}, {b.orig, b.fraction}});
    ++label;
  }
  for (const ProtoTerm& p : protos) {
    const ExpansionTerm& t = e.terms[p.orig];
    RatioTerm rt;
    rt.label = label;
    rt.alice_vec = e.basis.col(p.orig);
    rt.phi_weight = p.phi_weight;
    rt.psi_weight = p.psi_weight;
    rt.phi_vec = t.phi_vec;
    rt.psi_vec = t.psi_vec;
    rt.pair_overlap = p.pair_overlap(e);
    anc.ratio_terms.push_back(std::move(rt));
    routing.push_back({{p.orig, p.fraction}});
    ++label;
  }
  for (int k : dead) {
    routing.push_back({{k, 1.0}});
    ++label;
  }
  anc.labels = label;

  const Eigen::Index da = anc.dim_a;
  anc.isometry = Matrix::Zero(static_cast<Eigen::Index>(anc.labels) * da, da);
  for (int alpha = 0; alpha < anc.labels; ++alpha)
    for (const auto& [orig, frac] : routing[alpha])
      anc.isometry.block(alpha * da, 0, da, da) +=
          std::sqrt(frac) * e.basis.col(orig) * e.basis.col(orig).adjoint();

  // Bookkeeping gate: the split must preserve the pair's Gram matrix.
  const Vector xphi = assemble_extended(anc, true);
  const Vector xpsi = assemble_extended(anc, false);
  const double c = e.total_product().real();
  const double gram = std::max({std::abs(xphi.norm() - 1.0),
                                std::abs(xpsi.norm() - 1.0),
                                std::abs(xphi.dot(xpsi) - c)});
  if (gram > 1e-9)
    throw numerical_error("split_terms", "Gram matrix not preserved", gram);
  (void)construction_prior;
  (void)tol;
  return anc;
}

namespace {

// Passthrough ancilla used when no splitting is needed: one label per
// basis vector, isometry |k>_S |a_k><a_k|.
AncillaExpansion passthrough_ancilla(const AliceExpansion& e) {
  AncillaExpansion anc;
  anc.dim_a = e.dim_a();
  anc.dim_b = e.dim_b;
  anc.labels = e.size();
  const Eigen::Index da = anc.dim_a;
  anc.isometry = Matrix::Zero(static_cast<Eigen::Index>(anc.labels) * da, da);
  for (int k = 0; k < e.size(); ++k) {
    anc.isometry.block(k * da, 0, da, da) =
        e.basis.col(k) * e.basis.col(k).adjoint();
    const ExpansionTerm& t = e.terms[k];
    if (!t.live()) continue;
    RatioTerm rt;
    rt.label = k;
    rt.alice_vec = e.basis.col(k);
    rt.phi_weight = t.phi_weight;
    rt.psi_weight = t.psi_weight;
    rt.phi_vec = t.phi_vec;
    rt.psi_vec = t.psi_vec;
    rt.pair_overlap =
        (t.phi_live() && t.psi_live()) ? t.pair_overlap.real() : 0.0;
    anc.ratio_terms.push_back(std::move(rt));
  }
  return anc;
}

OutcomeBranch certain_branch(const RatioTerm& rt, const BranchPosteriors& bp,
                             bool phi_certain) {
  OutcomeBranch br;
  br.label = rt.label;
  br.probability = bp.probability;
  br.post_phi = bp.post_phi;
  br.post_psi = bp.post_psi;
  br.action = phi_certain ? BranchAction::CertainPhi : BranchAction::CertainPsi;
  return br;
}

// The measurement construction wants a nonnegative overlap; a negative one
// is the same discrimination problem with psi's sign flipped, and the
// effects are quadratic in the vectors, so they serve the original pair.
Measurement signed_unambiguous_measurement(const Vector& phi_vec,
                                           const Vector& psi_vec, double d,
                                           double post_phi, double post_psi,
                                           const Tolerances& tol) {
  const Vector psi_aligned = d < 0.0 ? Vector(-psi_vec) : psi_vec;
  return unambiguous_measurement(phi_vec, psi_aligned, post_phi, post_psi, tol);
}

}  // namespace

LoccProtocol walgate_subprotocol(const BipartiteState& phi,
                                 const BipartiteState& psi, double prior_phi,
                                 const Tolerances& tol) {
  const Complex raw = overlap(phi, psi);
  if (std::abs(raw) > 1e-8)
    throw std::invalid_argument(
        "walgate_subprotocol: states are not orthogonal (|<phi|psi>| = " +
        std::to_string(std::abs(raw)) + ")");

  LoccProtocol proto;
  proto.instance = canonicalize(phi, psi, prior_phi, tol);
  proto.case_tag = classify_case(proto.instance.prior, proto.instance.overlap, tol);

  AliceExpansion e = expand_in_basis(
      proto.instance, Matrix::Identity(phi.dim_a, phi.dim_a), tol);
  e = make_diagonal_real(e, tol);
  e = equalize_products(e, tol);
  proto.ancilla = passthrough_ancilla(e);

  Tolerances ortho_tol = tol;
  ortho_tol.eps_real = std::max(tol.eps_real, 1e-6);
  for (const RatioTerm& rt : proto.ancilla.ratio_terms) {
    const BranchPosteriors bp =
        branch_posteriors(proto.instance.prior, rt.phi_weight, rt.psi_weight);
    if (rt.psi_weight <= kDeadWeight) {
      proto.branches.push_back(certain_branch(rt, bp, true));
      continue;
    }
    if (rt.phi_weight <= kDeadWeight) {
      proto.branches.push_back(certain_branch(rt, bp, false));
      continue;
    }
    OutcomeBranch br;
    br.label = rt.label;
    br.probability = bp.probability;
    br.post_phi = bp.post_phi;
    br.post_psi = bp.post_psi;
    br.action = BranchAction::Measure;
    // Near-dead terms can keep a visible residual overlap after the
    // product averaging (the products converge, their ratio to the tiny
    // weight does not). The conclusive measurement stays zero-error for
    // any overlap, and the success it forfeits is proportional to the
    // term's product, which is what actually converged to zero.
    if (std::abs(rt.pair_overlap) <= 1e-6)
      br.measurement = orthogonal_measurement(rt.phi_vec, rt.psi_vec, ortho_tol);
    else
      br.measurement = signed_unambiguous_measurement(
          rt.phi_vec, rt.psi_vec, rt.pair_overlap, bp.post_phi, bp.post_psi,
          tol);
    br.bob_phi = rt.phi_vec;
    br.bob_psi = rt.psi_vec;
    br.pair_overlap = rt.pair_overlap;
    proto.branches.push_back(std::move(br));
  }
  proto.analytic_success = analytic_success(proto);
  return proto;
}

LoccProtocol build_protocol(const DiscriminationInstance& inst,
                            const Tolerances& tol, BuildTrace* trace) {
  const double c = inst.overlap;
  const PriorPair prior = inst.prior;

  if (c >= 1.0 - 1e-12) {
    // Identical states: Alice does nothing, everything is inconclusive.
    LoccProtocol proto;
    proto.instance = inst;
    proto.case_tag = classify_case(prior, c, tol);
    proto.ancilla.dim_a = inst.phi.dim_a;
    proto.ancilla.dim_b = inst.phi.dim_b;
    proto.ancilla.labels = 1;
    proto.ancilla.isometry = Matrix::Identity(inst.phi.dim_a, inst.phi.dim_a);
    OutcomeBranch br;
    br.label = 0;
    br.probability = 1.0;
    br.post_phi = prior.phi;
    br.post_psi = prior.psi;
    br.action = BranchAction::Inconclusive;
    proto.branches.push_back(std::move(br));
    proto.analytic_success = 0.0;
    return proto;
  }
  if (c <= 1e-14)
    return walgate_subprotocol(inst.phi, inst.psi, prior.phi, tol);

  LoccProtocol proto;
  proto.instance = inst;
  proto.case_tag = classify_case(prior, c, tol);
  PriorPair construction = prior;
  if (proto.case_tag == CaseTag::Quadratic) {
    const EffectivePriors star = effective_priors(c);
    proto.effective = star;
    construction = {star.phi, star.psi, false};
  }

  AliceExpansion e = expand_in_basis(
      inst, Matrix::Identity(inst.phi.dim_a, inst.phi.dim_a), tol);
  if (trace) {
    trace->ran_pipeline = true;
    trace->construction_prior = construction;
    trace->initial = e;
  }
  e = make_diagonal_real(e, tol);
  if (trace) trace->real_diagonals = e;
  e = equalize_weights(e, construction, tol);
  if (trace) trace->equal_weights = e;
  e = fix_ratios(e, construction, tol, trace ? &trace->ratio_log : nullptr);
  if (trace) trace->ratio_bounded = e;
  proto.ancilla = split_terms(e, construction, tol);

  for (const OrthogonalBlock& blk : proto.ancilla.blocks) {
    const BranchPosteriors bp =
        branch_posteriors(prior, blk.phi_weight, blk.psi_weight);
    OutcomeBranch br;
    br.label = blk.label;
    br.probability = bp.probability;
    br.post_phi = bp.post_phi;
    br.post_psi = bp.post_psi;
    br.action = BranchAction::Walgate;
    br.subprotocol = std::make_shared<LoccProtocol>(
        walgate_subprotocol(blk.phi_block, blk.psi_block, bp.post_phi, tol));
    proto.branches.push_back(std::move(br));
  }
  for (const RatioTerm& rt : proto.ancilla.ratio_terms) {
    const BranchPosteriors bp =
        branch_posteriors(prior, rt.phi_weight, rt.psi_weight);
    if (rt.psi_weight <= kDeadWeight) {
      proto.branches.push_back(certain_branch(rt, bp, true));
      continue;
    }
    if (rt.phi_weight <= kDeadWeight) {
      proto.branches.push_back(certain_branch(rt, bp, false));
      continue;
    }
    OutcomeBranch br;
    br.label = rt.label;
    br.probability = bp.probability;
    br.post_phi = bp.post_phi;
    br.post_psi = bp.post_psi;
    br.action = BranchAction::Measure;
    br.measurement = signed_unambiguous_measurement(
        rt.phi_vec, rt.psi_vec, rt.pair_overlap, bp.post_phi, bp.post_psi, tol);
    br.bob_phi = rt.phi_vec;
    br.bob_psi = rt.psi_vec;
    br.pair_overlap = rt.pair_overlap;
    proto.branches.push_back(std::move(br));
  }

  proto.analytic_success = analytic_success(proto);
  return proto;
}

double analytic_success(const LoccProtocol& protocol) {
  double total = 0.0;
  for (const OutcomeBranch& br : protocol.branches) {
    switch (br.action) {
      case BranchAction::Inconclusive:
        break;
      case BranchAction::CertainPhi:
      case BranchAction::CertainPsi:
        total += br.probability;
        break;
      case BranchAction::Walgate:
        total += br.probability * analytic_success(*br.subprotocol);
        break;
      case BranchAction::Measure: {
        const double lo = std::min(br.post_phi, br.post_psi);
        const double hi = std::max(br.post_phi, br.post_psi);
        const double d = std::min(std::abs(br.pair_overlap), 1.0);
        total += br.probability * pmax({lo, hi, false}, d).value;
        break;
      }
    }
  }
  return total;
}

namespace {

double born_weight(const Vector& state, const Measurement& m, Outcome o) {
  double w = 0.0;
  for (const auto& effect : m.effects)
    if (effect.outcome == o)
      w += (state.adjoint() * effect.matrix * state)(0, 0).real();
  return w;
}

}  // namespace

double born_success(const LoccProtocol& protocol) {
  double total = 0.0;
  for (const OutcomeBranch& br : protocol.branches) {
    switch (br.action) {
      case BranchAction::Inconclusive:
        break;
      case BranchAction::CertainPhi:
      case BranchAction::CertainPsi:
        total += br.probability;
        break;
      case BranchAction::Walgate:
        total += br.probability * born_success(*br.subprotocol);
        break;
      case BranchAction::Measure:
        total += br.probability *
                 (br.post_phi *
                      born_weight(br.bob_phi, br.measurement, Outcome::ConcludePhi) +
                  br.post_psi *
                      born_weight(br.bob_psi, br.measurement, Outcome::ConcludePsi));
        break;
    }
  }
  return total;
}

double max_cross_error(const LoccProtocol& protocol) {
  double worst = 0.0;
  for (const OutcomeBranch& br : protocol.branches) {
    switch (br.action) {
      case BranchAction::Inconclusive:
        break;
      case BranchAction::CertainPhi:
        // Reached by psi with probability P_i * post_psi, always judged phi.
        worst = std::max(worst, br.probability * br.post_psi);
        break;
      case BranchAction::CertainPsi:
        worst = std::max(worst, br.probability * br.post_phi);
        break;
      case BranchAction::Walgate:
        worst = std::max(worst,
                         br.probability * max_cross_error(*br.subprotocol));
        break;
      case BranchAction::Measure: {
        const double psi_as_phi =
            born_weight(br.bob_psi, br.measurement, Outcome::ConcludePhi);
        const double phi_as_psi =
            born_weight(br.bob_phi, br.measurement, Outcome::ConcludePsi);
        worst = std::max(worst,
                         br.probability * std::max(br.post_psi * psi_as_phi,
                                                   br.post_phi * phi_as_psi));
        break;
      }
    }
  }
  return worst;
}

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Sampling tables for one protocol level: branch probabilities from the
// squared label-block norms of the isometry-extended states, and Bob's
// Born weights per branch and preparation.
struct SimNode {
  std::vector<double> branch_phi;  // P(branch | prepared phi)
  std::vector<double> branch_psi;
  struct BranchSampler {
    BranchAction action = BranchAction::Inconclusive;
    std::vector<std::pair<Outcome, double>> born_phi;  // Measure only
    std::vector<std::pair<Outcome, double>> born_psi;
    std::unique_ptr<SimNode> sub;  // Walgate only
    bool sub_swapped = false;
  };
  std::vector<BranchSampler> samplers;
};

std::vector<std::pair<Outcome, double>> born_table(const Vector& state,
                                                   const Measurement& m) {
  std::vector<std::pair<Outcome, double>> table;
  double total = 0.0;
  for (const auto& effect : m.effects) {
    double w = (state.adjoint() * effect.matrix * state)(0, 0).real();
    if (w < 1e-14) w = 0.0;  // fp dust must not fabricate outcomes
    table.emplace_back(effect.outcome, w);
    total += w;
  }
  for (auto& [o, w] : table) w /= total;
  return table;
}

SimNode build_sim_node(const LoccProtocol& protocol) {
  SimNode node;
  const Eigen::Index joint =
      static_cast<Eigen::Index>(protocol.ancilla.dim_a) * protocol.ancilla.dim_b;
  const Vector xphi = apply_isometry(protocol.ancilla, protocol.instance.phi);
  const Vector xpsi = apply_isometry(protocol.ancilla, protocol.instance.psi);

  for (const OutcomeBranch& br : protocol.branches) {
    node.branch_phi.push_back(xphi.segment(br.label * joint, joint).squaredNorm());
    node.branch_psi.push_back(xpsi.segment(br.label * joint, joint).squaredNorm());
    SimNode::BranchSampler s;
    s.action = br.action;
    if (br.action == BranchAction::Measure) {
      s.born_phi = born_table(br.bob_phi, br.measurement);
      s.born_psi = born_table(br.bob_psi, br.measurement);
    } else if (br.action == BranchAction::Walgate) {
      s.sub = std::make_unique<SimNode>(build_sim_node(*br.subprotocol));
      s.sub_swapped = br.subprotocol->instance.prior.swapped;
    }
    node.samplers.push_back(std::move(s));
  }
  return node;
}

int sample_index(const std::vector<double>& weights, double u) {
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    acc += weights[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(weights.size()) - 1;
}

// Walks one prepared state through the protocol tree; returns the final
// claim. `is_phi` is the preparation in this node's labelling.
Outcome run_trial(const SimNode& node, bool is_phi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<double>& probs = is_phi ? node.branch_phi : node.branch_psi;
  const int k = sample_index(probs, unit(rng) *
                                        std::accumulate(probs.begin(),
                                                        probs.end(), 0.0));
  const SimNode::BranchSampler& s = node.samplers[k];
  switch (s.action) {
    case BranchAction::Inconclusive:
      return Outcome::Inconclusive;
    case BranchAction::CertainPhi:
      return Outcome::ConcludePhi;
    case BranchAction::CertainPsi:
      return Outcome::ConcludePsi;
    case BranchAction::Walgate: {
      const Outcome inner =
          run_trial(*s.sub, s.sub_swapped ? !is_phi : is_phi, rng);
      if (inner == Outcome::Inconclusive || !s.sub_swapped) return inner;
      return inner == Outcome::ConcludePhi ? Outcome::ConcludePsi
                                           : Outcome::ConcludePhi;
    }
    case BranchAction::Measure: {
      const auto& table = is_phi ? s.born_phi : s.born_psi;
      double u = unit(rng);
      for (const auto& [o, w] : table) {
        if (u < w) return o;
        u -= w;
      }
      return table.back().first;
    }
  }
  return Outcome::Inconclusive;
}

}  // namespace

SimulationReport simulate(const LoccProtocol& protocol,
                          const DiscriminationInstance& inst, long long trials,
                          std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("simulate: trials must be >= 1");
  if (inst.phi.dim_a != protocol.instance.phi.dim_a ||
      inst.phi.dim_b != protocol.instance.phi.dim_b ||
      (inst.phi.amplitudes - protocol.instance.phi.amplitudes).norm() > 1e-9 ||
      (inst.psi.amplitudes - protocol.instance.psi.amplitudes).norm() > 1e-9)
    throw std::invalid_argument("simulate: instance does not match protocol");

  const SimNode root = build_sim_node(protocol);
  SimulationReport report;
  report.trials = trials;
  report.seed = seed;
  report.analytic_success = protocol.analytic_success;

  for (long long trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(trial) + 1)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool is_phi = unit(rng) < inst.prior.phi;
    const Outcome claim = run_trial(root, is_phi, rng);
    if (claim == Outcome::Inconclusive) {
      ++report.inconclusive;
    } else if ((claim == Outcome::ConcludePhi) == is_phi) {
      ++(is_phi ? report.correct_phi : report.correct_psi);
    } else {
      ++report.errors;
    }
  }
  report.empirical_success =
      static_cast<double>(report.correct_phi + report.correct_psi) /
      static_cast<double>(trials);
  return report;
}

CheckReport check_protocol(const LoccProtocol& protocol, const Tolerances& tol) {
  CheckReport r;
  const PriorPair& prior = protocol.instance.prior;
  const double c = protocol.instance.overlap;
  const AncillaExpansion& anc = protocol.ancilla;

  double prob_sum = 0.0;
  double posterior_resid = 0.0;
  for (const OutcomeBranch& br : protocol.branches) {
    prob_sum += br.probability;
    posterior_resid =
        std::max(posterior_resid, std::abs(br.post_phi + br.post_psi - 1.0));
  }
  r.add("branch_prob_sum", prob_sum - 1.0, 1e-10);
  r.add("posterior_sums", posterior_resid, 1e-12);

  // Branch bookkeeping against the ancilla weights: P_i = s s_i + t t_i.
  double pw_resid = 0.0;
  for (const OutcomeBranch& br : protocol.branches) {
    double sw = -1.0, tw = -1.0;
    for (const auto& blk : anc.blocks)
      if (blk.label == br.label) { sw = blk.phi_weight; tw = blk.psi_weight; }
    for (const auto& rt : anc.ratio_terms)
      if (rt.label == br.label) { sw = rt.phi_weight; tw = rt.psi_weight; }
    if (sw < 0.0) continue;  // identical-states protocol has no parts
    const double p = prior.phi * sw + prior.psi * tw;
    pw_resid = std::max(pw_resid, std::abs(br.probability - p));
    if (p > 0.0) {
      pw_resid = std::max(
          pw_resid, std::abs(br.post_phi - prior.phi * sw / p));
      pw_resid = std::max(
          pw_resid, std::abs(br.post_psi - prior.psi * tw / p));
    }
  }
  r.add("branch_posterior_identities", pw_resid, 1e-12);

  // Ancilla bookkeeping.
  const Eigen::Index da = anc.dim_a;
  r.add("isometry",
        (anc.isometry.adjoint() * anc.isometry - Matrix::Identity(da, da)).norm(),
        1e-9);
  const Vector vphi = apply_isometry(anc, protocol.instance.phi);
  const Vector vpsi = apply_isometry(anc, protocol.instance.psi);
  if (!anc.blocks.empty() || !anc.ratio_terms.empty()) {
    const Vector xphi = assemble_extended(anc, true);
    const Vector xpsi = assemble_extended(anc, false);
    r.add("isometry_reproduces_phi", (vphi - xphi).norm(), 1e-9);
    r.add("isometry_reproduces_psi", (vpsi - xpsi).norm(), 1e-9);

    double sw_sum = 0.0, tw_sum = 0.0;
    for (const auto& blk : anc.blocks) {
      sw_sum += blk.phi_weight;
      tw_sum += blk.psi_weight;
    }
    for (const auto& rt : anc.ratio_terms) {
      sw_sum += rt.phi_weight;
      tw_sum += rt.psi_weight;
    }
    r.add("ancilla_phi_weight_sum", sw_sum - 1.0, 1e-9);
    r.add("ancilla_psi_weight_sum", tw_sum - 1.0, 1e-9);
  }
  r.add("gram_phi_norm", vphi.norm() - 1.0, 1e-9);
  r.add("gram_psi_norm", vpsi.norm() - 1.0, 1e-9);
  r.add("gram_overlap", std::abs(vphi.dot(vpsi) - c), 1e-9);

  double block_resid = 0.0;
  for (const auto& blk : anc.blocks) {
    block_resid = std::max(block_resid,
                           std::abs(overlap(blk.phi_block, blk.psi_block)));
    block_resid = std::max(block_resid,
                           std::abs(blk.phi_block.amplitudes.norm() - 1.0));
    block_resid = std::max(block_resid,
                           std::abs(blk.psi_block.amplitudes.norm() - 1.0));
  }
  r.add("blocks_orthogonal", block_resid, 1e-9);

  // Ratio-term bounds under the construction priors. A perfect-
  // discrimination protocol expresses its guarantee as vanishing term
  // products instead (near-dead terms can carry a visible overlap whose
  // product is still zero).
  PriorPair construction = prior;
  if (protocol.effective)
    construction = {protocol.effective->phi, protocol.effective->psi, false};
  if (c <= 1e-12) {
    double product_resid = 0.0;
    for (const auto& rt : anc.ratio_terms)
      product_resid = std::max(
          product_resid, std::abs(rt.pair_overlap) *
                             std::sqrt(rt.phi_weight * rt.psi_weight));
    r.add("walgate_products_zero", product_resid, 1e-10);
  } else {
    double bound_resid = 0.0, negativity = 0.0;
    for (const auto& rt : anc.ratio_terms) {
      negativity = std::max(negativity, -rt.pair_overlap);
      if (rt.psi_weight <= kDeadWeight || rt.phi_weight <= kDeadWeight)
        continue;
      const double bound = std::sqrt(construction.phi * rt.phi_weight /
                                     (construction.psi * rt.psi_weight));
      bound_resid = std::max(bound_resid, rt.pair_overlap - bound);
    }
    r.add("ratio_bound", std::max(bound_resid, 0.0), tol.eps_opt);
    r.add("ratio_nonnegative", std::max(negativity, 0.0), 1e-8);
  }

  if (protocol.case_tag == CaseTag::Quadratic &&
      !(anc.blocks.empty() && anc.ratio_terms.empty())) {
    double sw_ratio = 0.0, equality = 0.0;
    for (const auto& rt : anc.ratio_terms) {
      sw_ratio += rt.phi_weight;
      if (rt.psi_weight <= kDeadWeight || rt.phi_weight <= kDeadWeight) continue;
      const double bound = std::sqrt(construction.phi * rt.phi_weight /
                                     (construction.psi * rt.psi_weight));
      equality = std::max(equality, std::abs(bound - rt.pair_overlap));
    }
    r.add("quadratic_ratio_weight_sum", sw_ratio - 1.0, 1e-9);
    r.add("quadratic_per_term_equality", equality, 1e-8);
  }

  // Measurements and the zero-error property.
  double herm = 0.0, psd = 0.0, complete = 0.0;
  for (const OutcomeBranch& br : protocol.branches) {
    if (br.action != BranchAction::Measure) continue;
    const MeasurementValidation v = validate_measurement(br.measurement, tol);
    herm = std::max(herm, v.hermiticity_residual);
    psd = std::max(psd, std::max(0.0, -v.min_eigenvalue));
    complete = std::max(complete, v.completeness_residual);
  }
  r.add("measurement_hermitian", herm, tol.eps_psd);
  r.add("measurement_positive", psd, tol.eps_psd);
  r.add("measurement_complete", complete, tol.eps_psd);
  r.add("zero_error", max_cross_error(protocol), 1e-10);

  // Optimality, via both success routes.
  const double analytic = analytic_success(protocol);
  r.add("success_matches_pmax", analytic - pmax(prior, c, tol).value,
        tol.eps_opt);
  r.add("success_cached", protocol.analytic_success - analytic, 1e-12);
  r.add("born_matches_analytic", born_success(protocol) - analytic, 1e-9);

  double walgate_resid = 0.0;
  for (const OutcomeBranch& br : protocol.branches)
    if (br.action == BranchAction::Walgate)
      walgate_resid = std::max(
          walgate_resid, std::abs(analytic_success(*br.subprotocol) - 1.0));
  r.add("walgate_success", walgate_resid, 1e-9);
  return r;
}

}  // namespace loccdisc
