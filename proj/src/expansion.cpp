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

#include "loccdisc/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace loccdisc {

Complex AliceExpansion::total_product() const {
  Complex sum{0.0, 0.0};
  for (const auto& t : terms) sum += t.product();
  return sum;
}

namespace {

BipartiteState reconstruct(const AliceExpansion& e, bool phi_side) {
  const int da = e.dim_a();
  const int db = e.dim_b;
  BipartiteState out{da, db, Vector::Zero(static_cast<Eigen::Index>(da) * db)};
  for (int k = 0; k < e.size(); ++k) {
    const ExpansionTerm& t = e.terms[k];
    const double w = phi_side ? t.phi_weight : t.psi_weight;
    const Vector& dir = phi_side ? t.phi_vec : t.psi_vec;
    if (w <= kDeadWeight || dir.size() == 0) continue;
    const Vector weighted = std::sqrt(w) * dir;
    for (int p = 0; p < da; ++p) {
      const Complex coeff = e.basis(p, k);
      if (coeff == Complex{0.0, 0.0}) continue;
      out.amplitudes.segment(static_cast<Eigen::Index>(p) * db, db) +=
          coeff * weighted;
    }
  }
  return out;
}

// Weighted Bob vector sqrt(weight) * direction; zero for dead sides.
Vector weighted_vec(const ExpansionTerm& t, bool phi_side, int db) {
  const double w = phi_side ? t.phi_weight : t.psi_weight;
  const Vector& dir = phi_side ? t.phi_vec : t.psi_vec;
  if (w <= kDeadWeight || dir.size() == 0) return Vector::Zero(db);
  return std::sqrt(w) * dir;
}

ExpansionTerm term_from_weighted(const Vector& u, const Vector& v) {
  ExpansionTerm t;
  t.phi_weight = u.squaredNorm();
  t.psi_weight = v.squaredNorm();
  t.phi_vec = t.phi_weight > kDeadWeight ? Vector(u / std::sqrt(t.phi_weight))
                                         : Vector(Vector::Zero(u.size()));
  t.psi_vec = t.psi_weight > kDeadWeight ? Vector(v / std::sqrt(t.psi_weight))
                                         : Vector(Vector::Zero(v.size()));
  t.pair_overlap = (t.phi_weight > kDeadWeight && t.psi_weight > kDeadWeight)
                       ? t.phi_vec.dot(t.psi_vec)
                       : Complex{0.0, 0.0};
  return t;
}

double max_imag_overlap(const AliceExpansion& e) {
  double worst = 0.0;
  for (const auto& t : e.terms)
    if (t.phi_live() && t.psi_live())
      worst = std::max(worst, std::abs(t.pair_overlap.imag()));
  return worst;
}

void require_real_diagonals(const AliceExpansion& e, const char* who) {
  const double worst = max_imag_overlap(e);
  if (worst > 1e-6)
    throw std::invalid_argument(std::string(who) +
                                ": expansion diagonals are not real (max Im = " +
                                std::to_string(worst) + ")");
}

}  // namespace

BipartiteState AliceExpansion::reconstruct_phi() const {
  return reconstruct(*this, true);
}

BipartiteState AliceExpansion::reconstruct_psi() const {
  return reconstruct(*this, false);
}

double CorrelationBlock::mix_phi(double omega) const {
  return 2.0 * (std::polar(1.0, -omega) * phi_inner).real();
}

double CorrelationBlock::mix_psi(double omega) const {
  return 2.0 * (std::polar(1.0, -omega) * psi_inner).real();
}

Complex CorrelationBlock::mix_cross(double omega) const {
  return std::polar(1.0, -omega) * cross_ij + std::polar(1.0, omega) * cross_ji;
}

CorrelationBlock make_block(const AliceExpansion& e, int i, int j) {
  const Vector ui = weighted_vec(e.terms[i], true, e.dim_b);
  const Vector uj = weighted_vec(e.terms[j], true, e.dim_b);
  const Vector vi = weighted_vec(e.terms[i], false, e.dim_b);
  const Vector vj = weighted_vec(e.terms[j], false, e.dim_b);
  CorrelationBlock b;
  b.i = i;
  b.j = j;
  b.diag_i = e.terms[i].product().real();
  b.diag_j = e.terms[j].product().real();
  b.cross_ij = ui.dot(vj);
  b.cross_ji = uj.dot(vi);
  b.phi_inner = ui.dot(uj);
  b.psi_inner = vi.dot(vj);
  return b;
}

AliceExpansion expand_in_basis(const DiscriminationInstance& inst,
                               const Matrix& basis, const Tolerances& tol) {
  const int da = inst.phi.dim_a;
  const int db = inst.phi.dim_b;
  if (basis.rows() != da || basis.cols() != da)
    throw std::invalid_argument("expand_in_basis: basis has wrong shape");
  const double unit = (basis.adjoint() * basis - Matrix::Identity(da, da)).norm();
  if (unit > tol.eps_norm)
    throw std::invalid_argument("expand_in_basis: basis is not unitary (residual " +
                                std::to_string(unit) + ")");

  AliceExpansion e;
  e.basis = basis;
  e.dim_b = db;
  e.terms.reserve(da);
  for (int i = 0; i < da; ++i) {
    Vector u = Vector::Zero(db);
    Vector v = Vector::Zero(db);
    for (int p = 0; p < da; ++p) {
      const Complex coeff = std::conj(basis(p, i));
      u += coeff * inst.phi.bob_block(p);
      v += coeff * inst.psi.bob_block(p);
    }
    e.terms.push_back(term_from_weighted(u, v));
  }
  return e;
}

double solve_omega(const CorrelationBlock& block, const Tolerances&) {
  // Im of the rotated diagonals' cross contribution is
  // A cos(omega) + B sin(omega); any root works for every theta.
  const double a = (block.cross_ij + block.cross_ji).imag();
  const double b = (block.cross_ji - block.cross_ij).real();
  const double scale = std::abs(block.cross_ij) + std::abs(block.cross_ji);
  if (std::abs(a) <= 1e-15 * std::max(scale, 1e-300)) return 0.0;
  double omega = std::atan2(-a, b);
  if (omega < 0.0) omega += M_PI;
  return omega;
}

AliceExpansion rotate_pair(const AliceExpansion& e, const RotationStep& step,
                           const Tolerances&) {
  const int i = step.i, j = step.j;
  if (i == j || i < 0 || j < 0 || i >= e.size() || j >= e.size())
    throw std::invalid_argument("rotate_pair: bad term indices");

  const Complex u00 = std::cos(step.theta);
  const Complex u01 = std::sin(step.theta) * std::polar(1.0, -step.omega);
  const Complex u10 = std::sin(step.theta) * std::polar(1.0, step.omega);
  const Complex u11 = -std::cos(step.theta);

  const Vector ui = weighted_vec(e.terms[i], true, e.dim_b);
  const Vector uj = weighted_vec(e.terms[j], true, e.dim_b);
  const Vector vi = weighted_vec(e.terms[i], false, e.dim_b);
  const Vector vj = weighted_vec(e.terms[j], false, e.dim_b);

  AliceExpansion out = e;
  out.terms[i] = term_from_weighted(u00 * ui + u01 * uj, u00 * vi + u01 * vj);
  out.terms[j] = term_from_weighted(u10 * ui + u11 * uj, u10 * vi + u11 * vj);

  // Basis columns absorb the inverse so the reconstructed states are fixed.
  const Vector bi = e.basis.col(i);
  const Vector bj = e.basis.col(j);
  out.basis.col(i) = std::conj(u00) * bi + std::conj(u01) * bj;
  out.basis.col(j) = std::conj(u10) * bi + std::conj(u11) * bj;
  return out;
}

int solve_quadratic(double a, double b, double c, double roots[2]) {
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (scale == 0.0) return 0;
  if (std::abs(a) <= 1e-14 * scale) {
    if (std::abs(b) <= 1e-14 * scale) return 0;
    roots[0] = -c / b;
    return 1;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) {
    if (disc >= -1e-12 * scale * scale) {
      roots[0] = -b / (2.0 * a);
      return 1;
    }
    return 0;
  }
  const double sq = std::sqrt(disc);
  if (b == 0.0 && sq == 0.0) {
    roots[0] = 0.0;
    return 1;
  }
  const double q = -0.5 * (b + std::copysign(sq, b));
  if (q == 0.0) {
    roots[0] = sq / (2.0 * a);
    roots[1] = -sq / (2.0 * a);
    return 2;
  }
  roots[0] = q / a;
  roots[1] = c / q;
  return 2;
}

namespace {

double smaller_root(const double roots[2], int count) {
  if (count == 1) return roots[0];
  return std::abs(roots[0]) <= std::abs(roots[1]) ? roots[0] : roots[1];
}

}  // namespace

AliceExpansion make_diagonal_real(const AliceExpansion& e,
                                  const Tolerances& tol) {
  AliceExpansion cur = e;
  const int cap = tol.sweep_cap(std::max(cur.size(), 1));

  for (int step = 0; step <= cap; ++step) {
    if (max_imag_overlap(cur) <= 1e-12) return cur;

    // An opposite-sign pair of imaginary parts exists because the total
    // product is real; zero the extremal one with a theta that solves
    // Im(b) tan^2 + Im(z) tan + Im(a) = 0 at omega = 0.
    int pos = -1, neg = -1;
    double pos_im = 0.0, neg_im = 0.0;
    for (int k = 0; k < cur.size(); ++k) {
      const double im = cur.terms[k].product().imag();
      if (im > pos_im) { pos_im = im; pos = k; }
      if (im < neg_im) { neg_im = im; neg = k; }
    }
    if (pos < 0 || neg < 0)
      throw numerical_error("make_diagonal_real",
                            "no opposite-sign pair; total product is not real",
                            max_imag_overlap(cur));

    // Zero the larger-magnitude side; its partner absorbs the pair total.
    const bool zero_pos = pos_im >= -neg_im;
    const int zi = zero_pos ? pos : neg;
    const int zj = zero_pos ? neg : pos;
    const CorrelationBlock block = make_block(cur, zi, zj);
    const Complex z = block.mix_cross(0.0);
    double roots[2];
    const int count = solve_quadratic(cur.terms[zj].product().imag(), z.imag(),
                                      cur.terms[zi].product().imag(), roots);
    if (count == 0)
      throw numerical_error("make_diagonal_real", "no real rotation angle",
                            max_imag_overlap(cur));
    cur = rotate_pair(cur, {zi, zj, std::atan(smaller_root(roots, count)), 0.0});
  }
  throw numerical_error("make_diagonal_real", "sweep cap exceeded",
                        max_imag_overlap(cur));
}

AliceExpansion equalize_weights(const AliceExpansion& e, const PriorPair&,
                                const Tolerances& tol) {
  require_real_diagonals(e, "equalize_weights");
  AliceExpansion cur = e;
  const int cap = tol.sweep_cap(std::max(cur.size(), 1));

  for (int step = 0; step <= cap; ++step) {
    int hi = -1, lo = -1;
    double hi_diff = 0.0, lo_diff = 0.0;
    for (int k = 0; k < cur.size(); ++k) {
      const double diff = cur.terms[k].phi_weight - cur.terms[k].psi_weight;
      if (diff > hi_diff) { hi_diff = diff; hi = k; }
      if (diff < lo_diff) { lo_diff = diff; lo = k; }
    }
    if (std::max(hi_diff, -lo_diff) <= 1e-12) return cur;
    if (hi < 0 || lo < 0)
      throw numerical_error("equalize_weights",
                            "weight discrepancies do not balance",
                            std::max(hi_diff, -lo_diff));

    const CorrelationBlock block = make_block(cur, hi, lo);
    const double omega = solve_omega(block, tol);
    const double mix = block.mix_phi(omega) - block.mix_psi(omega);
    double roots[2];
    const int count = solve_quadratic(lo_diff, mix, hi_diff, roots);
    if (count == 0)
      throw numerical_error("equalize_weights", "no real rotation angle",
                            std::max(hi_diff, -lo_diff));
    cur = rotate_pair(cur, {hi, lo, std::atan(smaller_root(roots, count)), omega});
  }
  double worst = 0.0;
  for (const auto& t : cur.terms)
    worst = std::max(worst, std::abs(t.phi_weight - t.psi_weight));
  throw numerical_error("equalize_weights", "sweep cap exceeded", worst);
}

namespace {

// Classification margin of the ratio bound, in pair-overlap units.
// Terms exempt from the bound report +infinity (phi-certain) or 0.
double ratio_margin(const ExpansionTerm& t, const PriorPair& prior) {
  if (!t.psi_live())
    return t.phi_live() ? std::numeric_limits<double>::infinity() : 0.0;
  if (!t.phi_live()) return 0.0;  // ratio 0, overlap 0 by convention
  const double bound = std::sqrt(prior.phi * t.phi_weight /
                                 (prior.psi * t.psi_weight));
  return bound - t.pair_overlap.real();
}

// The same margin in product units: sqrt(s/t) s_k - sqrt(s_k t_k) d_k,
// the quadratic's coefficient for term k.
double product_margin(const ExpansionTerm& t, const PriorPair& prior) {
  return std::sqrt(prior.phi / prior.psi) * t.phi_weight - t.product().real();
}

}  // namespace

int potential(const AliceExpansion& e, const PriorPair& prior, double tol) {
  int equalities = 0, slacks = 0;
  for (const auto& t : e.terms) {
    const double margin = ratio_margin(t, prior);
    if (std::abs(margin) <= tol)
      ++equalities;
    else if (margin > tol)
      ++slacks;
  }
  return 2 * equalities + slacks;
}

AliceExpansion fix_ratios(const AliceExpansion& e, const PriorPair& prior,
                          const Tolerances& tol, RatioFixLog* log) {
  require_real_diagonals(e, "fix_ratios");
  const double c = e.total_product().real();
  if (std::sqrt(prior.phi / prior.psi) < c - tol.eps_opt)
    throw std::invalid_argument(
        "fix_ratios: sqrt(s/t) < overlap; not applicable in the quadratic regime");

  AliceExpansion cur = e;
  const int cap = tol.sweep_cap(std::max(cur.size(), 1));
  int last_potential = potential(cur, prior, tol.eps_opt);
  if (log) log->potentials.push_back(last_potential);

  for (int step = 0; step <= cap; ++step) {
    int viol = -1, slack = -1;
    double viol_margin = -1e-10;  // only fix genuine violations
    double slack_margin = 0.0;
    for (int k = 0; k < cur.size(); ++k) {
      const double m = ratio_margin(cur.terms[k], prior);
      if (m < viol_margin) { viol_margin = m; viol = k; }
      const double pm = product_margin(cur.terms[k], prior);
      if (pm > slack_margin) { slack_margin = pm; slack = k; }
    }
    if (viol < 0) return cur;
    if (slack < 0)
      throw numerical_error("fix_ratios", "violator without slack partner",
                            viol_margin);

    const CorrelationBlock block = make_block(cur, viol, slack);
    const double omega = solve_omega(block, tol);
    const double ratio = std::sqrt(prior.phi / prior.psi);
    const double lead = product_margin(cur.terms[slack], prior);
    const double tail = product_margin(cur.terms[viol], prior);
    const double mid =
        ratio * block.mix_phi(omega) - block.mix_cross(omega).real();
    double roots[2];
    const int count = solve_quadratic(lead, mid, tail, roots);
    if (count == 0)
      throw numerical_error("fix_ratios", "no real rotation angle", viol_margin);

    // Prefer the root whose tangent matches the sign of s*x - t*y; that
    // choice keeps s*s' <= t*t' on the partner term. Fall back to the
    // other root if the preferred one breaks the invariant numerically.
    const double sign_pick =
        prior.phi * block.mix_phi(omega) - prior.psi * block.mix_psi(omega);
    double first = roots[0], second = (count == 2) ? roots[1] : roots[0];
    if (count == 2) {
      const bool want_positive = sign_pick > 0.0;
      if (std::abs(sign_pick) <= 1e-14) {
        if (std::abs(second) < std::abs(first)) std::swap(first, second);
      } else if ((roots[1] > 0.0) == want_positive) {
        std::swap(first, second);
      }
    }

    AliceExpansion next = cur;
    bool accepted = false;
    for (const double root : {first, second}) {
      AliceExpansion cand =
          rotate_pair(cur, {viol, slack, std::atan(root), omega});
      const ExpansionTerm& partner = cand.terms[slack];
      const double partner_ok = prior.phi * partner.phi_weight -
                                prior.psi * partner.psi_weight;
      const double fixed = ratio_margin(cand.terms[viol], prior);
      if (partner_ok <= 1e-12 && fixed >= -1e-9) {
        next = std::move(cand);
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw numerical_error("fix_ratios", "both roots rejected", viol_margin);

    cur = std::move(next);
    const int p = potential(cur, prior, tol.eps_opt);
    if (p < last_potential)
      throw numerical_error("fix_ratios", "termination potential decreased",
                            static_cast<double>(last_potential - p));
    last_potential = p;
    if (log) log->potentials.push_back(p);
  }
  throw numerical_error("fix_ratios", "sweep cap exceeded", 0.0);
}

AliceExpansion equalize_products(const AliceExpansion& e,
                                 const Tolerances& tol) {
  require_real_diagonals(e, "equalize_products");
  AliceExpansion cur = e;
  const int cap = tol.sweep_cap(std::max(cur.size(), 1));
  double prev_dev = std::numeric_limits<double>::infinity();
  int stalled = 0;

  for (int sweep = 0; sweep <= cap; ++sweep) {
    std::vector<int> live;
    for (int k = 0; k < cur.size(); ++k)
      if (cur.terms[k].live()) live.push_back(k);
    if (live.empty()) return cur;

    double mean = 0.0;
    for (int k : live) mean += cur.terms[k].product().real();
    mean /= static_cast<double>(live.size());
    double dev = 0.0;
    for (int k : live)
      dev = std::max(dev, std::abs(cur.terms[k].product().real() - mean));
    if (dev <= 1e-12) return cur;
    if (dev > 0.999 * prev_dev) {
      if (++stalled >= 3)
        throw numerical_error("equalize_products", "sweeps stalled", dev);
    } else {
      stalled = 0;
    }
    prev_dev = dev;

    for (std::size_t x = 0; x < live.size(); ++x) {
      for (std::size_t y = x + 1; y < live.size(); ++y) {
        const int i = live[x], j = live[y];
        const double a = cur.terms[i].product().real();
        const double b = cur.terms[j].product().real();
        if (std::abs(a - b) <= 1e-13) continue;
        const CorrelationBlock block = make_block(cur, i, j);
        const double omega = solve_omega(block, tol);
        const double z = block.mix_cross(omega).real();
        // theta averaging both diagonals; z = 0 degenerates to pi/4.
        const double theta = 0.5 * std::atan2(b - a, z);
        cur = rotate_pair(cur, {i, j, theta, omega});
      }
    }
  }
  throw numerical_error("equalize_products", "sweep cap exceeded", prev_dev);
}

CheckReport check_expansion(const AliceExpansion& e,
                            const DiscriminationInstance& inst,
                            const Tolerances& tol) {
  CheckReport r;
  const int da = e.dim_a();
  r.add("basis_unitary",
        (e.basis.adjoint() * e.basis - Matrix::Identity(da, da)).norm(),
        tol.eps_norm);

  double phi_sum = 0.0, psi_sum = 0.0, vec_norm_dev = 0.0, overlap_cache = 0.0;
  for (const auto& t : e.terms) {
    phi_sum += t.phi_weight;
    psi_sum += t.psi_weight;
    if (t.phi_live())
      vec_norm_dev = std::max(vec_norm_dev, std::abs(t.phi_vec.norm() - 1.0));
    if (t.psi_live())
      vec_norm_dev = std::max(vec_norm_dev, std::abs(t.psi_vec.norm() - 1.0));
    if (t.phi_live() && t.psi_live())
      overlap_cache = std::max(
          overlap_cache, std::abs(t.pair_overlap - t.phi_vec.dot(t.psi_vec)));
  }
  r.add("phi_weight_sum", phi_sum - 1.0, 1e-10);
  r.add("psi_weight_sum", psi_sum - 1.0, 1e-10);
  r.add("unit_vectors", vec_norm_dev, tol.eps_norm);
  r.add("overlap_cache", overlap_cache, 1e-12);
  r.add("reconstruct_phi",
        (e.reconstruct_phi().amplitudes - inst.phi.amplitudes).norm(), 1e-9);
  r.add("reconstruct_psi",
        (e.reconstruct_psi().amplitudes - inst.psi.amplitudes).norm(), 1e-9);
  r.add("overlap_preserved", std::abs(e.total_product() - inst.overlap), 1e-9);
  return r;
}

}  // namespace loccdisc
