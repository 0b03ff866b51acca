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

#include "loccdisc/optimum.hpp"

#include <algorithm>
#include <cmath>

namespace loccdisc {

const char* case_name(CaseTag tag) {
  switch (tag) {
    case CaseTag::Linear: return "linear";
    case CaseTag::Quadratic: return "quadratic";
    case CaseTag::Boundary: return "boundary";
  }
  return "?";
}

CaseTag classify_case(const PriorPair& prior, double c, const Tolerances& tol) {
  const double ratio = std::sqrt(prior.phi / prior.psi);
  if (ratio > c + tol.eps_opt) return CaseTag::Linear;
  if (ratio < c - tol.eps_opt) return CaseTag::Quadratic;
  return CaseTag::Boundary;
}

OptimumResult pmax(const PriorPair& prior, double c, const Tolerances& tol) {
  if (c < -tol.eps_norm || c > 1.0 + tol.eps_norm)
    throw std::invalid_argument("pmax: overlap must lie in [0,1]");
  c = std::clamp(c, 0.0, 1.0);
  const CaseTag tag = classify_case(prior, c, tol);
  if (tag == CaseTag::Quadratic)
    return {prior.psi * (1.0 - c * c), tag};
  // At the boundary both formulas agree; use the linear one there.
  return {1.0 - 2.0 * std::sqrt(prior.phi * prior.psi) * c, tag};
}

namespace {

double checked_overlap(const Vector& phi, const Vector& psi, const char* who) {
  if (phi.size() != psi.size())
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  const Complex ov = phi.dot(psi);
  if (std::abs(ov.imag()) > 1e-8)
    throw std::invalid_argument(std::string(who) +
                                ": overlap must be real (Im = " +
                                std::to_string(ov.imag()) + ")");
  if (ov.real() < -1e-8)
    throw std::invalid_argument(std::string(who) +
                                ": overlap must be nonnegative");
  return std::max(ov.real(), 0.0);
}

void drop_null_effects(Measurement& m) {
  std::erase_if(m.effects,
                [](const Measurement::Effect& e) { return e.matrix.norm() < 1e-14; });
}

}  // namespace

Measurement unambiguous_measurement(const Vector& phi, const Vector& psi,
                                    double p_phi, double p_psi,
                                    const Tolerances& tol) {
  if (p_phi < -1e-12 || p_psi < -1e-12 ||
      std::abs(p_phi + p_psi - 1.0) > 1e-9)
    throw std::invalid_argument(
        "unambiguous_measurement: probabilities must be nonnegative and sum to 1");
  const double p = std::max(p_phi, 0.0);
  const double q = std::max(p_psi, 0.0);
  if (std::abs(phi.norm() - 1.0) > tol.eps_norm ||
      std::abs(psi.norm() - 1.0) > tol.eps_norm)
    throw std::invalid_argument("unambiguous_measurement: states must be unit");
  const double c = checked_overlap(phi, psi, "unambiguous_measurement");
  const Eigen::Index dim = phi.size();
  const Matrix identity = Matrix::Identity(dim, dim);

  if (c >= 1.0 - 1e-12) {
    // Identical states carry no conclusive information.
    Measurement m;
    m.effects.push_back({Outcome::Inconclusive, identity});
    return m;
  }

  const double sub = std::sqrt(1.0 - c * c);
  const Vector psi_perp = (phi - c * psi) / sub;  // in span, orthogonal to psi
  const Vector phi_perp = (psi - c * phi) / sub;  // in span, orthogonal to phi

  // Conclusive weights: a detects phi, b detects psi. The closed-form pair
  // saturates positivity of the inconclusive effect; a negative value means
  // the corresponding detection is priced out and the optimum is one-sided.
  double a, b;
  if (c <= 1e-14) {
    a = b = 1.0;
  } else if (p <= 1e-300) {
    a = 0.0;
    b = 1.0;
  } else if (q <= 1e-300) {
    a = 1.0;
    b = 0.0;
  } else {
    a = (1.0 - std::sqrt(q / p) * c) / (1.0 - c * c);
    b = (1.0 - std::sqrt(p / q) * c) / (1.0 - c * c);
    if (a < 0.0) { a = 0.0; b = 1.0; }
    else if (b < 0.0) { a = 1.0; b = 0.0; }
  }

  const Matrix detect_phi = a * (psi_perp * psi_perp.adjoint());
  const Matrix detect_psi = b * (phi_perp * phi_perp.adjoint());
  Measurement m;
  m.effects.push_back({Outcome::ConcludePhi, detect_phi});
  m.effects.push_back({Outcome::ConcludePsi, detect_psi});
  m.effects.push_back({Outcome::Inconclusive, identity - detect_phi - detect_psi});
  drop_null_effects(m);
  return m;
}

Measurement orthogonal_measurement(const Vector& phi, const Vector& psi,
                                   const Tolerances& tol) {
  if (phi.size() != psi.size())
    throw std::invalid_argument("orthogonal_measurement: dimension mismatch");
  const double ov = std::abs(phi.dot(psi));
  if (ov > tol.eps_real)
    throw std::invalid_argument(
        "orthogonal_measurement: states are not orthogonal (|<phi|psi>| = " +
        std::to_string(ov) + ")");
  const Eigen::Index dim = phi.size();
  const Matrix detect_phi = phi * phi.adjoint();
  Measurement m;
  m.effects.push_back({Outcome::ConcludePhi, detect_phi});
  m.effects.push_back({Outcome::ConcludePsi,
                       Matrix::Identity(dim, dim) - detect_phi});
  return m;
}

double brute_force_pmax(const Vector& phi, const Vector& psi, double p_phi,
                        double p_psi, double resolution) {
  if (resolution <= 0.0)
    throw std::invalid_argument("brute_force_pmax: resolution must be positive");
  const double c = checked_overlap(phi, psi, "brute_force_pmax");
  const double info = 1.0 - c * c;
  if (info <= 1e-12) return 0.0;
  const double sub = std::sqrt(info);

  // Everything happens in the span of {phi, psi}; in the orthonormal basis
  // {phi, (psi - c phi)/sub} the inconclusive effect is the 2x2 matrix below.
  // Feasibility is monotone in b for fixed a, so the best grid b is found by
  // bisection; the result is exactly the full-grid maximum.
  const auto feasible = [&](double a, double b) {
    const double m00 = 1.0 - a * info;
    const double m01 = a * c * sub;
    const double m11 = 1.0 - a * c * c - b;
    return m00 >= -1e-12 && m11 >= -1e-12 && m00 * m11 - m01 * m01 >= -1e-12;
  };

  const int n = std::max(1, static_cast<int>(std::lround(1.0 / resolution)));
  double best = 0.0;
  for (int ia = 0; ia <= n; ++ia) {
    const double a = static_cast<double>(ia) / n;
    if (!feasible(a, 0.0)) continue;
    int lo = 0, hi = n;
    while (lo < hi) {
      const int mid = (lo + hi + 1) / 2;
      if (feasible(a, static_cast<double>(mid) / n))
        lo = mid;
      else
        hi = mid - 1;
    }
    const double b = static_cast<double>(lo) / n;
    best = std::max(best, (p_phi * a + p_psi * b) * info);
  }
  return best;
}

}  // namespace loccdisc
