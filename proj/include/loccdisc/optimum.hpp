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

#ifndef LOCCDISC_OPTIMUM_HPP
#define LOCCDISC_OPTIMUM_HPP

#include "loccdisc/types.hpp"

namespace loccdisc {

/// Which closed form applies: Linear when sqrt(s/t) exceeds the overlap,
/// Quadratic when it falls below, Boundary within eps_opt of equality.
enum class CaseTag { Linear, Quadratic, Boundary };

const char* case_name(CaseTag tag);

struct OptimumResult {
  double value = 0.0;
  CaseTag tag = CaseTag::Linear;
};

CaseTag classify_case(const PriorPair& prior, double c,
                      const Tolerances& tol = {});

/// Globally optimal conclusive success probability for priors (s,t) and
/// overlap magnitude c: 1 - 2*sqrt(s*t)*c in the Linear/Boundary case,
/// t*(1 - c^2) in the Quadratic case.
OptimumResult pmax(const PriorPair& prior, double c,
                   const Tolerances& tol = {});

/// Bob's zero-error measurement discriminating unit vectors phi/psi held
/// with probabilities (p_phi, p_psi). Requires <phi|psi> real >= 0. The
/// success probability matches pmax for those posteriors; identical
/// states yield the all-inconclusive measurement {I}.
Measurement unambiguous_measurement(const Vector& phi, const Vector& psi,
                                    double p_phi, double p_psi,
                                    const Tolerances& tol = {});

/// Two-outcome projective measurement for an orthogonal pair:
/// |phi><phi| -> ConcludePhi, the rest -> ConcludePsi.
Measurement orthogonal_measurement(const Vector& phi, const Vector& psi,
                                   const Tolerances& tol = {});

/// Independent oracle for the closed forms: sweeps the two-parameter
/// zero-error family E_phi = a|psi_perp><psi_perp|, E_psi =
/// b|phi_perp><phi_perp| on an (a,b) grid of the given resolution,
/// keeping I - E_phi - E_psi positive semidefinite, and returns the best
/// success probability found.
double brute_force_pmax(const Vector& phi, const Vector& psi, double p_phi,
                        double p_psi, double resolution);

}  // namespace loccdisc

#endif  // LOCCDISC_OPTIMUM_HPP
