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

#ifndef LOCCDISC_CORE_HPP
#define LOCCDISC_CORE_HPP

#include <cstdint>

#include "loccdisc/types.hpp"

namespace loccdisc {

/// <a|b>. Throws std::invalid_argument on dimension mismatch.
Complex overlap(const BipartiteState& a, const BipartiteState& b);

/// Normalize the instance: order the pair so the phi-prior is the smaller
/// one (recording the swap), and rotate psi's global phase so <phi|psi> is
/// real and nonnegative. Orthogonal pairs are left untouched.
DiscriminationInstance canonicalize(const BipartiteState& phi,
                                    const BipartiteState& psi,
                                    double prior_phi,
                                    const Tolerances& tol = {});

MeasurementValidation validate_measurement(const Measurement& m,
                                           const Tolerances& tol = {});

/// Deterministic instance generator. States are drawn from the
/// rotation-invariant distribution on unit vectors (normalized i.i.d.
/// complex Gaussians), then canonicalized.
DiscriminationInstance random_instance(int dim_a, int dim_b, double prior_phi,
                                       std::uint64_t seed);

/// Unit vector of i.i.d. complex Gaussian entries, normalized.
Vector random_unit_vector(int dim, std::uint64_t seed);

/// FNV-1a over the canonical amplitude bytes and prior; used as the
/// instance digest in reports.
std::uint64_t instance_digest(const DiscriminationInstance& inst);

}  // namespace loccdisc

#endif  // LOCCDISC_CORE_HPP
