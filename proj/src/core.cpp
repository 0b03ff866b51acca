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

#include "loccdisc/core.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

namespace loccdisc {

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::ConcludePhi: return "conclude_phi";
    case Outcome::ConcludePsi: return "conclude_psi";
    case Outcome::Inconclusive: return "inconclusive";
  }
  return "?";
}

Complex overlap(const BipartiteState& a, const BipartiteState& b) {
  if (a.dim_a != b.dim_a || a.dim_b != b.dim_b)
    throw std::invalid_argument("overlap: dimension mismatch");
  return a.amplitudes.dot(b.amplitudes);  // Eigen's dot conjugates the left side
}

namespace {

void require_normalized(const BipartiteState& s, const char* label,
                        const Tolerances& tol) {
  if (s.amplitudes.size() != static_cast<Eigen::Index>(s.dim_a) * s.dim_b)
    throw std::invalid_argument(std::string("canonicalize: ") + label +
                                " amplitude length does not match dims");
  const double norm_dev = std::abs(s.amplitudes.norm() - 1.0);
  if (norm_dev > tol.eps_norm)
    throw std::invalid_argument(std::string("canonicalize: ") + label +
                                " is not normalized (|norm-1| = " +
                                std::to_string(norm_dev) + ")");
}

}  // namespace

DiscriminationInstance canonicalize(const BipartiteState& phi,
                                    const BipartiteState& psi,
                                    double prior_phi, const Tolerances& tol) {
  if (phi.dim_a != psi.dim_a || phi.dim_b != psi.dim_b)
    throw std::invalid_argument("canonicalize: dimension mismatch");
  if (prior_phi < 0.0 || prior_phi > 1.0)
    throw std::invalid_argument("canonicalize: prior must lie in [0,1]");
  require_normalized(phi, "phi", tol);
  require_normalized(psi, "psi", tol);

  DiscriminationInstance inst;
  const bool swap = prior_phi > 1.0 - prior_phi;
  if (swap) {
    inst.phi = psi;
    inst.psi = phi;
    inst.prior = {1.0 - prior_phi, prior_phi, true};
  } else {
    inst.phi = phi;
    inst.psi = psi;
    inst.prior = {prior_phi, 1.0 - prior_phi, false};
  }

  Complex ov = overlap(inst.phi, inst.psi);
  // Phase fixing would divide by |<phi|psi>|; skip it for (near-)orthogonal
  // pairs where the phase is irrelevant, and when the overlap is already
  // real nonnegative so canonicalize is exactly idempotent.
  if (std::abs(ov) >= 1e-14 &&
      !(std::abs(ov.imag()) <= 1e-13 * std::abs(ov) && ov.real() > 0.0)) {
    const Complex phase = ov / std::abs(ov);
    inst.psi.amplitudes /= phase;
    ov = std::abs(ov);
  }
  inst.overlap = ov.real();
  return inst;
}

MeasurementValidation validate_measurement(const Measurement& m,
                                           const Tolerances& tol) {
  MeasurementValidation v;
  if (m.effects.empty()) {
    v.violations.push_back("measurement has no effects");
    return v;
  }
  const Eigen::Index dim = m.effects.front().matrix.rows();
  Matrix sum = Matrix::Zero(dim, dim);
  v.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m.effects.size(); ++k) {
    const Matrix& e = m.effects[k].matrix;
    if (e.rows() != dim || e.cols() != dim) {
      v.violations.push_back("effect " + std::to_string(k) + " has wrong shape");
      continue;
    }
    const double herm = (e - e.adjoint()).norm();
    v.hermiticity_residual = std::max(v.hermiticity_residual, herm);
    if (herm > tol.eps_psd)
      v.violations.push_back("effect " + std::to_string(k) +
                             " is not Hermitian (residual " +
                             std::to_string(herm) + ")");
    Eigen::SelfAdjointEigenSolver<Matrix> es(
        Matrix(0.5 * (e + e.adjoint())), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    v.min_eigenvalue = std::min(v.min_eigenvalue, lo);
    if (lo < -tol.eps_psd)
      v.violations.push_back("effect " + std::to_string(k) +
                             " is not positive semidefinite (min eigenvalue " +
                             std::to_string(lo) + ")");
    sum += e;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(
      Matrix(sum - Matrix::Identity(dim, dim)), Eigen::EigenvaluesOnly);
  v.completeness_residual = es.eigenvalues().cwiseAbs().maxCoeff();
  if (v.completeness_residual > tol.eps_psd)
    v.violations.push_back("effects do not sum to identity (residual " +
                           std::to_string(v.completeness_residual) + ")");
  return v;
}

namespace {

Vector gaussian_unit_vector(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (int k = 0; k < dim; ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    v(k) = Complex(re, im);
  }
  v.normalize();
  return v;
}

}  // namespace

Vector random_unit_vector(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return gaussian_unit_vector(dim, rng);
}

DiscriminationInstance random_instance(int dim_a, int dim_b, double prior_phi,
                                       std::uint64_t seed) {
  if (dim_a < 1 || dim_b < 1)
    throw std::invalid_argument("random_instance: dims must be >= 1");
  std::mt19937_64 rng(seed);
  BipartiteState phi{dim_a, dim_b, gaussian_unit_vector(dim_a * dim_b, rng)};
  BipartiteState psi{dim_a, dim_b, gaussian_unit_vector(dim_a * dim_b, rng)};
  return canonicalize(phi, psi, prior_phi);
}

std::uint64_t instance_digest(const DiscriminationInstance& inst) {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < len; ++k) {
      h ^= p[k];
      h *= 1099511628211ULL;
    }
  };
  const std::int32_t dims[2] = {inst.phi.dim_a, inst.phi.dim_b};
  feed(dims, sizeof(dims));
  feed(inst.phi.amplitudes.data(),
       sizeof(Complex) * inst.phi.amplitudes.size());
  feed(inst.psi.amplitudes.data(),
       sizeof(Complex) * inst.psi.amplitudes.size());
  feed(&inst.prior.phi, sizeof(double));
  return h;
}

}  // namespace loccdisc
