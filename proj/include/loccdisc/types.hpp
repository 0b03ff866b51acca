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

#ifndef LOCCDISC_TYPES_HPP
#define LOCCDISC_TYPES_HPP

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace loccdisc {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

/// Thrown when an iterative procedure fails to reach its target residual,
/// or an internal consistency check trips. Carries the offending stage
/// and the residual observed when giving up.
class numerical_error : public std::runtime_error {
 public:
  numerical_error(std::string stage, const std::string& what, double residual)
      : std::runtime_error(stage + ": " + what),
        stage_(std::move(stage)),
        residual_(residual) {}

  const std::string& stage() const noexcept { return stage_; }
  double residual() const noexcept { return residual_; }

 private:
  std::string stage_;
  double residual_;
};

struct Tolerances {
  double eps_norm = 1e-10;  // state and basis normalization
  double eps_real = 1e-10;  // imaginary-part residuals
  double eps_opt = 1e-9;    // optimality / case-boundary comparisons
  double eps_psd = 1e-10;   // measurement positivity and completeness
  int max_sweeps = 0;       // 0 = pick 10*n*n for an n-term expansion

  int sweep_cap(int n_terms) const {
    return max_sweeps > 0 ? max_sweeps : 10 * n_terms * n_terms;
  }
};

/// Preparation probabilities after canonicalization: phi <= psi, sum 1.
/// `swapped` records whether the state labels were exchanged to get there,
/// so user-facing output can restore the original naming.
struct PriorPair {
  double phi = 0.5;
  double psi = 0.5;
  bool swapped = false;
};

/// Pure state of an Alice/Bob pair. Amplitudes are Alice-index-major:
/// the coefficient of |i>_A |j>_B sits at i*dim_b + j, so Alice's basis
/// vector i owns the contiguous block [i*dim_b, (i+1)*dim_b).
struct BipartiteState {
  int dim_a = 0;
  int dim_b = 0;
  Vector amplitudes;

  Complex amp(int alice, int bob) const {
    return amplitudes(static_cast<Eigen::Index>(alice) * dim_b + bob);
  }

  /// The dim_b-long slice owned by Alice's basis vector `alice`.
  Vector bob_block(int alice) const {
    return amplitudes.segment(static_cast<Eigen::Index>(alice) * dim_b, dim_b);
  }
};

struct DiscriminationInstance {
  BipartiteState phi;
  BipartiteState psi;
  PriorPair prior;
  double overlap = 0.0;  // <phi|psi>, real and >= 0 after canonicalization
};

enum class Outcome { ConcludePhi, ConcludePsi, Inconclusive };

const char* outcome_name(Outcome o);

/// A POVM on Bob's space: positive operators labelled with conclusions,
/// summing to the identity.
struct Measurement {
  struct Effect {
    Outcome outcome;
    Matrix matrix;
  };
  std::vector<Effect> effects;
};

/// Result of validating one measurement against the POVM axioms.
struct MeasurementValidation {
  double hermiticity_residual = 0.0;  // max over effects of ||E - E^dag||
  double min_eigenvalue = 0.0;        // min over effects of lambda_min(E)
  double completeness_residual = 0.0; // ||sum E - I||
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// One named numeric check: pass iff |residual| <= tolerance.
struct CheckItem {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct CheckReport {
  std::vector<CheckItem> items;

  bool all_pass() const {
    for (const auto& item : items)
      if (!item.pass) return false;
    return true;
  }

  void add(const std::string& name, double residual, double tolerance) {
    items.push_back({name, residual, tolerance, std::abs(residual) <= tolerance});
  }

  void merge(const CheckReport& other, const std::string& prefix) {
    for (const auto& item : other.items)
      items.push_back({prefix + item.name, item.residual, item.tolerance, item.pass});
  }
};

}  // namespace loccdisc

#endif  // LOCCDISC_TYPES_HPP
