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

#ifndef LOCCDISC_IO_HPP
#define LOCCDISC_IO_HPP

#include <string>

#include "json.hpp"

#include "loccdisc/protocol.hpp"
#include "loccdisc/types.hpp"

namespace loccdisc {

/// Thrown on malformed instance files; the message names the field.
class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParsedInstance {
  DiscriminationInstance instance;
  double prior_phi_raw = 0.0;        // prior as written in the file
  std::vector<std::string> warnings; // e.g. renormalization notices
};

/// Read an instance file (dimA, dimB, phi, psi, priorPhi; amplitudes as
/// [re, im] pairs, Alice-index-major) and canonicalize it. States off
/// unit norm by more than 1e-4 are rejected; smaller deviations are
/// renormalized, with a warning beyond 1e-8.
ParsedInstance parse_instance(const std::string& path);

ParsedInstance parse_instance_json(const nlohmann::json& j);

/// Instance file contents for the given states and prior. The inverse of
/// parse_instance up to canonicalization.
nlohmann::ordered_json instance_to_json(const DiscriminationInstance& inst,
                                        double prior_phi);

/// Full protocol export: isometry, branches, posteriors, measurement
/// operators and block states; everything an external checker needs.
nlohmann::ordered_json protocol_to_json(const LoccProtocol& protocol);

nlohmann::ordered_json check_report_to_json(const CheckReport& report);
nlohmann::ordered_json simulation_to_json(const SimulationReport& report);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace loccdisc

#endif  // LOCCDISC_IO_HPP
