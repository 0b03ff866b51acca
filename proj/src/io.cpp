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

#include "loccdisc/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "loccdisc/core.hpp"

namespace loccdisc {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json amplitudes_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k)
    arr.push_back({v(k).real(), v(k).imag()});
  return arr;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector amplitudes_from_json(const json& arr, Eigen::Index expected,
                            const std::string& field) {
  if (!arr.is_array())
    throw parse_error("field '" + field + "' must be an array");
  if (static_cast<Eigen::Index>(arr.size()) != expected)
    throw parse_error("field '" + field + "' has length " +
                      std::to_string(arr.size()) + ", expected " +
                      std::to_string(expected));
  Vector v(expected);
  for (Eigen::Index k = 0; k < expected; ++k) {
    const json& pair = arr[static_cast<std::size_t>(k)];
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
        !pair[1].is_number())
      throw parse_error("field '" + field + "', entry " + std::to_string(k) +
                        ": expected an [re, im] pair");
    v(k) = Complex(pair[0].get<double>(), pair[1].get<double>());
  }
  return v;
}

BipartiteState state_from_json(const json& j, int da, int db,
                               const std::string& field,
                               std::vector<std::string>& warnings) {
  BipartiteState s{da, db,
                   amplitudes_from_json(j, static_cast<Eigen::Index>(da) * db,
                                        field)};
  const double norm = s.amplitudes.norm();
  const double dev = std::abs(norm - 1.0);
  if (dev > 1e-4)
    throw parse_error("field '" + field + "' is not normalized (|norm-1| = " +
                      std::to_string(dev) + ", beyond the warning threshold)");
  if (dev > 1e-10) {
    if (dev > 1e-8)
      warnings.push_back("field '" + field + "' renormalized (|norm-1| = " +
                         std::to_string(dev) + ")");
    s.amplitudes /= norm;
  }
  return s;
}

}  // namespace

ParsedInstance parse_instance_json(const json& j) {
  if (!j.is_object()) throw parse_error("instance file must be a JSON object");
  for (const char* field : {"dimA", "dimB", "phi", "psi", "priorPhi"})
    if (!j.contains(field))
      throw parse_error(std::string("missing field '") + field + "'");
  if (!j["dimA"].is_number_integer() || !j["dimB"].is_number_integer())
    throw parse_error("fields 'dimA'/'dimB' must be integers");
  const int da = j["dimA"].get<int>();
  const int db = j["dimB"].get<int>();
  if (da < 1 || db < 1) throw parse_error("dimensions must be >= 1");
  if (!j["priorPhi"].is_number())
    throw parse_error("field 'priorPhi' must be a number");
  const double prior = j["priorPhi"].get<double>();
  if (prior < 0.0 || prior > 1.0)
    throw parse_error("field 'priorPhi' must lie in [0,1]");

  ParsedInstance out;
  out.prior_phi_raw = prior;
  const BipartiteState phi = state_from_json(j["phi"], da, db, "phi", out.warnings);
  const BipartiteState psi = state_from_json(j["psi"], da, db, "psi", out.warnings);
  out.instance = canonicalize(phi, psi, prior);
  return out;
}

ParsedInstance parse_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw parse_error("malformed JSON in '" + path + "': " + e.what());
  }
  return parse_instance_json(j);
}

ordered_json instance_to_json(const DiscriminationInstance& inst,
                              double prior_phi) {
  ordered_json j;
  j["dimA"] = inst.phi.dim_a;
  j["dimB"] = inst.phi.dim_b;
  j["phi"] = amplitudes_to_json(inst.phi.amplitudes);
  j["psi"] = amplitudes_to_json(inst.psi.amplitudes);
  j["priorPhi"] = prior_phi;
  return j;
}

namespace {

ordered_json branch_to_json(const OutcomeBranch& br) {
  ordered_json b;
  b["label"] = br.label;
  b["probability"] = br.probability;
  b["postPhi"] = br.post_phi;
  b["postPsi"] = br.post_psi;
  b["action"] = branch_action_name(br.action);
  if (br.action == BranchAction::Measure) {
    b["bobPhi"] = amplitudes_to_json(br.bob_phi);
    b["bobPsi"] = amplitudes_to_json(br.bob_psi);
    b["pairOverlap"] = br.pair_overlap;
    ordered_json ops = ordered_json::array();
    for (const auto& effect : br.measurement.effects) {
      ordered_json e;
      e["outcome"] = outcome_name(effect.outcome);
      e["matrix"] = matrix_to_json(effect.matrix);
      ops.push_back(std::move(e));
    }
    b["measurement"] = std::move(ops);
  } else if (br.action == BranchAction::Walgate) {
    b["subprotocol"] = protocol_to_json(*br.subprotocol);
  }
  return b;
}

}  // namespace

ordered_json protocol_to_json(const LoccProtocol& protocol) {
  ordered_json j;
  j["format"] = "loccdisc-protocol/1";
  j["dimA"] = protocol.instance.phi.dim_a;
  j["dimB"] = protocol.instance.phi.dim_b;
  j["instance"] = instance_to_json(protocol.instance, protocol.instance.prior.phi);
  j["swapped"] = protocol.instance.prior.swapped;
  j["overlap"] = protocol.instance.overlap;
  j["case"] = case_name(protocol.case_tag);
  if (protocol.effective) {
    j["effectivePriors"] = {{"phi", protocol.effective->phi},
                            {"psi", protocol.effective->psi}};
  }
  j["pmax"] = pmax(protocol.instance.prior, protocol.instance.overlap).value;
  j["analyticSuccess"] = protocol.analytic_success;

  ordered_json anc;
  anc["labels"] = protocol.ancilla.labels;
  anc["isometry"] = matrix_to_json(protocol.ancilla.isometry);
  ordered_json blocks = ordered_json::array();
  for (const auto& blk : protocol.ancilla.blocks) {
    ordered_json b;
    b["label"] = blk.label;
    b["phiWeight"] = blk.phi_weight;
    b["psiWeight"] = blk.psi_weight;
    b["phiBlock"] = amplitudes_to_json(blk.phi_block.amplitudes);
    b["psiBlock"] = amplitudes_to_json(blk.psi_block.amplitudes);
    blocks.push_back(std::move(b));
  }
  anc["orthogonalBlocks"] = std::move(blocks);
  ordered_json terms = ordered_json::array();
  for (const auto& rt : protocol.ancilla.ratio_terms) {
    ordered_json t;
    t["label"] = rt.label;
    t["aliceVector"] = amplitudes_to_json(rt.alice_vec);
    t["phiWeight"] = rt.phi_weight;
    t["psiWeight"] = rt.psi_weight;
    t["phiVec"] = amplitudes_to_json(rt.phi_vec);
    t["psiVec"] = amplitudes_to_json(rt.psi_vec);
    t["pairOverlap"] = rt.pair_overlap;
    terms.push_back(std::move(t));
  }
  anc["ratioTerms"] = std::move(terms);
  j["ancilla"] = std::move(anc);

  ordered_json branches = ordered_json::array();
  for (const auto& br : protocol.branches) branches.push_back(branch_to_json(br));
  j["branches"] = std::move(branches);
  return j;
}

ordered_json check_report_to_json(const CheckReport& report) {
  ordered_json arr = ordered_json::array();
  for (const auto& item : report.items) {
    ordered_json c;
    c["name"] = item.name;
    c["residual"] = item.residual;
    c["tolerance"] = item.tolerance;
    c["pass"] = item.pass;
    arr.push_back(std::move(c));
  }
  return arr;
}

ordered_json simulation_to_json(const SimulationReport& report) {
  ordered_json j;
  j["trials"] = report.trials;
  j["countCorrectPhi"] = report.correct_phi;
  j["countCorrectPsi"] = report.correct_psi;
  j["countInconclusive"] = report.inconclusive;
  j["countError"] = report.errors;
  j["empiricalSuccess"] = report.empirical_success;
  j["analyticSuccess"] = report.analytic_success;
  j["seed"] = report.seed;
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace loccdisc
