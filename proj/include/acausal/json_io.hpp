#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "acausal/circuits.hpp"
#include "acausal/comb.hpp"
#include "acausal/neumark.hpp"
#include "acausal/process_matrix.hpp"
#include "acausal/resources.hpp"
#include "acausal/separability.hpp"

namespace acausal {

using Json = nlohmann::json;

// Serialization schemas. Operators are stored as
//   { "labels": [{"name", "dim"}...], "re": [[...]], "im": [[...]] }
// with row-major nested arrays; every composite schema embeds this one.

inline Json to_json(const LabeledOperator& op) {
  Json j;
  j["labels"] = Json::array();
  for (const auto& l : op.labels()) j["labels"].push_back({{"name", l.name}, {"dim", l.dim}});
  const Matrix& m = op.matrix();
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json re_row = Json::array(), im_row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      re_row.push_back(m(r, c).real());
      im_row.push_back(m(r, c).imag());
    }
    re.push_back(std::move(re_row));
    im.push_back(std::move(im_row));
  }
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  return j;
}

inline LabeledOperator operator_from_json(const Json& j) {
  try {
    if (!j.contains("labels") || !j.contains("re") || !j.contains("im"))
      throw ParseError("operator JSON needs 'labels', 're', and 'im'");
    std::vector<SubsystemLabel> labels;
    for (const auto& l : j.at("labels"))
      labels.push_back({l.at("name").get<std::string>(), l.at("dim").get<int>()});
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    const Eigen::Index rows = static_cast<Eigen::Index>(re.size());
    if (rows == 0) throw ParseError("operator JSON has an empty matrix");
    const Eigen::Index cols = static_cast<Eigen::Index>(re.at(0).size());
    if (im.size() != re.size()) throw ParseError("'re' and 'im' shapes differ");
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& re_row = re.at(static_cast<std::size_t>(r));
      const auto& im_row = im.at(static_cast<std::size_t>(r));
      if (static_cast<Eigen::Index>(re_row.size()) != cols ||
          static_cast<Eigen::Index>(im_row.size()) != cols)
        throw ParseError("matrix rows have inconsistent lengths");
      for (Eigen::Index c = 0; c < cols; ++c)
        m(r, c) = Complex(re_row.at(static_cast<std::size_t>(c)).get<double>(),
                          im_row.at(static_cast<std::size_t>(c)).get<double>());
    }
    return LabeledOperator(std::move(labels), std::move(m));
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed operator JSON: ") + e.what());
  }
}

inline Json to_json(const Instrument& ins) {
  Json j;
  j["outcomes"] = Json::array();
  for (const auto& o : ins.outcomes) j["outcomes"].push_back(to_json(o.op));
  j["in_dim"] = ins.in_dim();
  j["out_dim"] = ins.out_dim();
  return j;
}

inline Instrument instrument_from_json(const Json& j) {
  try {
    Instrument ins;
    for (const auto& o : j.at("outcomes")) {
      LabeledOperator op = operator_from_json(o);
      if (op.labels().size() != 2) throw ParseError("instrument outcome needs two wires");
      ins.outcomes.push_back(ChoiOperator{std::move(op)});
    }
    if (ins.outcomes.empty()) throw ParseError("instrument has no outcomes");
    if (j.at("in_dim").get<int>() != ins.in_dim() ||
        j.at("out_dim").get<int>() != ins.out_dim())
      throw ParseError("instrument dims disagree with its outcomes");
    return ins;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed instrument JSON: ") + e.what());
  }
}

inline Json to_json(const CombChoi& comb) {
  Json j = to_json(comb.op);
  j["order"] = to_string(comb.order);
  return j;
}

inline CombChoi comb_from_json(const Json& j) {
  try {
    const std::string order = j.at("order").get<std::string>();
    if (order != "AB" && order != "BA") throw ParseError("comb order must be 'AB' or 'BA'");
    return make_comb(operator_from_json(j), order == "AB" ? SlotOrder::AB : SlotOrder::BA);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed comb JSON: ") + e.what());
  }
}

inline Json to_json(const SeparabilityVerdict& v) {
  Json j;
  j["status"] = to_string(v.status);
  j["residual"] = v.residual;
  j["iterations"] = v.iterations;
  if (v.status == SeparabilityStatus::separable) j["q"] = v.q;
  if (v.components) {
    j["components"] = Json::array();
    j["components"].push_back(to_json(v.components->first));
    j["components"].push_back(to_json(v.components->second));
  }
  if (v.status == SeparabilityStatus::non_separable) j["witness_value"] = v.witness_value;
  return j;
}

inline Json to_json(const SynthesisResult& res) {
  Json j;
  j["initial_state"] = to_json(res.initial_state);
  j["V"] = to_json(res.v);
  j["projector_label"] = res.projector_label;
  j["p_succ"] = res.p_succ;
  j["lambda_max"] = res.lambda_max;
  j["alpha"] = res.alpha;
  return j;
}

inline SynthesisResult synthesis_from_json(const Json& j) {
  try {
    SynthesisResult res;
    res.initial_state = operator_from_json(j.at("initial_state"));
    res.v = operator_from_json(j.at("V"));
    res.projector_label = j.at("projector_label").get<std::string>();
    res.p_succ = j.at("p_succ").get<double>();
    res.lambda_max = j.at("lambda_max").get<double>();
    res.alpha = j.value("alpha", res.lambda_max > 0.0 ? 1.0 / res.lambda_max : 0.0);
    return res;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed synthesis JSON: ") + e.what());
  }
}

inline Json to_json(const ParallelCircuit& c) {
  Json j;
  j["kind"] = "parallel";
  j["rho"] = to_json(c.rho);
  j["V"] = to_json(c.v);
  j["projectors"] = Json::array();
  for (const auto& p : c.projectors) j["projectors"].push_back(to_json(p));
  return j;
}

inline Json to_json(const SerialCircuit& c) {
  Json j;
  j["kind"] = "serial";
  j["rho"] = to_json(c.rho);
  j["U"] = to_json(c.u);
  j["V"] = to_json(c.v);
  j["projectors"] = Json::array();
  for (const auto& p : c.projectors) j["projectors"].push_back(to_json(p));
  return j;
}

// Tagged union for circuit files; exactly one member is populated.
struct CircuitFile {
  std::string kind;
  std::optional<ParallelCircuit> parallel;
  std::optional<SerialCircuit> serial;
};

inline CircuitFile circuit_from_json(const Json& j) {
  try {
    CircuitFile f;
    f.kind = j.at("kind").get<std::string>();
    std::vector<LabeledOperator> projectors;
    for (const auto& p : j.at("projectors")) projectors.push_back(operator_from_json(p));
    if (f.kind == "parallel") {
      f.parallel = make_parallel_circuit(operator_from_json(j.at("rho")),
                                         operator_from_json(j.at("V")), std::move(projectors));
    } else if (f.kind == "serial") {
      f.serial = make_serial_circuit(operator_from_json(j.at("rho")),
                                     operator_from_json(j.at("U")),
                                     operator_from_json(j.at("V")), std::move(projectors));
    } else {
      throw ParseError("circuit kind must be 'parallel' or 'serial'");
    }
    return f;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed circuit JSON: ") + e.what());
  }
}

inline Json to_json(const BipartitionReport& r) {
  Json j;
  j["side"] = r.side;
  j["complement"] = r.complement;
  j["ppt"] = r.ppt;
  j["min_pt_eigenvalue"] = r.min_pt_eigenvalue;
  j["schmidt_rank"] = r.schmidt_rank;
  j["certified"] = to_string(r.certified);
  return j;
}

inline Json to_json(const ResourceReport& r) {
  Json j;
  j["state_cuts"] = Json::array();
  for (const auto& c : r.state_cuts) j["state_cuts"].push_back(to_json(c));
  j["unitary_cuts"] = Json::array();
  for (const auto& c : r.unitary_cuts) j["unitary_cuts"].push_back(to_json(c));
  j["branches"] = Json::array();
  for (const auto& b : r.branches) {
    Json e;
    e["mu"] = b.mu;
    e["null_outcome"] = b.null_outcome;
    e["p"] = b.p;
    e["proper"] = b.proper;
    e["instrument_dependence"] = b.instrument_dependence;
    e["valid"] = b.valid;
    e["verdict"] = to_string(b.verdict);
    j["branches"].push_back(std::move(e));
  }
  j["resources_sufficient"] = r.resources_sufficient;
  j["restriction_applies"] = r.restriction_applies;
  j["theorem_consistent"] = r.theorem_consistent;
  return j;
}

inline Json to_json(const ValidityReport& r) {
  Json j;
  j["ok"] = r.ok;
  j["hermiticity_residual"] = r.hermiticity_residual;
  j["psd_residual"] = r.psd_residual;
  j["forbidden_term_norm"] = r.forbidden_term_norm;
  j["normalization_residual"] = r.normalization_residual;
  j["forbidden_families"] = Json::array();
  for (const auto& [name, norm] : r.family_residuals) {
    Json e;
    e["family"] = name;
    e["norm"] = norm;
    j["forbidden_families"].push_back(std::move(e));
  }
  return j;
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError("cannot parse '" + path + "': " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

}  // namespace acausal
