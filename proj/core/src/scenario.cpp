#include "pinning/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace pinning {

using nlohmann::json;

namespace {

// Built-in coupling matrices.
const std::map<std::string, Matrix>& coupling_table() {
  static const std::map<std::string, Matrix> table = [] {
    std::map<std::string, Matrix> t;
    Matrix sym(3, 3);
    sym << -5.1, 5.0, 0.1,
            5.0, -11.0, 6.0,
            0.1, 6.0, -6.1;
    t["symmetric-3node"] = sym;
    Matrix asym(3, 3);
    asym << -2.0, 1.0, 1.0,
             1.0, -2.0, 1.0,
             0.0, 1.0, -1.0;
    t["asymmetric-3node"] = asym;
    Matrix two_block(3, 3);
    two_block << -1.0, 1.0, 0.0,
                  1.0, -1.0, 0.0,
                  1.0, 1.0, -2.0;
    t["two-block-reducible"] = two_block;
    return t;
  }();
  return table;
}

const char* const kInitialStates = R"([[40.1, 20.2, 30.3], [20.4, 30.5, 10.6], [60.7, 40.8, 50.9]])";
const char* const kCertificate = R"({"P": [1, 1, 1], "Delta": [10, 10, 10], "eta": 0.6218})";

std::map<std::string, std::string> make_builtin_table() {
  std::map<std::string, std::string> t;
  t["fig2-sym-uncontrolled"] = fmt::format(R"({{
  "name": "fig2-sym-uncontrolled",
  "description": "Three globally coupled Chua circuits, symmetric coupling, no controller",
  "coupling": "symmetric-3node",
  "coupling_strength": 10,
  "dynamics": {{"kind": "chua"}},
  "certificate": {1},
  "initial_states": {0},
  "reference_initial": [0, 0, 0],
  "integration": {{"dt": 0.001, "t_max": 50}},
  "outputs": {{"dir": "out/fig2-sym-uncontrolled"}}
}})",
                                           kInitialStates, kCertificate);
  t["fig4-sym-pinned"] = fmt::format(R"({{
  "name": "fig4-sym-pinned",
  "description": "Symmetric coupling with a single controller at node 1",
  "coupling": "symmetric-3node",
  "coupling_strength": 10,
  "dynamics": {{"kind": "chua"}},
  "pin": {{"node": 1, "epsilon": 4.9}},
  "certificate": {1},
  "initial_states": {0},
  "reference_initial": [0, 0, 0],
  "integration": {{"dt": 0.001, "t_max": 20}},
  "outputs": {{"dir": "out/fig4-sym-pinned"}},
  "analysis": {{"decay_window": [2, 10]}}
}})",
                                     kInitialStates, kCertificate);
  t["fig5-asym-pinned"] = fmt::format(R"({{
  "name": "fig5-asym-pinned",
  "description": "Asymmetric irreducible coupling with a single controller at node 1",
  "coupling": "asymmetric-3node",
  "coupling_strength": 72,
  "dynamics": {{"kind": "chua"}},
  "pin": {{"node": 1, "epsilon": 2}},
  "certificate": {1},
  "initial_states": {0},
  "reference_initial": [0, 0, 0],
  "integration": {{"dt": 0.0002, "t_max": 20, "stride": 5}},
  "outputs": {{"dir": "out/fig5-asym-pinned"}},
  "analysis": {{"decay_window": [2, 10]}}
}})",
                                      kInitialStates, kCertificate);
  t["nonlinear-pinned"] = fmt::format(R"({{
  "name": "nonlinear-pinned",
  "description": "Symmetric coupling through g(u) = u + 0.5 sin(u) with a single controller",
  "coupling": "symmetric-3node",
  "coupling_strength": 25,
  "dynamics": {{"kind": "chua"}},
  "coupling_function": {{"kind": "sine", "amplitude": 0.5}},
  "pin": {{"node": 1, "epsilon": 4.9}},
  "certificate": {1},
  "initial_states": {0},
  "reference_initial": [0, 0, 0],
  "integration": {{"dt": 0.001, "t_max": 30}},
  "outputs": {{"dir": "out/nonlinear-pinned"}},
  "analysis": {{"decay_window": [2, 10]}}
}})",
                                      kInitialStates, kCertificate);
  t["reducible-pinned"] = fmt::format(R"({{
  "name": "reducible-pinned",
  "description": "Two-block reducible coupling; the controller sits in the root block",
  "coupling": "two-block-reducible",
  "coupling_strength": 25,
  "dynamics": {{"kind": "chua"}},
  "pin": {{"node": 1, "epsilon": 2}},
  "certificate": {1},
  "initial_states": {0},
  "reference_initial": [0, 0, 0],
  "integration": {{"dt": 0.001, "t_max": 30}},
  "outputs": {{"dir": "out/reducible-pinned"}},
  "analysis": {{"decay_window": [2, 10]}}
}})",
                                      kInitialStates, kCertificate);
  return t;
}

const std::map<std::string, std::string>& builtin_table() {
  static const std::map<std::string, std::string> table = make_builtin_table();
  return table;
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& message) const {
    throw ValidationError(fmt::format("{}: field '{}': {}", source_, field, message));
  }

  const json& require(const json& obj, const std::string& key, const std::string& path) const {
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path, "missing required field");
    return *it;
  }

  double number(const json& value, const std::string& path) const {
    if (!value.is_number()) fail(path, "expected a number");
    const double x = value.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
  }

  std::string string(const json& value, const std::string& path) const {
    if (!value.is_string()) fail(path, "expected a string");
    return value.get<std::string>();
  }

  std::size_t index(const json& value, const std::string& path) const {
    if (!value.is_number_integer()) fail(path, "expected an integer");
    const auto i = value.get<long long>();
    if (i < 1) fail(path, "node indices are 1-based; got " + std::to_string(i));
    return static_cast<std::size_t>(i);
  }

  Vector vector(const json& value, const std::string& path) const {
    if (!value.is_array() || value.empty()) fail(path, "expected a non-empty array of numbers");
    Vector out(static_cast<Eigen::Index>(value.size()));
    for (std::size_t k = 0; k < value.size(); ++k) {
      out(static_cast<Eigen::Index>(k)) = number(value[k], fmt::format("{}[{}]", path, k));
    }
    return out;
  }

  Matrix matrix(const json& value, const std::string& path) const {
    if (!value.is_array() || value.empty()) fail(path, "expected a non-empty array of rows");
    const std::size_t rows = value.size();
    const std::size_t cols = value[0].is_array() ? value[0].size() : 0;
    Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
      const auto row_path = fmt::format("{}[{}]", path, i);
      if (!value[i].is_array() || value[i].size() != cols || cols == 0) {
        fail(row_path, fmt::format("dimension mismatch: expected a row of {} numbers", cols));
      }
      for (std::size_t j = 0; j < cols; ++j) {
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            number(value[i][j], fmt::format("{}[{}]", row_path, j));
      }
    }
    return out;
  }

  void only(const json& obj, std::initializer_list<const char*> keys,
            const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& item : obj.items()) {
      const bool known = std::any_of(keys.begin(), keys.end(),
                                     [&](const char* k) { return item.key() == k; });
      if (!known) fail(path.empty() ? item.key() : path + "." + item.key(), "unknown field");
    }
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

template <typename M>
json matrix_json(const M& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

std::string fmt_vec(const Vector& v) {
  std::string out = "(";
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    out += fmt::format("{}{:.6g}", k == 0 ? "" : ", ", v(k));
  }
  return out + ")";
}

std::string yes_no(bool holds) { return holds ? "holds" : "fails"; }

}  // namespace

std::filesystem::path ScenarioConfig::output_dir() const {
  return outputs.dir ? std::filesystem::path(*outputs.dir) : std::filesystem::path("out") / name;
}
std::string ScenarioConfig::trajectory_file() const {
  return outputs.trajectory.value_or("trajectory.csv");
}
std::string ScenarioConfig::metrics_file() const { return outputs.metrics.value_or("metrics.csv"); }
std::string ScenarioConfig::summary_file() const { return outputs.summary.value_or("summary.txt"); }
std::pair<double, double> ScenarioConfig::decay_window() const {
  return analysis.decay_window.value_or(
      std::make_pair(0.1 * integration.t_max, 0.5 * integration.t_max));
}
double ScenarioConfig::tol_rate() const { return analysis.tol_rate.value_or(1e-3); }
std::size_t ScenarioConfig::stride() const { return integration.stride.value_or(1); }

std::vector<std::string> builtin_coupling_ids() {
  std::vector<std::string> out;
  for (const auto& [id, m] : coupling_table()) out.push_back(id);
  return out;
}

std::optional<Matrix> builtin_coupling(const std::string& id) {
  const auto it = coupling_table().find(id);
  if (it == coupling_table().end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> builtin_scenario_ids() {
  std::vector<std::string> out;
  for (const auto& [id, text] : builtin_table()) out.push_back(id);
  return out;
}

std::optional<std::string> builtin_scenario_text(const std::string& id) {
  const auto it = builtin_table().find(id);
  if (it == builtin_table().end()) return std::nullopt;
  return it->second;
}

ScenarioConfig parse_scenario_text(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("{}: malformed JSON: {}", source, e.what()));
  }
  const Reader r(source);
  r.only(doc,
         {"name", "description", "coupling", "coupling_strength", "dynamics", "coupling_function",
          "pin", "certificate", "initial_states", "reference_initial", "integration", "outputs",
          "analysis"},
         "");

  ScenarioConfig cfg;
  cfg.name = r.string(r.require(doc, "name", "name"), "name");
  if (doc.contains("description")) cfg.description = r.string(doc["description"], "description");

  const auto& coupling = r.require(doc, "coupling", "coupling");
  if (coupling.is_string()) {
    const auto id = coupling.get<std::string>();
    auto m = builtin_coupling(id);
    if (!m) r.fail("coupling", "unknown built-in coupling id '" + id + "'");
    cfg.coupling_id = id;
    cfg.coupling = *m;
  } else {
    cfg.coupling = r.matrix(coupling, "coupling");
  }
  cfg.coupling_strength =
      r.number(r.require(doc, "coupling_strength", "coupling_strength"), "coupling_strength");

  const auto& dyn = r.require(doc, "dynamics", "dynamics");
  r.only(dyn, {"kind", "params"}, "dynamics");
  cfg.dynamics.kind = r.string(r.require(dyn, "kind", "dynamics.kind"), "dynamics.kind");
  if (dyn.contains("params")) {
    if (!dyn["params"].is_object()) r.fail("dynamics.params", "expected an object");
    for (const auto& item : dyn["params"].items()) {
      cfg.dynamics.params[item.key()] = r.number(item.value(), "dynamics.params." + item.key());
    }
  }

  if (doc.contains("coupling_function")) {
    const auto& g = doc["coupling_function"];
    r.only(g, {"kind", "amplitude"}, "coupling_function");
    cfg.coupling_function.kind =
        r.string(r.require(g, "kind", "coupling_function.kind"), "coupling_function.kind");
    if (g.contains("amplitude")) {
      cfg.coupling_function.amplitude = r.number(g["amplitude"], "coupling_function.amplitude");
    }
  }

  if (doc.contains("pin")) {
    const auto& pin = doc["pin"];
    r.only(pin, {"node", "epsilon"}, "pin");
    PinSpec p;
    p.node = r.index(r.require(pin, "node", "pin.node"), "pin.node");
    p.epsilon = r.number(r.require(pin, "epsilon", "pin.epsilon"), "pin.epsilon");
    cfg.pin = p;
  }

  if (doc.contains("certificate")) {
    const auto& cert = doc["certificate"];
    r.only(cert, {"P", "Delta", "eta", "box"}, "certificate");
    CertificateSpec c;
    c.p = r.vector(r.require(cert, "P", "certificate.P"), "certificate.P");
    c.delta = r.vector(r.require(cert, "Delta", "certificate.Delta"), "certificate.Delta");
    c.eta = r.number(r.require(cert, "eta", "certificate.eta"), "certificate.eta");
    if (cert.contains("box")) c.box = r.number(cert["box"], "certificate.box");
    cfg.certificate = c;
  }

  cfg.initial_states =
      r.matrix(r.require(doc, "initial_states", "initial_states"), "initial_states");
  cfg.reference_initial =
      r.vector(r.require(doc, "reference_initial", "reference_initial"), "reference_initial");

  const auto& integ = r.require(doc, "integration", "integration");
  r.only(integ, {"dt", "t_max", "stride"}, "integration");
  cfg.integration.dt = r.number(r.require(integ, "dt", "integration.dt"), "integration.dt");
  cfg.integration.t_max =
      r.number(r.require(integ, "t_max", "integration.t_max"), "integration.t_max");
  if (integ.contains("stride")) {
    if (!integ["stride"].is_number_integer() || integ["stride"].get<long long>() < 1) {
      r.fail("integration.stride", "expected a positive integer");
    }
    cfg.integration.stride = integ["stride"].get<std::size_t>();
  }

  if (doc.contains("outputs")) {
    const auto& out = doc["outputs"];
    r.only(out, {"dir", "trajectory", "metrics", "summary"}, "outputs");
    if (out.contains("dir")) cfg.outputs.dir = r.string(out["dir"], "outputs.dir");
    if (out.contains("trajectory")) {
      cfg.outputs.trajectory = r.string(out["trajectory"], "outputs.trajectory");
    }
    if (out.contains("metrics")) cfg.outputs.metrics = r.string(out["metrics"], "outputs.metrics");
    if (out.contains("summary")) cfg.outputs.summary = r.string(out["summary"], "outputs.summary");
  }

  if (doc.contains("analysis")) {
    const auto& an = doc["analysis"];
    r.only(an, {"decay_window", "tol_rate"}, "analysis");
    if (an.contains("decay_window")) {
      const Vector w = r.vector(an["decay_window"], "analysis.decay_window");
      if (w.size() != 2 || !(w(1) > w(0))) {
        r.fail("analysis.decay_window", "expected [t_a, t_b] with t_a < t_b");
      }
      cfg.analysis.decay_window = std::make_pair(w(0), w(1));
    }
    if (an.contains("tol_rate")) cfg.analysis.tol_rate = r.number(an["tol_rate"], "analysis.tol_rate");
  }

  try {
    validate_scenario(cfg);
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", source, e.what()), e.row(), e.col());
  }
  return cfg;
}

ScenarioConfig parse_scenario(const std::string& path_or_id) {
  if (auto text = builtin_scenario_text(path_or_id)) {
    return parse_scenario_text(*text, "builtin:" + path_or_id);
  }
  std::ifstream in(path_or_id);
  if (!in) {
    throw ValidationError(fmt::format("{}: not a readable file or built-in scenario id",
                                      path_or_id));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str(), path_or_id);
}

std::string serialize_scenario(const ScenarioConfig& cfg) {
  json doc;
  doc["name"] = cfg.name;
  if (cfg.description) doc["description"] = *cfg.description;
  if (cfg.coupling_id) {
    doc["coupling"] = *cfg.coupling_id;
  } else {
    doc["coupling"] = matrix_json(cfg.coupling);
  }
  doc["coupling_strength"] = cfg.coupling_strength;
  json dyn = {{"kind", cfg.dynamics.kind}};
  if (!cfg.dynamics.params.empty()) dyn["params"] = cfg.dynamics.params;
  doc["dynamics"] = dyn;
  if (cfg.coupling_function.kind != "identity" || cfg.coupling_function.amplitude) {
    json g = {{"kind", cfg.coupling_function.kind}};
    if (cfg.coupling_function.amplitude) g["amplitude"] = *cfg.coupling_function.amplitude;
    doc["coupling_function"] = g;
  }
  if (cfg.pin) doc["pin"] = {{"node", cfg.pin->node}, {"epsilon", cfg.pin->epsilon}};
  if (cfg.certificate) {
    json cert = {{"P", vector_json(cfg.certificate->p)},
                 {"Delta", vector_json(cfg.certificate->delta)},
                 {"eta", cfg.certificate->eta}};
    if (cfg.certificate->box) cert["box"] = *cfg.certificate->box;
    doc["certificate"] = cert;
  }
  doc["initial_states"] = matrix_json(cfg.initial_states);
  doc["reference_initial"] = vector_json(cfg.reference_initial);
  json integ = {{"dt", cfg.integration.dt}, {"t_max", cfg.integration.t_max}};
  if (cfg.integration.stride) integ["stride"] = *cfg.integration.stride;
  doc["integration"] = integ;
  json out = json::object();
  if (cfg.outputs.dir) out["dir"] = *cfg.outputs.dir;
  if (cfg.outputs.trajectory) out["trajectory"] = *cfg.outputs.trajectory;
  if (cfg.outputs.metrics) out["metrics"] = *cfg.outputs.metrics;
  if (cfg.outputs.summary) out["summary"] = *cfg.outputs.summary;
  if (!out.empty()) doc["outputs"] = out;
  json an = json::object();
  if (cfg.analysis.decay_window) {
    an["decay_window"] = {cfg.analysis.decay_window->first, cfg.analysis.decay_window->second};
  }
  if (cfg.analysis.tol_rate) an["tol_rate"] = *cfg.analysis.tol_rate;
  if (!an.empty()) doc["analysis"] = an;
  return doc.dump(2);
}

void validate_scenario(const ScenarioConfig& cfg) {
  const auto a = CouplingMatrix::validate(cfg.coupling);
  const auto m = static_cast<Eigen::Index>(a.size());
  if (!DynamicsRegistry::instance().contains(cfg.dynamics.kind)) {
    throw ValidationError("field 'dynamics.kind': unknown dynamics kind '" + cfg.dynamics.kind +
                          "'");
  }
  const auto dyn = build_dynamics(cfg);
  const auto n = static_cast<Eigen::Index>(dyn.dim);
  if (cfg.initial_states.rows() != m || cfg.initial_states.cols() != n) {
    throw ValidationError(fmt::format(
        "field 'initial_states': dimension mismatch: got {}x{}, expected {} nodes of dimension {}",
        cfg.initial_states.rows(), cfg.initial_states.cols(), m, n));
  }
  if (cfg.reference_initial.size() != n) {
    throw ValidationError(fmt::format(
        "field 'reference_initial': dimension mismatch: got {}, expected {}",
        cfg.reference_initial.size(), n));
  }
  if (!(cfg.coupling_strength >= 0.0)) {
    throw ValidationError("field 'coupling_strength': must be nonnegative");
  }
  if (cfg.pin) {
    if (cfg.pin->node < 1 || cfg.pin->node > static_cast<std::size_t>(m)) {
      throw ValidationError(fmt::format("field 'pin.node': {} is outside 1..{}", cfg.pin->node, m));
    }
    if (!(cfg.pin->epsilon > 0.0)) throw ValidationError("field 'pin.epsilon': must be positive");
    if (!(cfg.coupling_strength > 0.0)) {
      throw ValidationError("field 'coupling_strength': must be positive when a pin is set");
    }
  }
  if (cfg.coupling_function.kind != "identity" && cfg.coupling_function.kind != "sine") {
    throw ValidationError("field 'coupling_function.kind': unknown coupling function '" +
                          cfg.coupling_function.kind + "'");
  }
  build_coupling_function(cfg);
  if (cfg.certificate) {
    if (cfg.certificate->p.size() != n || cfg.certificate->delta.size() != n) {
      throw ValidationError(fmt::format(
          "field 'certificate': dimension mismatch: P and Delta must have length {}", n));
    }
    try {
      build_certificate(cfg)->validate();
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("field 'certificate': ") + e.what());
    }
    if (cfg.certificate->box && !(*cfg.certificate->box > 0.0)) {
      throw ValidationError("field 'certificate.box': must be positive");
    }
  }
  if (!(cfg.integration.dt > 0.0)) throw ValidationError("field 'integration.dt': must be positive");
  if (!(cfg.integration.t_max >= cfg.integration.dt)) {
    throw ValidationError("field 'integration.t_max': must be at least dt");
  }
}

Dynamics build_dynamics(const ScenarioConfig& cfg) {
  return DynamicsRegistry::instance().make(cfg.dynamics.kind, cfg.dynamics.params);
}

CouplingFunction build_coupling_function(const ScenarioConfig& cfg) {
  if (cfg.coupling_function.kind == "identity") {
    if (cfg.coupling_function.amplitude) {
      throw ValidationError("field 'coupling_function.amplitude': not used by identity");
    }
    return CouplingFunction::identity();
  }
  if (cfg.coupling_function.kind == "sine") {
    return CouplingFunction::sine(cfg.coupling_function.amplitude.value_or(0.5));
  }
  throw ValidationError("field 'coupling_function.kind': unknown coupling function '" +
                        cfg.coupling_function.kind + "'");
}

std::optional<PinPlan> build_pin(const ScenarioConfig& cfg) {
  if (!cfg.pin) return std::nullopt;
  return PinPlan{cfg.pin->node - 1, cfg.pin->epsilon, cfg.coupling_strength};
}

std::optional<QuadCertificate> build_certificate(const ScenarioConfig& cfg) {
  if (!cfg.certificate) return std::nullopt;
  return QuadCertificate{cfg.certificate->p, cfg.certificate->delta, cfg.certificate->eta};
}

NetworkSystem build_system(const ScenarioConfig& cfg) {
  validate_scenario(cfg);
  return NetworkSystem(CouplingMatrix::validate(cfg.coupling), cfg.coupling_strength,
                       build_pin(cfg), build_dynamics(cfg), build_coupling_function(cfg));
}

ConditionReport check_scenario(const ScenarioConfig& cfg, const CheckOptions& options) {
  const auto sys = build_system(cfg);
  const auto& a = sys.coupling();
  const auto cert = build_certificate(cfg);
  const double c = sys.coupling_strength();
  const double alpha = sys.coupling_function().alpha_lower();

  ConditionReport rep;
  rep.symmetric = a.symmetric();
  rep.irreducible = scc_condensation(a.entries()).irreducible();
  rep.pinned = sys.pin().has_value();

  if (cert && !sys.dynamics().jacobian_hull.empty()) {
    rep.quad_eta_norm = quad_margin(sys.dynamics().jacobian_hull, cert->p, cert->delta,
                                    QuadBound::spectral_norm);
    rep.quad_eta_tight =
        quad_margin(sys.dynamics().jacobian_hull, cert->p, cert->delta, QuadBound::tight);
    if (cert->eta > *rep.quad_eta_tight) {
      rep.notes.push_back(fmt::format(
          "certificate eta = {:.6g} exceeds the largest provable margin {:.6g}", cert->eta,
          *rep.quad_eta_tight));
    }
  }
  if (cert && options.quad_samples > 0) {
    const double half = cfg.certificate->box.value_or(30.0);
    rep.quad_sampled = quad_check_sampled(sys.dynamics(), *cert,
                                          StateBox::cube(sys.dim(), half),
                                          options.quad_samples, options.seed);
  }

  if (!rep.pinned) {
    rep.notes.push_back("no controller: coupling alone cannot stabilize s(t)");
    if (rep.symmetric) {
      rep.proposition1 = proposition1_holds(a.entries());
      rep.governing = rep.proposition1->verdict;
      rep.governing_name = "proposition 1";
      if (!sys.dynamics().region_jacobians.empty()) {
        rep.theorem1 = theorem1_margin(sys, rep.proposition1->report.lambda1);
      }
    } else {
      rep.governing = Verdict::from_margin(1.0, 1.0, 0, "no controller");
      rep.governing_name = "pinning";
    }
    return rep;
  }

  const PinPlan pin = *sys.pin();
  if (rep.symmetric) {
    rep.proposition1 = proposition1_holds(pinned_matrix(a, pin));
    const double lambda1 = rep.proposition1->report.lambda1;
    rep.governing = rep.proposition1->verdict;
    rep.governing_name = "proposition 1";
    if (!sys.dynamics().region_jacobians.empty()) rep.theorem1 = theorem1_margin(sys, lambda1);
    if (cert) {
      if (sys.coupling_function().is_identity()) {
        rep.theorem2 = theorem2_check(*cert, c, lambda1);
        rep.governing = rep.theorem2;
        rep.governing_name = "theorem 2";
      } else {
        rep.theorem3 = theorem3_check(*cert, c, lambda1, alpha);
        rep.governing = rep.theorem3;
        rep.governing_name = "theorem 3";
      }
      rep.min_strength = min_coupling_strength(*cert, lambda1, alpha, 1.0);
    }
  } else if (rep.irreducible) {
    const Vector xi = left_null_vector(a.entries(), true);
    rep.lyapunov_weights = xi;
    if (cert) {
      rep.theorem4 = theorem4_check(a, pin, *cert);
      rep.governing = rep.theorem4->verdict;
      rep.governing_name = "theorem 4";
      rep.min_strength = min_coupling_strength(*cert, rep.theorem4->report.lambda1, 1.0,
                                               rep.theorem4->report.xi_max);
    } else {
      SpectralVerdict sv;
      const auto eig = sym_eigen(symmetrize_weighted(pinned_matrix(a, pin), xi));
      sv.report.lambda = eig.eigenvalues;
      sv.report.xi = xi;
      sv.report.lambda1 = eig.eigenvalues(0);
      sv.report.xi_max = xi.maxCoeff();
      sv.verdict = Verdict::from_margin(sv.report.lambda1, 1.0 + inf_norm(a.entries()), 0,
                                        fmt::format("mu1 = {:.6g}", sv.report.lambda1));
      rep.theorem4 = sv;
      rep.governing = sv.verdict;
      rep.governing_name = "weighted spectrum";
    }
    if (!sys.coupling_function().is_identity()) {
      rep.notes.push_back("asymmetric coupling through a nonlinear g is outside the stated "
                          "conditions; theorem 4 is evaluated for linear coupling");
    }
  } else {
    rep.reducible = reducible_pinnability(a, pin.node);
    rep.governing = rep.reducible->verdict;
    rep.governing_name = "reducible criterion";
  }
  return rep;
}

std::string render_report(const ScenarioConfig& cfg, const ConditionReport& rep) {
  std::string out;
  auto line = [&out](const std::string& s) { out += s + "\n"; };
  line(fmt::format("scenario: {}", cfg.name));
  line(fmt::format("coupling: {} nodes, {}, {}, c = {:.6g}", cfg.coupling.rows(),
                   rep.symmetric ? "symmetric" : "asymmetric",
                   rep.irreducible ? "irreducible" : "reducible", cfg.coupling_strength));
  if (cfg.pin) {
    line(fmt::format("controller: node {}, epsilon = {:.6g}", cfg.pin->node, cfg.pin->epsilon));
  } else {
    line("controller: none");
  }
  if (rep.quad_eta_norm) {
    line(fmt::format("QUAD margin: eta = {:.6g} (norm bound), {:.6g} (tight); certificate eta = {:.6g}",
                     *rep.quad_eta_norm, *rep.quad_eta_tight, cfg.certificate->eta));
  }
  if (rep.quad_sampled) {
    line(fmt::format("QUAD sampled: {} ({})", yes_no(rep.quad_sampled->verdict.holds),
                     rep.quad_sampled->verdict.detail));
  }
  if (rep.proposition1) {
    const auto& r = rep.proposition1->report;
    line(fmt::format("spectrum: {}", fmt_vec(r.lambda)));
    line(fmt::format("lambda1 = {:.6g}, c*lambda1 = {:.6g}", r.lambda1,
                     cfg.coupling_strength * r.lambda1));
    line(fmt::format("proposition 1: {} (margin {:.6g})", yes_no(rep.proposition1->verdict.holds),
                     rep.proposition1->verdict.margin));
  }
  if (rep.theorem1) {
    line(fmt::format("theorem 1 (local): {} ({})", yes_no(rep.theorem1->holds),
                     rep.theorem1->detail));
  }
  if (rep.theorem2) {
    line(fmt::format("theorem 2: {} (margin {:.6g})", yes_no(rep.theorem2->holds),
                     rep.theorem2->margin));
  }
  if (rep.theorem3) {
    line(fmt::format("theorem 3: {} (margin {:.6g}, alpha = {:.6g})", yes_no(rep.theorem3->holds),
                     rep.theorem3->margin, build_coupling_function(cfg).alpha_lower()));
  }
  if (rep.theorem4) {
    const auto& r = rep.theorem4->report;
    if (r.xi) line(fmt::format("xi = {}", fmt_vec(*r.xi)));
    line(fmt::format("weighted spectrum: {}", fmt_vec(r.lambda)));
    line(fmt::format("mu1 = {:.6g}, max xi = {:.6g}", r.lambda1, r.xi_max));
    line(fmt::format("{}: {} (margin {:.6g})", rep.governing_name,
                     yes_no(rep.theorem4->verdict.holds), rep.theorem4->verdict.margin));
  }
  if (rep.reducible) {
    for (const auto& s : rep.reducible->block_status) line(s);
    line(fmt::format("reducible criterion: {} ({})", yes_no(rep.reducible->verdict.holds),
                     rep.reducible->verdict.detail));
  }
  if (rep.min_strength) {
    if (rep.min_strength->c_star) {
      line(fmt::format("minimal coupling strength c* = {:.6g}", *rep.min_strength->c_star));
      if (rep.governing && !rep.governing->holds) {
        line(fmt::format("suggestion: raise c above {:.6g}", *rep.min_strength->c_star));
      }
    } else {
      line("minimal coupling strength: none (" + rep.min_strength->detail + ")");
    }
  }
  for (const auto& note : rep.notes) line("note: " + note);
  line(fmt::format("verdict: {} {}", rep.governing_name,
                   rep.conditions_hold() ? "satisfied" : "not satisfied"));
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const auto n = traj.empty() ? 0 : traj.states.front().cols();
  out << "t,node";
  for (Eigen::Index k = 0; k < n; ++k) out << ",x" << (k + 1);
  out << '\n';
  for (std::size_t s = 0; s < traj.size(); ++s) {
    const auto& x = traj.states[s];
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      out << fmt::format("{:.17g},{}", traj.times[s], i + 1);
      for (Eigen::Index k = 0; k < n; ++k) out << fmt::format(",{:.17g}", x(i, k));
      out << '\n';
    }
  }
}

void write_metrics_csv(std::ostream& out, const MetricSeries& series) {
  out << "t,sync_ratio,pin_ratio,lyapunov\n";
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    out << fmt::format("{:.17g},", series.times[k]);
    out << (series.sync_ratio ? fmt::format("{:.17g}", (*series.sync_ratio)[k]) : "nan") << ',';
    out << (series.pin_ratio ? fmt::format("{:.17g}", (*series.pin_ratio)[k]) : "nan") << ',';
    out << fmt::format("{:.17g}\n", series.lyapunov[k]);
  }
}

RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& options) {
  RunResult res;
  res.conditions = check_scenario(cfg);
  const auto sys = build_system(cfg);
  const auto cert = build_certificate(cfg);

  IntegrateOptions io;
  io.dt = cfg.integration.dt;
  io.t_max = cfg.integration.t_max;
  io.stride = cfg.stride();
  try {
    res.trajectory = integrate(sys, cfg.initial_states, cfg.reference_initial, io);
  } catch (const DivergenceError& e) {
    res.diverged = true;
    res.divergence = e.what();
    res.trajectory = e.partial();
  }

  const Vector p = cert ? cert->p : Vector::Ones(static_cast<Eigen::Index>(sys.dim()));
  res.metrics = metrics(res.trajectory, res.conditions.lyapunov_weights, p);
  if (cert) {
    res.lyapunov = lyapunov_monitor(res.trajectory, *cert, res.conditions.lyapunov_weights,
                                    cfg.tol_rate());
  }
  if (res.metrics.sync_ratio) res.final_sync_ratio = res.metrics.sync_ratio->back();
  if (res.metrics.pin_ratio) res.final_pin_ratio = res.metrics.pin_ratio->back();

  std::vector<std::string> notes;
  if (res.metrics.pin_ratio && res.conditions.pinned && !res.diverged) {
    const auto [ta, tb] = cfg.decay_window();
    try {
      res.decay_rate = decay_rate_fit(res.metrics, ta, tb);
    } catch (const DomainError& e) {
      notes.push_back(std::string("decay rate not fitted: ") + e.what());
    }
  }
  if (options.step_check && !res.diverged) {
    const double horizon = std::min(cfg.integration.t_max, 10.0);
    if (horizon >= cfg.integration.dt) {
      res.step_halving = step_halving_difference(sys, cfg.initial_states, cfg.reference_initial,
                                                 cfg.integration.dt, horizon);
    }
  }

  std::string summary = render_report(cfg, res.conditions);
  auto line = [&summary](const std::string& s) { summary += s + "\n"; };
  line("--- simulation ---");
  line(fmt::format("integrated to t = {:.6g} with dt = {:.6g} ({} samples)",
                   res.trajectory.times.empty() ? 0.0 : res.trajectory.times.back(),
                   cfg.integration.dt, res.trajectory.size()));
  if (res.diverged) line("DIVERGED: " + res.divergence + " (outputs are partial)");
  line(res.final_sync_ratio ? fmt::format("final sync_ratio = {:.6g}", *res.final_sync_ratio)
                            : "final sync_ratio = undefined (zero initial dispersion)");
  line(res.final_pin_ratio ? fmt::format("final pin_ratio = {:.6g}", *res.final_pin_ratio)
                           : "final pin_ratio = undefined (all nodes start at s(0))");
  if (res.decay_rate) {
    const auto [ta, tb] = cfg.decay_window();
    line(fmt::format("fitted decay rate of pin_ratio on [{:.6g}, {:.6g}] = {:.6g}", ta, tb,
                     *res.decay_rate));
  }
  if (res.lyapunov) {
    line(fmt::format("lyapunov monitor: {} violations in {} intervals (required rate {:.6g})",
                     res.lyapunov->violations, res.lyapunov->checked, res.lyapunov->rate));
    if (res.lyapunov->first) {
      line(fmt::format("  first violation at t = {:.6g}: V {:.6g} -> {:.6g} (bound {:.6g})",
                       res.lyapunov->first->time, res.lyapunov->first->v_before,
                       res.lyapunov->first->v_after, res.lyapunov->first->bound));
    }
  }
  if (res.step_halving) {
    line(fmt::format("step-halving check: relative endpoint difference {:.3g} ({})",
                     *res.step_halving, *res.step_halving < 1e-6 ? "ok" : "above 1e-6"));
  }
  for (const auto& note : notes) line("note: " + note);

  const bool synced = res.final_sync_ratio && *res.final_sync_ratio < 1e-2;
  const bool pinned = res.final_pin_ratio && *res.final_pin_ratio < 1e-2;
  std::string outcome;
  if (res.diverged) {
    outcome = "diverged";
  } else if (pinned) {
    outcome = "pinned to s(t)";
  } else if (synced) {
    outcome = "synchronized but not pinned";
  } else {
    outcome = "not synchronized";
  }
  if (res.conditions.governing) {
    line(fmt::format("outcome: {}; {} {}", outcome, res.conditions.governing_name,
                     res.conditions.conditions_hold() ? "satisfied" : "not satisfied"));
  } else {
    line("outcome: " + outcome);
  }
  res.summary = summary;

  if (options.write_files) {
    const auto dir = cfg.output_dir();
    std::filesystem::create_directories(dir);
    const auto write = [&](const std::string& file, auto&& body) {
      const auto path = dir / file;
      std::ofstream out(path);
      if (!out) throw Error("cannot write " + path.string());
      body(out);
      res.files.push_back(path);
    };
    write(cfg.trajectory_file(), [&](std::ostream& o) { write_trajectory_csv(o, res.trajectory); });
    write(cfg.metrics_file(), [&](std::ostream& o) { write_metrics_csv(o, res.metrics); });
    write(cfg.summary_file(), [&](std::ostream& o) { o << res.summary; });
  }
  return res;
}

std::vector<SweepPoint> sweep_coupling_strength(const ScenarioConfig& cfg,
                                                const std::vector<double>& values, bool simulate) {
  std::vector<std::future<SweepPoint>> jobs;
  jobs.reserve(values.size());
  for (const double c : values) {
    jobs.push_back(std::async(std::launch::async, [cfg, c, simulate] {
      ScenarioConfig local = cfg;
      local.coupling_strength = c;
      SweepPoint point;
      point.c = c;
      const auto rep = check_scenario(local);
      point.verdict = rep.governing;
      if (simulate) {
        RunOptions ro;
        ro.write_files = false;
        ro.step_check = false;
        const auto res = run_scenario(local, ro);
        point.final_pin_ratio = res.final_pin_ratio;
        point.diverged = res.diverged;
      }
      return point;
    }));
  }
  std::vector<SweepPoint> out;
  out.reserve(values.size());
  for (auto& job : jobs) out.push_back(job.get());
  return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << "c,margin,holds,final_pin_ratio,diverged\n";
  for (const auto& p : points) {
    out << fmt::format("{:.17g},", p.c);
    out << (p.verdict ? fmt::format("{:.17g}", p.verdict->margin) : "nan") << ',';
    out << (p.verdict && p.verdict->holds ? 1 : 0) << ',';
    out << (p.final_pin_ratio ? fmt::format("{:.17g}", *p.final_pin_ratio) : "nan") << ',';
    out << (p.diverged ? 1 : 0) << '\n';
  }
}

}  // namespace pinning
