#include "sphero/config.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "sphero/errors.h"

#ifndef SPHERO_CONFIG_DIR
#define SPHERO_CONFIG_DIR "configs"
#endif

namespace sphero {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Typed access with the dotted key path in every error.
class Reader {
 public:
  Reader(const json& j, std::string path, std::set<std::string> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ValidationError(path_, "expected an object");
    for (const auto& item : j.items()) {
      if (!allowed.count(item.key())) {
        throw ValidationError(join(path_, item.key()), "unknown key");
      }
    }
  }

  bool has(const std::string& k) const { return j_.contains(k); }
  const json& raw(const std::string& k) const { return j_.at(k); }
  std::string path(const std::string& k) const { return join(path_, k); }

  void num(const std::string& k, double* out) const {
    if (!has(k)) return;
    *out = number(j_.at(k), path(k));
  }
  void integer(const std::string& k, int* out) const {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_number_integer()) throw ValidationError(path(k), "expected an integer");
    *out = v.get<int>();
  }
  void boolean(const std::string& k, bool* out) const {
    if (!has(k)) return;
    if (!j_.at(k).is_boolean()) throw ValidationError(path(k), "expected true or false");
    *out = j_.at(k).get<bool>();
  }
  void text(const std::string& k, std::string* out) const {
    if (!has(k)) return;
    if (!j_.at(k).is_string()) throw ValidationError(path(k), "expected a string");
    *out = j_.at(k).get<std::string>();
  }

  static double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ValidationError(where, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(where, "must be finite");
    return d;
  }

  std::vector<double> vec(const std::string& k, std::size_t n) const {
    const json& v = j_.at(k);
    if (!v.is_array() || (n && v.size() != n)) {
      throw ValidationError(
          path(k), n ? "expected " + std::to_string(n) + " numbers"
                     : "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(number(v[i], path(k) + "[" + std::to_string(i) + "]"));
    }
    return out;
  }
  void vec3(const std::string& k, Vec3* out) const {
    if (!has(k)) return;
    const auto v = vec(k, 3);
    *out = Vec3(v[0], v[1], v[2]);
  }
  /// Either three diagonal entries or a 3x3 nested array.
  void mat3(const std::string& k, Mat3* out) const {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (v.is_array() && v.size() == 3 && v[0].is_array()) {
      for (int r = 0; r < 3; ++r) {
        if (!v[r].is_array() || v[r].size() != 3) {
          throw ValidationError(path(k), "expected a 3x3 array");
        }
        for (int c = 0; c < 3; ++c) {
          (*out)(r, c) = number(v[r][c], path(k));
        }
      }
      return;
    }
    const auto d = vec(k, 3);
    *out = Vec3(d[0], d[1], d[2]).asDiagonal();
  }

 private:
  const json& j_;
  std::string path_;
};

ActuatorClass actuator_class(const std::string& name, const std::string& where) {
  for (ActuatorClass k :
       {ActuatorClass::kBarycentricCart, ActuatorClass::kBalancedGyroscopic,
        ActuatorClass::kReactionWheelPair}) {
    if (name == to_string(k)) return k;
  }
  throw ValidationError(where, "unknown actuator class '" + name + "'");
}

void read_robot(const Reader& top, RobotParams* p) {
  if (!top.has("robot")) return;
  const Reader r(top.raw("robot"), "robot",
                 {"r", "m_b", "I_b", "g", "actuators"});
  r.num("r", &p->radius);
  r.num("m_b", &p->shell_mass);
  r.mat3("I_b", &p->shell_inertia);
  r.num("g", &p->gravity);
  if (!r.has("actuators")) return;
  const json& arr = r.raw("actuators");
  if (!arr.is_array()) {
    throw ValidationError("robot.actuators", "expected an array");
  }
  p->actuators.clear();
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "robot.actuators[" + std::to_string(i) + "]";
    const Reader a(arr[i], where, {"class", "m", "I", "l", "axis"});
    ActuatorParams ap;
    std::string cls = to_string(ap.kind);
    a.text("class", &cls);
    ap.kind = actuator_class(cls, a.path("class"));
    a.num("m", &ap.mass);
    a.mat3("I", &ap.inertia);
    a.num("l", &ap.offset);
    a.vec3("axis", &ap.axis);
    p->actuators.push_back(ap);
  }
}

void read_reference(const Reader& top, const std::string& base_dir,
                    Scenario* s) {
  if (!top.has("reference")) return;
  ReferenceTrajectory& ref = s->config.reference;
  const Reader r(top.raw("reference"), "reference",
                 {"kind", "center", "radius", "period", "amplitude",
                  "wavelength", "speed", "file"});
  std::string kind = to_string(ref.kind);
  r.text("kind", &kind);
  ref.kind = reference_kind_from_string(kind);
  if (r.has("center")) {
    const auto c = r.vec("center", 2);
    ref.cx = c[0];
    ref.cy = c[1];
  }
  r.num("radius", &ref.radius);
  r.num("period", &ref.period);
  r.num("amplitude", &ref.amplitude);
  r.num("wavelength", &ref.wavelength);
  r.num("speed", &ref.speed);
  r.text("file", &s->path_file);
  if (ref.kind == ReferenceKind::kCustom) {
    if (s->path_file.empty()) {
      throw ValidationError("reference.file", "required for a custom path");
    }
    fs::path f(s->path_file);
    if (f.is_relative() && !base_dir.empty()) f = fs::path(base_dir) / f;
    ref.path = SampledPath::load_csv(f.string());
  }
}

void merge_into(json& base, const json& over) {
  for (const auto& item : over.items()) {
    if (item.value().is_object() && base.contains(item.key()) &&
        base[item.key()].is_object()) {
      merge_into(base[item.key()], item.value());
    } else {
      base[item.key()] = item.value();
    }
  }
}

json parse_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError(file.string(), "cannot open");
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ValidationError(file.string(), e.what());
  }
}

json load_with_includes(const fs::path& file, int depth) {
  if (depth > 16) throw ValidationError(file.string(), "include chain too deep");
  json doc = parse_file(file);
  if (!doc.is_object()) {
    throw ValidationError(file.string(), "top level must be an object");
  }
  if (!doc.contains("include")) return doc;
  json inc = doc["include"];
  doc.erase("include");
  if (inc.is_string()) inc = json::array({inc});
  if (!inc.is_array()) {
    throw ValidationError(file.string() + ": include",
                          "expected a file name or a list of them");
  }
  json merged = json::object();
  for (const json& name : inc) {
    if (!name.is_string()) {
      throw ValidationError(file.string() + ": include", "expected a string");
    }
    fs::path sub(name.get<std::string>());
    if (sub.is_relative()) sub = file.parent_path() / sub;
    merge_into(merged, load_with_includes(sub, depth + 1));
  }
  merge_into(merged, doc);
  return merged;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json mat_json(const Mat3& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) {
    rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
  }
  return rows;
}

}  // namespace

std::string resolve_config_path(const std::string& name) {
  std::vector<fs::path> candidates = {name, name + ".json",
                                      fs::path("configs") / (name + ".json"),
                                      fs::path(SPHERO_CONFIG_DIR) /
                                          (name + ".json")};
  for (const fs::path& c : candidates) {
    std::error_code ec;
    if (fs::is_regular_file(c, ec)) return c.string();
  }
  throw ValidationError("--config", "no scenario file found for '" + name + "'");
}

json load_merged_json(const std::string& path) {
  return load_with_includes(fs::path(path), 0);
}

Scenario scenario_from_json(const json& j, const std::string& base_dir) {
  Scenario s;
  ScenarioConfig& c = s.config;
  const Reader top(j, "",
                   {"name", "robot", "perturb", "seed", "incline_deg",
                    "nominal_incline_deg", "reference", "gains",
                    "disturbance", "initial", "h", "duration", "decimation",
                    "controller", "certification",
                    // Written by resolved_json for reference only.
                    "controller_params", "source"});
  top.text("name", &c.name);
  read_robot(top, &c.params);
  top.num("perturb", &c.perturb);
  if (top.has("seed")) {
    const json& v = top.raw("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ValidationError("seed", "expected a non-negative integer");
    }
    c.seed = v.get<std::uint64_t>();
  }
  double deg = c.incline / kDeg;
  top.num("incline_deg", &deg);
  c.incline = deg * kDeg;
  deg = c.nominal_incline / kDeg;
  top.num("nominal_incline_deg", &deg);
  c.nominal_incline = deg * kDeg;
  read_reference(top, base_dir, &s);
  if (top.has("gains")) {
    const Reader g(top.raw("gains"), "gains", {"kp", "kd", "kI"});
    g.num("kp", &c.gains.kp);
    g.num("kd", &c.gains.kd);
    g.num("kI", &c.gains.kI);
  }
  top.vec3("disturbance", &c.disturbance);
  if (top.has("initial")) {
    const Reader ic(top.raw("initial"), "initial",
                    {"o", "w", "actuator_w", "wheel_spin"});
    if (ic.has("o")) {
      const auto o = ic.vec("o", 2);
      c.initial.o = Vec3(o[0], o[1], 0.0);
    }
    ic.vec3("w", &c.initial.w);
    ic.vec3("actuator_w", &c.initial.actuator_w);
    if (ic.has("wheel_spin")) c.initial.wheel_spin = ic.vec("wheel_spin", 0);
  }
  top.num("h", &c.h);
  top.num("duration", &c.duration);
  top.integer("decimation", &c.decimation);
  top.boolean("controller", &c.controller_enabled);
  if (top.has("certification")) {
    const Reader k(top.raw("certification"), "certification",
                   {"k_s", "k_a", "samples", "target"});
    k.num("k_s", &s.cert.k_s);
    k.num("k_a", &s.cert.k_a);
    k.integer("samples", &s.cert.samples);
    k.num("target", &s.cert.target);
    if (!(s.cert.k_s > 0.0)) throw ValidationError("certification.k_s", "must be positive");
    if (s.cert.samples < 1) throw ValidationError("certification.samples", "must be at least 1");
  }
  // Validates the robot and every scenario field.
  c.params.e_g = incline_direction(c.incline);
  c.params.e_g0 = incline_direction(c.nominal_incline);
  validate(c);
  return s;
}

Scenario load_scenario(const std::string& name) {
  const std::string path = resolve_config_path(name);
  const json j = load_merged_json(path);
  if (j.contains("scenarios")) {
    throw ValidationError(path, "campaign file given where a scenario is expected");
  }
  Scenario s = scenario_from_json(j, fs::path(path).parent_path().string());
  s.source = path;
  return s;
}

std::vector<Scenario> load_campaign(const std::string& name) {
  const std::string path = resolve_config_path(name);
  const fs::path dir = fs::path(path).parent_path();
  const json j = load_merged_json(path);
  if (!j.contains("scenarios")) return {load_scenario(path)};
  const json& list = j.at("scenarios");
  if (!list.is_array() || list.empty()) {
    throw ValidationError("scenarios", "expected a non-empty list");
  }
  std::vector<Scenario> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& e = list[i];
    if (e.is_string()) {
      fs::path f(e.get<std::string>());
      if (f.is_relative()) f = dir / f;
      out.push_back(load_scenario(f.string()));
    } else {
      try {
        json doc = e;
        if (doc.contains("include")) {
          // Inline entries may include files relative to the campaign.
          json inc = doc["include"];
          doc.erase("include");
          if (inc.is_string()) inc = json::array({inc});
          json merged = json::object();
          for (const json& n : inc) {
            fs::path f(n.get<std::string>());
            if (f.is_relative()) f = dir / f;
            merge_into(merged, load_merged_json(f.string()));
          }
          merge_into(merged, doc);
          doc = merged;
        }
        out.push_back(scenario_from_json(doc, dir.string()));
        out.back().source = path;
      } catch (const ValidationError& err) {
        throw ValidationError("scenarios[" + std::to_string(i) + "]." + err.field(),
                              std::string(err.what()).substr(err.field().size() + 2));
      }
    }
  }
  return out;
}

json params_to_json(const RobotParams& p) {
  json acts = json::array();
  for (const ActuatorParams& a : p.actuators) {
    acts.push_back({{"class", to_string(a.kind)},
                    {"m", a.mass},
                    {"I", mat_json(a.inertia)},
                    {"l", a.offset},
                    {"axis", vec_json(a.axis)}});
  }
  return {{"r", p.radius},
          {"m_b", p.shell_mass},
          {"I_b", mat_json(p.shell_inertia)},
          {"g", p.gravity},
          {"actuators", acts}};
}

json resolved_json(const Scenario& s, const RobotParams& nominal) {
  const ScenarioConfig& c = s.config;
  const ReferenceTrajectory& r = c.reference;
  json ref = {{"kind", to_string(r.kind)},
              {"center", json::array({r.cx, r.cy})},
              {"radius", r.radius},
              {"period", r.period},
              {"amplitude", r.amplitude},
              {"wavelength", r.wavelength},
              {"speed", r.speed}};
  if (!s.path_file.empty()) ref["file"] = s.path_file;
  json out = {
      {"name", c.name},
      {"robot", params_to_json(c.params)},
      {"perturb", c.perturb},
      {"seed", c.seed},
      {"incline_deg", c.incline / kDeg},
      {"nominal_incline_deg", c.nominal_incline / kDeg},
      {"reference", ref},
      {"gains", {{"kp", c.gains.kp}, {"kd", c.gains.kd}, {"kI", c.gains.kI}}},
      {"disturbance", vec_json(c.disturbance)},
      {"initial",
       {{"o", json::array({c.initial.o.x(), c.initial.o.y()})},
        {"w", vec_json(c.initial.w)},
        {"actuator_w", vec_json(c.initial.actuator_w)},
        {"wheel_spin", c.initial.wheel_spin}}},
      {"h", c.h},
      {"duration", c.duration},
      {"decimation", c.decimation},
      {"controller", c.controller_enabled},
      {"certification",
       {{"k_s", s.cert.k_s},
        {"k_a", s.cert.k_a},
        {"samples", s.cert.samples},
        {"target", s.cert.target}}},
  };
  // Ignored when read back; the draws follow from perturb and seed.
  out["controller_params"] = params_to_json(nominal);
  if (!s.source.empty()) out["source"] = s.source;
  return out;
}

}  // namespace sphero
