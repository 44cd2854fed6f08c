#include "magswim/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace magswim {

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0;
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) throw ConfigError(key, "expected a number, got '" + text + "'");
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "empty key");
    if (cfg.values_.count(key)) throw ConfigError(key, "repeated on line " + std::to_string(lineno));
    cfg.values_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<std::string> KeyValueConfig::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return raw(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return get_optional_double(key).value_or(fallback);
}

std::optional<double> KeyValueConfig::get_optional_double(const std::string& key) const {
  const auto v = raw(key);
  if (!v) return std::nullopt;
  return parse_double(key, *v);
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  int out = 0;
  const char* end = v->data() + v->size();
  auto [p, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError(key, "expected an integer, got '" + *v + "'");
  return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + *v + "'");
}

std::vector<double> KeyValueConfig::get_list(const std::string& key) const {
  std::vector<double> out;
  const auto v = raw(key);
  if (!v) return out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

Vec3 KeyValueConfig::get_vec3(const std::string& key, const Vec3& fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  if (*v == "x" || *v == "+x") return Vec3::UnitX();
  if (*v == "-x") return -Vec3::UnitX();
  if (*v == "y" || *v == "+y") return Vec3::UnitY();
  if (*v == "-y") return -Vec3::UnitY();
  if (*v == "z" || *v == "+z") return Vec3::UnitZ();
  if (*v == "-z") return -Vec3::UnitZ();
  const auto xs = get_list(key);
  if (xs.size() != 3) throw ConfigError(key, "expected x, y, z or three comma-separated numbers");
  return Vec3(xs[0], xs[1], xs[2]);
}

void KeyValueConfig::reject_unused() const {
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) throw ConfigError(k, "unknown key");
}

void KeyValueConfig::consume_prefix(const std::string& prefix) const {
  for (const auto& [k, v] : values_)
    if (k.rfind(prefix, 0) == 0) used_.insert(k);
}

std::string KeyValueConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------

DesignDefaults design_defaults(DesignKind kind) {
  FieldProgram rotating;
  rotating.kind = FieldKind::RotatingAboutX;
  FieldProgram oscillating;
  oscillating.kind = FieldKind::OscillatingDirectional;
  oscillating.direction = Vec3::UnitX();
  switch (kind) {
    case DesignKind::FingerShaped: return {1.0, 1.0, 191.0, 5.0, rotating};
    case DesignKind::FieldInduced: return {5.77, 0.33, 398.0, 5.0, rotating};
    case DesignKind::DragInduced: return {5.77, 0.33, 53.0, 15.0, rotating};
    case DesignKind::CarangiformLike:
      oscillating.half_angle_deg = 45.0;
      return {1.0, 0.55, 500.0, 5.0, oscillating};
    case DesignKind::AnguilliformLike:
      oscillating.half_angle_deg = 90.0;
      return {8.0, 1.0, 255.0, 5.0, oscillating};
  }
  throw ModelError("unknown design kind");
}

NondimAnchors anchors_for(const SwimmerDesign& d, const MaterialParams& m, double frequency) {
  return NondimAnchors{m.youngs_modulus, d.thickness, characteristic_length(d), d.magnetic_length(), d.magnetization,
                       frequency};
}

SimConfig sim_config_from(const KeyValueConfig& cfg) {
  SimConfig c;
  DesignKind kind;
  try {
    kind = design_kind_from_string(cfg.get_string("design.kind", "carangiform"));
  } catch (const ModelError& e) {
    throw ConfigError("design.kind", e.what());
  }
  const DesignDefaults dd = design_defaults(kind);

  auto& d = c.design;
  d.kind = kind;
  d.length = cfg.get_double("design.length", 5e-3);
  const double l_over_w = cfg.get_double("design.L_over_W", dd.l_over_w);
  if (!(l_over_w > 0)) throw ConfigError("design.L_over_W", "must be positive");
  d.width = d.length / l_over_w;
  d.magnetic_fraction = cfg.get_double("design.L0_over_L", dd.l0_over_l);
  d.thickness = cfg.get_double("design.thickness", 1e-4);
  d.magnetization = cfg.get_double("design.magnetization", 1e4);
  if (!(d.length > 0)) throw ConfigError("design.length", "must be positive");
  if (!(d.magnetic_fraction >= 0 && d.magnetic_fraction <= 1)) throw ConfigError("design.L0_over_L", "must lie in [0, 1]");
  const double ds = cfg.get_double("design.ds", 0.0);
  d.mesh_resolution = ds > 0 ? ds : default_mesh_resolution(d.length, d.width);
  try {
    validate(d);
  } catch (const ModelError& e) {
    throw ConfigError("design", e.what());
  }

  c.material.youngs_modulus = cfg.get_double("material.E", 1e5);
  c.material.thickness = d.thickness;
  c.material.bending_prefactor = cfg.get_double("material.bending_prefactor", kCalibratedBendingPrefactor);
  c.material.stretch_prefactor = cfg.get_double("material.stretch_prefactor", 1.0);
  if (!(c.material.youngs_modulus > 0)) throw ConfigError("material.E", "must be positive");

  FieldProgram f = dd.field;
  try {
    if (auto k = cfg.raw("field.kind")) f.kind = field_kind_from_string(*k);
  } catch (const ModelError& e) {
    throw ConfigError("field.kind", e.what());
  }
  f.frequency = cfg.get_double("field.frequency", 5.0);
  if (!(f.frequency > 0)) throw ConfigError("field.frequency", "must be positive");
  f.sense = cfg.get_int("field.sense", 1);
  if (f.sense != 1 && f.sense != -1) throw ConfigError("field.sense", "must be 1 or -1");
  f.half_angle_deg = cfg.get_double("field.half_angle_deg", f.half_angle_deg);
  f.direction = cfg.get_vec3("field.direction", f.direction);
  if (!(f.direction.norm() > 0)) throw ConfigError("field.direction", "must be non-zero");
  f.direction.normalize();
  f.sweep_axis = cfg.get_vec3("field.sweep_axis", f.sweep_axis);

  const NondimAnchors anchors = anchors_for(d, c.material, f.frequency);
  const auto mn = cfg.get_optional_double("field.Mn");
  const auto b = cfg.get_optional_double("field.B");
  if (mn && b) throw ConfigError("field.B", "give either field.Mn or field.B, not both");
  if (b) {
    if (*b < 0) throw ConfigError("field.B", "must be non-negative");
    f.amplitude = *b;
  } else {
    const double v = mn.value_or(dd.mn);
    if (v < 0) throw ConfigError("field.Mn", "must be non-negative");
    if (v > 0 && !(d.magnetic_length() > 0)) throw ConfigError("field.Mn", "needs a magnetized length (design.L0_over_L > 0)");
    f.amplitude = v > 0 ? nondim_to_physical(v, 0.0, anchors).field : 0.0;
  }
  c.field = FieldSchedule::single(f);

  const auto fn = cfg.get_optional_double("fluid.Fn");
  const auto mu = cfg.get_optional_double("fluid.viscosity");
  if (fn && mu) throw ConfigError("fluid.viscosity", "give either fluid.Fn or fluid.viscosity, not both");
  if (mu) {
    c.fluid.viscosity = *mu;
    if (!(*mu > 0)) throw ConfigError("fluid.viscosity", "must be positive");
  } else {
    const double v = fn.value_or(dd.fn);
    if (!(v > 0)) throw ConfigError("fluid.Fn", "must be positive");
    c.fluid.viscosity = nondim_to_physical(0.0, v, anchors).viscosity;
  }
  c.fluid.regularization = cfg.get_double("fluid.regularization", 0.0);
  if (c.fluid.regularization < 0) throw ConfigError("fluid.regularization", "must be non-negative (0 selects the default)");

  const double period = 1.0 / f.frequency;
  c.dt = cfg.get_double("sim.dt", period / 2000.0);
  if (!(c.dt > 0)) throw ConfigError("sim.dt", "must be positive");
  if (c.dt > period / 500.0 * (1 + 1e-9))
    throw ConfigError("sim.dt", "must not exceed T/500 = " + std::to_string(period / 500.0) + " s");
  c.n_cycles_max = cfg.get_int("sim.n_cycles_max", 50);
  if (c.n_cycles_max < 2) throw ConfigError("sim.n_cycles_max", "must be at least 2");
  c.stop_at_steady = cfg.get_bool("sim.stop_at_steady", true);
  c.steady_tolerance = cfg.get_double("sim.steady_tolerance", 0.01);
  if (!(c.steady_tolerance > 0)) throw ConfigError("sim.steady_tolerance", "must be positive");
  c.samples_per_cycle = cfg.get_int("sim.samples_per_cycle", 20);
  if (c.samples_per_cycle < 1) throw ConfigError("sim.samples_per_cycle", "must be at least 1");
  c.contact_checks_per_cycle = cfg.get_int("sim.contact_checks_per_cycle", 10);
  if (c.contact_checks_per_cycle < 1) throw ConfigError("sim.contact_checks_per_cycle", "must be at least 1");
  c.flow_samples_per_cycle = cfg.get_int("sim.flow_samples_per_cycle", 0);
  if (c.flow_samples_per_cycle < 0) throw ConfigError("sim.flow_samples_per_cycle", "must be non-negative");

  c.tilt.roll = cfg.get_double("tilt.roll", 0.0);
  c.tilt.pitch = cfg.get_double("tilt.pitch", 0.0);
  c.tilt.yaw = cfg.get_double("tilt.yaw", 0.0);

  c.probes.box_factor = cfg.get_double("probes.box_factor", c.probes.box_factor);
  c.probes.resolution = cfg.get_int("probes.resolution", c.probes.resolution);
  c.probes.exclusion_factor = cfg.get_double("probes.exclusion_factor", c.probes.exclusion_factor);
  if (!(c.probes.box_factor > 0)) throw ConfigError("probes.box_factor", "must be positive");
  if (c.probes.resolution < 2) throw ConfigError("probes.resolution", "must be at least 2");
  if (c.probes.exclusion_factor < 0) throw ConfigError("probes.exclusion_factor", "must be non-negative");

  try {
    validate(c);
  } catch (const ModelError& e) {
    throw ConfigError("config", e.what());
  }
  return c;
}

SimConfig default_sim_config(DesignKind kind, double mn, double fn, double ds, int steps_per_cycle) {
  KeyValueConfig cfg;
  cfg.set("design.kind", std::string(to_string(kind)));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", mn);
  cfg.set("field.Mn", buf);
  std::snprintf(buf, sizeof buf, "%.17g", fn);
  cfg.set("fluid.Fn", buf);
  if (ds > 0) {
    std::snprintf(buf, sizeof buf, "%.17g", ds);
    cfg.set("design.ds", buf);
  }
  std::snprintf(buf, sizeof buf, "%.17g", 0.2 / steps_per_cycle);
  cfg.set("sim.dt", buf);
  return sim_config_from(cfg);
}

}  // namespace magswim
