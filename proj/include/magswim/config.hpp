#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "magswim/dynamics.hpp"

namespace magswim {

/// Schema violation; key() is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat "section.key = value" text. '#' starts a comment, blank lines are
/// ignored, a repeated key is an error.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void erase(const std::string& key) { values_.erase(key); }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  // Getters mark the key as consumed.
  std::optional<std::string> raw(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key) const;
  Vec3 get_vec3(const std::string& key, const Vec3& fallback) const;

  /// Throws ConfigError for the first key no getter asked for.
  void reject_unused() const;
  /// Marks every key under `prefix` as consumed.
  void consume_prefix(const std::string& prefix) const;

  /// Sorted "key = value" lines; stable input for hashing.
  std::string canonical() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

/// Stock planform, loading and field program of each design.
struct DesignDefaults {
  double l_over_w;
  double l0_over_l;
  double mn;
  double fn;
  FieldProgram field;
};

DesignDefaults design_defaults(DesignKind kind);

/// Non-dimensional anchors held fixed when (Mn, Fn) are converted: E, h, M and
/// f from the config, Lbar and L0 from the planform.
NondimAnchors anchors_for(const SwimmerDesign& design, const MaterialParams& material, double frequency);

/// Builds and validates a simulation config. Reads design.*, material.*,
/// field.*, fluid.*, sim.*, tilt.* and probes.*; other sections are left for
/// the caller.
SimConfig sim_config_from(const KeyValueConfig& cfg);

/// Defaults for `kind` at the given (Mn, Fn), mesh resolution `ds` (<= 0 picks
/// the default) and dt = T / steps_per_cycle.
SimConfig default_sim_config(DesignKind kind, double mn, double fn, double ds = 0.0, int steps_per_cycle = 2000);

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace magswim
