#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace visret {

struct ConfigKey {
  const char* name;
  const char* default_value;
  const char* doc;
};

// Every tunable, with its documented default. Section-qualified names use
// dots ("mining.sample_count").
const std::vector<ConfigKey>& known_config_keys();

// Layered key=value configuration: defaults < config file < environment
// (VISRET_<KEY>, dots as underscores) < explicit set() calls (CLI flags).
// Unknown keys are rejected everywhere, echo() reproduces the effective
// configuration as sorted key=value lines.
class RunConfig {
 public:
  RunConfig();  // defaults only

  static RunConfig from_file(const std::string& path);
  // Parses "key = value" lines with '#' comments and [section] headers that
  // prefix the keys that follow.
  void apply_text(const std::string& text, const std::string& origin);
  void apply_env();
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  std::string echo() const;
  // Writes echo() into <dir>/config.echo atomically.
  void echo_to(const std::string& dir) const;

 private:
  void require_known(const std::string& key, const std::string& origin) const;

  std::map<std::string, std::string> values_;
};

}  // namespace visret
