#include "visret/run_config.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "visret/errors.hpp"
#include "visret/io.hpp"

namespace visret {

const std::vector<ConfigKey>& known_config_keys() {
  static const std::vector<ConfigKey> kKeys = {
      {"seed", "0", "seed for every stochastic stage"},
      {"threads", "1", "worker cap for parallel sections"},
      {"dim", "64", "embedding dimension of the mock/remote backend"},
      {"backend", "mock", "embedder backend: mock | remote"},
      {"remote.endpoint", "http://127.0.0.1:8089", "embedding service base URL"},
      {"remote.path", "/embed", "embedding service route"},
      {"remote.max_attempts", "3", "total tries per remote request"},
      {"remote.timeout_sec", "10", "remote connect/read timeout"},
      {"filter.max_aspect", "9.0", "reject screenshots above this aspect ratio"},
      {"filter.min_caption_chars", "100", "reject captions shorter than this"},
      {"filter.blocklist", "", "comma-separated lowercase caption keywords"},
      {"mining.q_top", "15", "query-text candidate window"},
      {"mining.q_exclude_top", "1", "query-text false-positive guard"},
      {"mining.t_top", "10", "target-caption candidate window"},
      {"mining.t_exclude_top", "3", "target-caption false-positive guard"},
      {"mining.visual_top", "10", "target-visual candidate window"},
      {"mining.visual_exclude_top", "2", "target-visual false-positive guard"},
      {"mining.sample_count", "8", "negatives sampled per tuple"},
      {"mining.pair_top", "10", "relevant-pair candidate window"},
      {"train.lr", "5e-6", "initial learning rate (linear decay to zero)"},
      {"train.batch_size_stage1", "8", "stage-1 batch size"},
      {"train.batch_size_stage2", "8", "stage-2 batch size"},
      {"train.epochs_per_stage", "1", "epochs per stage"},
      {"train.d_emb", "16", "encoder output dimension"},
      {"train.tau", "0.05", "softmax temperature (fixed)"},
      {"train.init_scale", "0.1", "uniform init half-range"},
      {"train.negative_mode", "shared", "hard-negative pooling: shared | per_query"},
      {"resize.max_tokens", "2500", "28x28 patch budget"},
      {"bench.k", "1", "recall cutoff"},
      {"bench.target_size", "5000", "candidates per task corpus"},
  };
  return kKeys;
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& key : known_config_keys()) {
    values_[key.name] = key.default_value;
  }
}

void RunConfig::require_known(const std::string& key,
                              const std::string& origin) const {
  if (values_.count(key) == 0) {
    throw DataError(origin + ": unknown config key '" + key + "'");
  }
}

RunConfig RunConfig::from_file(const std::string& path) {
  RunConfig cfg;
  cfg.apply_text(read_file(path), path);
  return cfg;
}

void RunConfig::apply_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    std::string where = origin + " line " + std::to_string(lineno);
    if (stripped.front() == '[') {
      if (stripped.back() != ']') {
        throw DataError(where + ": unterminated section header");
      }
      section = trim(stripped.substr(1, stripped.size() - 2));
      continue;
    }
    size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw DataError(where + ": expected key = value");
    }
    std::string key = trim(stripped.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    require_known(key, where);
    values_[key] = trim(stripped.substr(eq + 1));
  }
}

void RunConfig::apply_env() {
  for (auto& [key, value] : values_) {
    std::string env_name = "VISRET_";
    for (char c : key) {
      env_name += c == '.' ? '_' : static_cast<char>(std::toupper(
                                       static_cast<unsigned char>(c)));
    }
    if (const char* env = std::getenv(env_name.c_str())) {
      value = env;
    }
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  require_known(key, "set");
  values_[key] = value;
}

bool RunConfig::has(const std::string& key) const {
  return values_.count(key) != 0;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw DataError("config: unknown key '" + key + "'");
  }
  return it->second;
}

int RunConfig::get_int(const std::string& key) const {
  try {
    size_t used = 0;
    int v = std::stoi(get(key), &used);
    if (used != get(key).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw DataError("config: '" + key + "' = '" + get(key) +
                    "' is not an integer");
  }
}

uint64_t RunConfig::get_u64(const std::string& key) const {
  try {
    size_t used = 0;
    unsigned long long v = std::stoull(get(key), &used);
    if (used != get(key).size()) throw std::invalid_argument("trailing");
    return static_cast<uint64_t>(v);
  } catch (const std::exception&) {
    throw DataError("config: '" + key + "' = '" + get(key) +
                    "' is not an unsigned integer");
  }
}

double RunConfig::get_double(const std::string& key) const {
  try {
    size_t used = 0;
    double v = std::stod(get(key), &used);
    if (used != get(key).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw DataError("config: '" + key + "' = '" + get(key) +
                    "' is not a number");
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw DataError("config: '" + key + "' = '" + v + "' is not a boolean");
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [key, value] : values_) {  // std::map iterates sorted
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

void RunConfig::echo_to(const std::string& dir) const {
  atomic_write(dir + "/config.echo", echo());
}

}  // namespace visret
