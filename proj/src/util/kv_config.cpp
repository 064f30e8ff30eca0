#include "chunkloc/util/kv_config.hpp"

#include <fstream>

#include "chunkloc/util/error.hpp"
#include "chunkloc/util/text.hpp"

namespace chunkloc {

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = text::trim(view);
    if (view.empty()) {
      continue;
    }
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("config line is not 'key = value'", lineno);
    }
    const auto key = text::trim(view.substr(0, eq));
    const auto value = text::trim(view.substr(eq + 1));
    if (key.empty()) {
      throw FormatError("empty config key", lineno);
    }
    cfg.values_[std::string(key)] = std::string(value);
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open config " + path.string());
  }
  return parse(in);
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  if (auto it = values_.find(key); it != values_.end()) {
    return it->second;
  }
  return std::nullopt;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) {
    return fallback;
  }
  try {
    return text::parse_double(*v, 0);
  } catch (const FormatError&) {
    throw ConfigError("config key '" + key + "' expects a real number, got '" + *v + "'");
  }
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t fallback) const {
  const auto v = get(key);
  if (!v) {
    return fallback;
  }
  try {
    return static_cast<std::size_t>(text::parse_u64(*v, 0));
  } catch (const FormatError&) {
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + *v + "'");
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) {
    return fallback;
  }
  if (*v == "1" || *v == "true" || *v == "on" || *v == "yes") {
    return true;
  }
  if (*v == "0" || *v == "false" || *v == "off" || *v == "no") {
    return false;
  }
  throw ConfigError("config key '" + key + "' expects on/off, got '" + *v + "'");
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

}  // namespace chunkloc
