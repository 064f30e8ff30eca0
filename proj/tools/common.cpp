#include "common.hpp"

#include <fstream>
#include <iostream>

#include "chunkloc/util/digest.hpp"
#include "chunkloc/util/kv_config.hpp"

#ifndef CHUNKLOC_DATA_DIR
#define CHUNKLOC_DATA_DIR "data"
#endif

namespace chunkloc::cli {

std::vector<std::string> splice_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  if (args.size() < 2 || args[1].empty() || args[1].front() == '-') {
    return args;
  }
  std::optional<fs::path> config_path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (!config_path) {
    return args;
  }
  const auto config = KeyValueConfig::load(*config_path);
  std::vector<std::string> out{args[0], args[1]};
  for (const auto& [key, value] : config.values()) {
    if (key != "config") {
      out.push_back("--" + key + "=" + value);
    }
  }
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

std::string error_line(std::string_view code, std::string_view message) {
  Json j;
  j["error"] = std::string(code);
  j["message"] = std::string(message);
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

void add_config_option(CLI::App& cmd) {
  cmd.add_option("--config", "key = value file; keys are long option names, explicit flags override it");
}

void add_resume_option(CLI::App& cmd, bool& resume) {
  cmd.add_flag("--resume", resume,
               "skip the stage when its manifest matches the configuration, inputs and outputs");
}

bool parse_on_off(const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ConfigError("expected on or off, got '" + value + "'");
}

Stage::Stage(StageSpec spec) : spec_(std::move(spec)), start_(std::chrono::steady_clock::now()) {}

Json Stage::input_digests() const {
  Json out = Json::array();
  for (const auto& p : spec_.inputs) {
    out.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}});
  }
  return out;
}

bool Stage::up_to_date() const {
  const auto path = spec_.out_dir / "manifest.json";
  if (!spec_.resume || !fs::exists(path)) {
    return false;
  }
  std::ifstream in(path);
  Json manifest;
  try {
    manifest = Json::parse(in);
  } catch (const Json::exception& e) {
    throw DigestMismatch("unreadable manifest " + path.string() + ": " + e.what());
  }
  if (manifest.value("stage", "") != spec_.stage || manifest["config"] != spec_.config ||
      manifest["inputs"] != input_digests()) {
    return false;
  }
  for (const auto& o : manifest["outputs"]) {
    const fs::path p = o.at("path").get<std::string>();
    if (!fs::exists(p)) {
      return false;
    }
    if (sha256_file(p) != o.at("sha256").get<std::string>()) {
      throw DigestMismatch("output " + p.string() + " no longer matches its manifest digest");
    }
  }
  return true;
}

fs::path Stage::output(const std::string& name) {
  auto p = spec_.out_dir / name;
  outputs_.push_back(p);
  return p;
}

void Stage::timing(const std::string& name, double seconds) { timings_[name] = seconds; }

void Stage::finish() {
  Json manifest;
  manifest["stage"] = spec_.stage;
  manifest["config"] = spec_.config;
  manifest["seeds"] = spec_.seeds;
  manifest["inputs"] = input_digests();
  Json outputs = Json::array();
  for (const auto& p : outputs_) {
    outputs.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}});
  }
  manifest["outputs"] = outputs;
  timings_["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  manifest["timings"] = timings_;
  std::ofstream out(spec_.out_dir / "manifest.json", std::ios::binary);
  if (!out) {
    throw DataError("cannot write " + (spec_.out_dir / "manifest.json").string());
  }
  out << manifest.dump(2) << '\n';
}

void write_json_line(const fs::path& path, const Json& record, bool append) {
  std::ofstream out(path, append ? std::ios::binary | std::ios::app : std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << record.dump() << '\n';
}

void print_json_line(const Json& record) { std::cout << record.dump() << std::endl; }

int run_stage(Stage& stage, const std::function<void(Stage&)>& body) {
  fs::create_directories(stage.spec().out_dir);
  if (stage.up_to_date()) {
    print_json_line({{"stage", stage.spec().stage}, {"status", "skipped"}, {"out", stage.spec().out_dir.generic_string()}});
    return 0;
  }
  body(stage);
  stage.finish();
  return 0;
}

fs::path default_lexicon_path() { return fs::path(CHUNKLOC_DATA_DIR) / "lexicon.txt"; }

void require_file(const fs::path& path, std::string_view what) {
  if (!fs::is_regular_file(path)) {
    throw DataError(std::string(what) + " not found: " + path.string());
  }
}

}  // namespace chunkloc::cli
