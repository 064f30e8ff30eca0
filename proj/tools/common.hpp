#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "chunkloc/util/error.hpp"

namespace chunkloc::cli {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Digest of an existing artifact differs from its manifest entry.
class DigestMismatch : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "digest_mismatch"; }
};

// Keys of the file named by --config become "--key=value" arguments placed
// right after the subcommand, so explicit flags (parsed later, last value
// wins) override the file.
std::vector<std::string> splice_config(int argc, char** argv);

// {"error": <code>, "message": <text>} on one line.
std::string error_line(std::string_view code, std::string_view message);

// Shared option groups.
void add_config_option(CLI::App& cmd);
void add_resume_option(CLI::App& cmd, bool& resume);

bool parse_on_off(const std::string& value);

// Stage bookkeeping. The manifest lists the resolved configuration, seeds,
// input and output digests and wall-clock timings.
struct StageSpec {
  StageSpec(std::string stage_name, fs::path out, bool resume_stage)
      : stage(std::move(stage_name)), out_dir(std::move(out)), resume(resume_stage) {}

  std::string stage;
  fs::path out_dir;
  bool resume = false;
  Json config = Json::object();
  Json seeds = Json::object();
  std::vector<fs::path> inputs;
};

class Stage {
 public:
  explicit Stage(StageSpec spec);

  // True when --resume is set and the manifest in out_dir records the same
  // stage, configuration and input digests with every output intact. Throws
  // DigestMismatch if an input or output digest has changed.
  bool up_to_date() const;

  fs::path output(const std::string& name);
  void timing(const std::string& name, double seconds);
  // Writes manifest.json after hashing every registered output.
  void finish();

  const StageSpec& spec() const { return spec_; }

 private:
  Json input_digests() const;

  StageSpec spec_;
  std::vector<fs::path> outputs_;
  Json timings_ = Json::object();
  std::chrono::steady_clock::time_point start_;
};

// Writes one JSON record per line (used for metrics and curves).
void write_json_line(const fs::path& path, const Json& record, bool append = false);
void print_json_line(const Json& record);

// Runs a stage body unless the stage is up to date; prints a status line.
int run_stage(Stage& stage, const std::function<void(Stage&)>& body);

fs::path default_lexicon_path();

void require_file(const fs::path& path, std::string_view what);

}  // namespace chunkloc::cli
