#pragma once

#include <functional>

#include "common.hpp"

namespace chunkloc::cli {

struct Command {
  CLI::App* app = nullptr;
  std::function<int()> run;
};

Command add_generate(CLI::App& root);
Command add_embed_synthetic(CLI::App& root);
Command add_train(CLI::App& root);
Command add_localize(CLI::App& root);
Command add_blm(CLI::App& root);
Command add_report(CLI::App& root);

}  // namespace chunkloc::cli
