#include <iostream>
#include <vector>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace chunkloc::cli;
  CLI::App app{"Sparsified sentence-embedding encoder-decoder, chunk localization and BLM harness"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  const std::vector<Command> commands{add_generate(app), add_embed_synthetic(app), add_train(app),
                                      add_localize(app), add_blm(app),             add_report(app)};
  try {
    const auto args = splice_config(argc, argv);
    std::vector<const char*> raw;
    for (const auto& a : args) {
      raw.push_back(a.c_str());
    }
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << error_line("usage_error", e.what()) << std::endl;
    return 2;
  } catch (const chunkloc::Error& e) {
    std::cerr << error_line(e.code(), e.what()) << std::endl;
    return 1;
  }
  try {
    for (const auto& c : commands) {
      if (c.app->parsed()) {
        return c.run();
      }
    }
  } catch (const chunkloc::Error& e) {
    std::cerr << error_line(e.code(), e.what()) << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << error_line("internal_error", e.what()) << std::endl;
    return 1;
  }
  return 2;
}
