#include "chunkloc/util/diagnostics.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace chunkloc {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return s;
}

std::atomic<std::size_t> g_count{0};

}  // namespace

void set_warning_sink(WarningSink s) {
  std::lock_guard lock(sink_mutex());
  sink() = std::move(s);
}

void warn(std::string_view message) {
  ++g_count;
  std::lock_guard lock(sink_mutex());
  if (sink()) {
    sink()(message);
  }
}

std::size_t warning_count() { return g_count.load(); }

}  // namespace chunkloc
