#pragma once

#include <cstddef>
#include <functional>
#include <string_view>

namespace chunkloc {

// Library warnings go through one replaceable sink (stderr by default).
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);
std::size_t warning_count();

}  // namespace chunkloc
