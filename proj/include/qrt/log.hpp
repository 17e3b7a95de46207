#pragma once

#include <string_view>

namespace qrt {

/// Writes "warning: <message>" to standard error unless warnings are muted.
void log_warning(std::string_view message);

/// Process-wide switch; tests and the CLI's --quiet flag mute warnings.
void set_warnings_enabled(bool enabled);

}  // namespace qrt
