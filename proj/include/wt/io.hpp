#pragma once

#include <string>

namespace wt {

/// Write content to path via a temp file and atomic rename; no partial files
/// are left behind on error.
void atomic_write_file(const std::string& path, const std::string& content);

void ensure_directory(const std::string& path);

}  // namespace wt
