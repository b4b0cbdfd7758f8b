#pragma once

#include <string>
#include <vector>

namespace dmp {

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

/// Writes to a temp file in the target directory, then renames over `path`.
void atomic_write(const std::string& path, const std::string& contents);
void atomic_write_binary(const std::string& path, const std::vector<char>& contents);

}  // namespace dmp
