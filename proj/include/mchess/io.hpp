#pragma once

#include <string>

namespace mchess {

// Whole-file helpers. Both throw Error(Io) with the path in the message.
std::string read_file(const std::string& path);
// Writes path.tmp then renames over path.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace mchess
