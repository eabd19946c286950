#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mchess/network.hpp"
#include "mchess/variant.hpp"

namespace mchess {

constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  VariantConfig variant;
  Network net;
  std::uint64_t iteration = 0;
  std::optional<std::string> rng_state;
};

// Little-endian container: magic "MCKP", version, spec header, variant
// document, float32 parameters and normalization averages, CRC-32 trailer.
// Byte layout in docs/formats.md.
std::string serialize_checkpoint(const Checkpoint& c);
// Throws CorruptCheckpoint or VersionMismatch.
Checkpoint deserialize_checkpoint(const std::string& bytes);

// Writes to a temporary file and renames, so a crash never leaves a partial
// checkpoint under the final name. Throws Io.
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
// Also throws SpecMismatch unless the stored spec equals `expected`.
Checkpoint load_checkpoint(const std::string& path, const NetworkSpec& expected);

}  // namespace mchess
