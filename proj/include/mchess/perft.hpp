#pragma once

#include <cstdint>

#include "mchess/attacks.hpp"
#include "mchess/position.hpp"
#include "mchess/variant.hpp"

namespace mchess {

// Leaf count of the legal-move tree at exactly `depth` plies. Serial.
std::uint64_t perft(const Position& p, int depth);

// Root moves split across OpenMP threads; same result as perft().
std::uint64_t perft_parallel(const Position& p, int depth);

std::uint64_t perft(const VariantConfig& config, int depth, AttackBackend backend = AttackBackend::Magic);

}  // namespace mchess
