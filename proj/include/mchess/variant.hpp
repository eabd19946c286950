#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "mchess/geometry.hpp"
#include "mchess/types.hpp"

namespace mchess {

struct VariantConfig {
  std::string name = "custom";
  Geometry geometry;
  std::string starting_array;  // FEN board field, White at the bottom
  std::array<bool, 2> castling_enabled = {false, false};
  bool pawn_double_step = false;
  bool en_passant = false;
  int halfmove_limit = 100;
  int repetition_limit = 3;
  std::vector<PieceKind> allowed_promotions;  // sorted, unique, no Pawn/King

  bool allows_promotion(PieceKind k) const;

  friend bool operator==(const VariantConfig&, const VariantConfig&) = default;
};

// Accepts either a built-in preset name ("silverman4x5", "losalamos6x6",
// "standard8x8") or a variant document. Throws Parse, GeometryOutOfRange or
// IllegalStartingArray.
VariantConfig parse_variant(std::string_view text);

// Preset name, or path to a variant document on disk.
VariantConfig load_variant(const std::string& name_or_path);

std::string serialize_variant(const VariantConfig& config);

const std::vector<std::string>& builtin_variant_names();
std::string builtin_variant_text(const std::string& name);

}  // namespace mchess
