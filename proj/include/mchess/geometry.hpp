#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mchess {

using Bitboard = std::uint64_t;
using Square = int;

constexpr Bitboard square_bb(Square s) { return Bitboard{1} << s; }
inline int popcount(Bitboard b) { return std::popcount(b); }
inline Square lsb(Bitboard b) { return std::countr_zero(b); }
inline Square pop_lsb(Bitboard& b) {
  Square s = lsb(b);
  b &= b - 1;
  return s;
}

constexpr int kMaxFiles = 8;
constexpr int kMaxRanks = 8;

// Board dimensions. Squares are numbered rank-major, little-endian:
// index = rank * width + file, a1 = 0.
struct Geometry {
  int width = 8;
  int height = 8;

  int squares() const { return width * height; }
  Square square(int file, int rank) const { return rank * width + file; }
  int file_of(Square s) const { return s % width; }
  int rank_of(Square s) const { return s / width; }
  bool contains(int file, int rank) const {
    return file >= 0 && file < width && rank >= 0 && rank < height;
  }

  Bitboard board_mask() const {
    return squares() == 64 ? ~Bitboard{0} : (Bitboard{1} << squares()) - 1;
  }
  Bitboard file_mask(int file) const;
  Bitboard rank_mask(int rank) const;

  std::string square_name(Square s) const;
  std::optional<Square> parse_square(std::string_view text) const;

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

// Throws Error(GeometryOutOfRange) unless 1 <= width, height <= 8.
void validate_geometry(const Geometry& g);

}  // namespace mchess
