#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "mchess/geometry.hpp"
#include "mchess/types.hpp"

namespace mchess {

enum class SliderKind : std::uint8_t { Rook, Bishop, Queen };

enum class AttackBackend : std::uint8_t { Magic, RayScan };

struct MagicEntry {
  Bitboard mask = 0;
  Bitboard magic = 0;
  unsigned shift = 63;
  std::size_t offset = 0;

  std::size_t index(Bitboard occupancy) const {
    return offset + static_cast<std::size_t>(((occupancy & mask) * magic) >> shift);
  }

  friend bool operator==(const MagicEntry&, const MagicEntry&) = default;
};

// Per-geometry attack maps. Immutable once built; share freely across threads.
class AttackTables {
 public:
  const Geometry& geometry() const { return geometry_; }
  AttackBackend backend() const { return backend_; }

  Bitboard knight(Square s) const { return knight_[s]; }
  Bitboard king(Square s) const { return king_[s]; }
  Bitboard pawn(Side side, Square s) const { return pawn_[index_of(side)][s]; }

  Bitboard rook(Square s, Bitboard occupancy) const;
  Bitboard bishop(Square s, Bitboard occupancy) const;
  Bitboard sliding(Square s, SliderKind kind, Bitboard occupancy) const;

  const MagicEntry& rook_magic(Square s) const { return rook_magic_[s]; }
  const MagicEntry& bishop_magic(Square s) const { return bishop_magic_[s]; }
  const std::vector<Bitboard>& shared_table() const { return table_; }

  friend bool operator==(const AttackTables&, const AttackTables&) = default;

 private:
  friend AttackTables build_tables(const Geometry&, std::uint64_t, std::uint64_t);
  friend AttackTables build_ray_scan_tables(const Geometry&);

  Geometry geometry_;
  AttackBackend backend_ = AttackBackend::RayScan;
  std::array<Bitboard, 64> knight_{};
  std::array<Bitboard, 64> king_{};
  std::array<std::array<Bitboard, 64>, 2> pawn_{};
  std::array<MagicEntry, 64> rook_magic_{};
  std::array<MagicEntry, 64> bishop_magic_{};
  std::vector<Bitboard> table_;
};

constexpr std::uint64_t kDefaultMagicSeed = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kDefaultMagicBudget = 10'000'000;

// Magic tables found by seeded sparse-random search. Deterministic in
// (geometry, seed). Throws MagicSearchExhausted if some square needs more
// than `attempt_budget` candidates.
AttackTables build_tables(const Geometry& g, std::uint64_t seed = kDefaultMagicSeed,
                          std::uint64_t attempt_budget = kDefaultMagicBudget);

// Same leaper maps, sliders answered by ray_scan_attacks.
AttackTables build_ray_scan_tables(const Geometry& g);

// Reference slider semantics: walk each ray until the first blocker (included)
// or the board edge.
Bitboard ray_scan_attacks(const Geometry& g, Square s, SliderKind kind, Bitboard occupancy);

// Relevant-occupancy mask: ray squares excluding the last square of each ray.
Bitboard relevant_mask(const Geometry& g, Square s, SliderKind kind);

inline Bitboard sliding_attacks(const AttackTables& t, Square s, SliderKind kind, Bitboard occupancy) {
  return t.sliding(s, kind, occupancy);
}

// Process-wide cache. Magic construction falls back to ray scanning when the
// search is exhausted.
std::shared_ptr<const AttackTables> shared_tables(const Geometry& g, AttackBackend backend);

}  // namespace mchess
