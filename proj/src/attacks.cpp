#include "mchess/attacks.hpp"

#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <tuple>

#include "mchess/errors.hpp"
#include "mchess/seed.hpp"

namespace mchess {

namespace {

constexpr int kRookDirs[4][2] = {{0, 1}, {1, 0}, {0, -1}, {-1, 0}};
constexpr int kBishopDirs[4][2] = {{1, 1}, {1, -1}, {-1, -1}, {-1, 1}};
constexpr int kKnightJumps[8][2] = {{1, 2}, {2, 1}, {2, -1}, {1, -2}, {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}};
constexpr int kKingSteps[8][2] = {{0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}};

Bitboard ray_walk(const Geometry& g, Square s, const int (&dirs)[4][2], Bitboard occupancy) {
  Bitboard out = 0;
  const int f0 = g.file_of(s), r0 = g.rank_of(s);
  for (const auto& d : dirs) {
    for (int f = f0 + d[0], r = r0 + d[1]; g.contains(f, r); f += d[0], r += d[1]) {
      Bitboard b = square_bb(g.square(f, r));
      out |= b;
      if (occupancy & b) break;
    }
  }
  return out;
}

Bitboard mask_walk(const Geometry& g, Square s, const int (&dirs)[4][2]) {
  Bitboard out = 0;
  const int f0 = g.file_of(s), r0 = g.rank_of(s);
  for (const auto& d : dirs) {
    for (int f = f0 + d[0], r = r0 + d[1]; g.contains(f + d[0], r + d[1]); f += d[0], r += d[1]) {
      out |= square_bb(g.square(f, r));
    }
  }
  return out;
}

template <std::size_t N>
Bitboard leaper(const Geometry& g, Square s, const int (&steps)[N][2]) {
  Bitboard out = 0;
  const int f0 = g.file_of(s), r0 = g.rank_of(s);
  for (const auto& d : steps) {
    if (g.contains(f0 + d[0], r0 + d[1])) out |= square_bb(g.square(f0 + d[0], r0 + d[1]));
  }
  return out;
}

void fill_leapers(const Geometry& g, std::array<Bitboard, 64>& knight, std::array<Bitboard, 64>& king,
                  std::array<std::array<Bitboard, 64>, 2>& pawn) {
  for (Square s = 0; s < g.squares(); ++s) {
    knight[s] = leaper(g, s, kKnightJumps);
    king[s] = leaper(g, s, kKingSteps);
    const int f = g.file_of(s), r = g.rank_of(s);
    for (int side = 0; side < 2; ++side) {
      const int dr = side == 0 ? 1 : -1;
      Bitboard b = 0;
      for (int df : {-1, 1}) {
        if (g.contains(f + df, r + dr)) b |= square_bb(g.square(f + df, r + dr));
      }
      pawn[side][s] = b;
    }
  }
}

// Finds one magic for square s; appends its attack table to `table`.
MagicEntry find_magic(const Geometry& g, Square s, SliderKind kind, std::mt19937_64& rng,
                      std::uint64_t budget, std::vector<Bitboard>& table) {
  MagicEntry e;
  e.mask = relevant_mask(g, s, kind);
  const int bits = std::max(1, popcount(e.mask));
  e.shift = static_cast<unsigned>(64 - bits);
  e.offset = table.size();
  const std::size_t size = std::size_t{1} << bits;

  // Enumerate every blocker subset of the mask (Carry-Rippler).
  std::vector<Bitboard> occupancies, references;
  Bitboard sub = 0;
  do {
    occupancies.push_back(sub);
    references.push_back(ray_scan_attacks(g, s, kind, sub));
    sub = (sub - e.mask) & e.mask;
  } while (sub);

  std::vector<Bitboard> candidate(size);
  std::vector<std::uint32_t> epoch(size, 0);
  const bool full_board = g.squares() == 64;

  for (std::uint64_t attempt = 1; attempt <= budget; ++attempt) {
    const Bitboard magic = rng() & rng() & rng();
    if (full_board && popcount((e.mask * magic) >> 56) < 6) continue;

    bool ok = true;
    for (std::size_t i = 0; i < occupancies.size() && ok; ++i) {
      const std::size_t idx = static_cast<std::size_t>(((occupancies[i] & e.mask) * magic) >> e.shift);
      if (epoch[idx] != attempt) {
        epoch[idx] = static_cast<std::uint32_t>(attempt);
        candidate[idx] = references[i];
      } else if (candidate[idx] != references[i]) {
        ok = false;
      }
    }
    if (ok) {
      e.magic = magic;
      table.insert(table.end(), candidate.begin(), candidate.end());
      return e;
    }
  }
  std::ostringstream os;
  os << (kind == SliderKind::Rook ? "rook" : "bishop") << " square " << g.square_name(s) << " on "
     << g.width << "x" << g.height << " after " << budget << " attempts";
  throw Error(ErrorCode::MagicSearchExhausted, os.str());
}

}  // namespace

Bitboard ray_scan_attacks(const Geometry& g, Square s, SliderKind kind, Bitboard occupancy) {
  switch (kind) {
    case SliderKind::Rook: return ray_walk(g, s, kRookDirs, occupancy);
    case SliderKind::Bishop: return ray_walk(g, s, kBishopDirs, occupancy);
    case SliderKind::Queen:
      return ray_walk(g, s, kRookDirs, occupancy) | ray_walk(g, s, kBishopDirs, occupancy);
  }
  return 0;
}

Bitboard relevant_mask(const Geometry& g, Square s, SliderKind kind) {
  switch (kind) {
    case SliderKind::Rook: return mask_walk(g, s, kRookDirs);
    case SliderKind::Bishop: return mask_walk(g, s, kBishopDirs);
    case SliderKind::Queen: return mask_walk(g, s, kRookDirs) | mask_walk(g, s, kBishopDirs);
  }
  return 0;
}

Bitboard AttackTables::rook(Square s, Bitboard occupancy) const {
  if (backend_ == AttackBackend::RayScan) return ray_scan_attacks(geometry_, s, SliderKind::Rook, occupancy);
  return table_[rook_magic_[s].index(occupancy)];
}

Bitboard AttackTables::bishop(Square s, Bitboard occupancy) const {
  if (backend_ == AttackBackend::RayScan) return ray_scan_attacks(geometry_, s, SliderKind::Bishop, occupancy);
  return table_[bishop_magic_[s].index(occupancy)];
}

Bitboard AttackTables::sliding(Square s, SliderKind kind, Bitboard occupancy) const {
  switch (kind) {
    case SliderKind::Rook: return rook(s, occupancy);
    case SliderKind::Bishop: return bishop(s, occupancy);
    case SliderKind::Queen: return rook(s, occupancy) | bishop(s, occupancy);
  }
  return 0;
}

AttackTables build_tables(const Geometry& g, std::uint64_t seed, std::uint64_t attempt_budget) {
  validate_geometry(g);
  AttackTables t;
  t.geometry_ = g;
  t.backend_ = AttackBackend::Magic;
  fill_leapers(g, t.knight_, t.king_, t.pawn_);
  for (Square s = 0; s < g.squares(); ++s) {
    std::mt19937_64 rook_rng(derive_seed(seed, static_cast<std::uint64_t>(2 * s)));
    t.rook_magic_[s] = find_magic(g, s, SliderKind::Rook, rook_rng, attempt_budget, t.table_);
    std::mt19937_64 bishop_rng(derive_seed(seed, static_cast<std::uint64_t>(2 * s + 1)));
    t.bishop_magic_[s] = find_magic(g, s, SliderKind::Bishop, bishop_rng, attempt_budget, t.table_);
  }
  return t;
}

AttackTables build_ray_scan_tables(const Geometry& g) {
  validate_geometry(g);
  AttackTables t;
  t.geometry_ = g;
  t.backend_ = AttackBackend::RayScan;
  fill_leapers(g, t.knight_, t.king_, t.pawn_);
  return t;
}

std::shared_ptr<const AttackTables> shared_tables(const Geometry& g, AttackBackend backend) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, AttackBackend>, std::shared_ptr<const AttackTables>> cache;

  std::lock_guard lock(mutex);
  auto key = std::make_tuple(g.width, g.height, backend);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  std::shared_ptr<const AttackTables> tables;
  if (backend == AttackBackend::Magic) {
    try {
      tables = std::make_shared<const AttackTables>(build_tables(g));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MagicSearchExhausted) throw;
      tables = std::make_shared<const AttackTables>(build_ray_scan_tables(g));
    }
  } else {
    tables = std::make_shared<const AttackTables>(build_ray_scan_tables(g));
  }
  cache.emplace(key, tables);
  return tables;
}

}  // namespace mchess
