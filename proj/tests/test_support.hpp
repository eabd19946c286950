#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "mchess/position.hpp"

namespace testing {

inline mchess::RulesPtr rules_for(const std::string& preset,
                                  mchess::AttackBackend backend = mchess::AttackBackend::Magic) {
  return mchess::Rules::make(mchess::parse_variant(preset), backend);
}

inline mchess::Position initial(const std::string& preset) { return mchess::Position::initial(rules_for(preset)); }

inline mchess::Position fen(const std::string& preset, const std::string& text) {
  return mchess::parse_fen(text, rules_for(preset));
}

// Visits every position of random games (uniform legal moves) until
// `transitions` moves have been played. The visitor sees parent, move, child.
inline void random_playouts(const mchess::Position& start, int transitions, std::uint64_t seed,
                            const std::function<void(const mchess::Position&, const mchess::Move&,
                                                     const mchess::Position&)>& visit,
                            int max_plies = 200) {
  std::mt19937_64 rng(seed);
  int done = 0;
  while (done < transitions) {
    mchess::Position p = start;
    for (int ply = 0; ply < max_plies && done < transitions; ++ply) {
      auto moves = mchess::legal_moves(p);
      if (!mchess::game_outcome(p, moves).is_ongoing()) break;
      const auto& m = moves[std::uniform_int_distribution<std::size_t>(0, moves.size() - 1)(rng)];
      mchess::Position child = mchess::apply_move_unchecked(p, m);
      visit(p, m, child);
      p = std::move(child);
      ++done;
    }
  }
}

// Structural invariants every reachable Position must satisfy.
inline bool position_invariants_hold(const mchess::Position& p, std::string* why = nullptr) {
  using namespace mchess;
  auto fail = [&](const char* what) {
    if (why) *why = what;
    return false;
  };
  const Geometry& g = p.geometry();
  Bitboard seen = 0;
  for (Side s : {Side::White, Side::Black}) {
    if (popcount(p.pieces(s, PieceKind::King)) != 1) return fail("king count");
    for (PieceKind k : kAllPieceKinds) {
      Bitboard b = p.pieces(s, k);
      if (b & seen) return fail("overlap");
      if (b & ~g.board_mask()) return fail("bits outside board");
      seen |= b;
    }
  }
  const Bitboard pawns = p.pieces(Side::White, PieceKind::Pawn) | p.pieces(Side::Black, PieceKind::Pawn);
  if (pawns & (g.rank_mask(0) | g.rank_mask(g.height - 1))) return fail("pawn on edge rank");
  if (is_in_check(p, ~p.side_to_move())) return fail("side not to move in check");
  if (p.repetition_stack().empty() || p.repetition_stack().back() != p.hash()) return fail("repetition stack");
  if (position_hash(p) != p.hash()) return fail("incremental hash");
  return true;
}

}  // namespace testing
