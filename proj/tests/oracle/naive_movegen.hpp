#pragma once

// Brute-force mailbox move generator used only as a test oracle. It shares
// nothing with the bitboard engine except the VariantConfig it reads: every
// (from, to, promotion) candidate is checked against per-piece geometry, then
// played on a char board and rejected if the mover's king is attacked.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mchess/variant.hpp"

namespace oracle {

struct OracleMove {
  int from = 0;
  int to = 0;
  char promotion = 0;  // lowercase letter or 0

  bool operator==(const OracleMove&) const = default;
};

struct Board {
  int width = 0;
  int height = 0;
  std::vector<char> cells;  // index rank * width + file; '.' empty
  bool white_to_move = true;
  bool castle[2][2] = {{false, false}, {false, false}};  // [side][0=king side,1=queen side]
  int ep = -1;
  bool double_step = false;
  bool en_passant = false;
  std::string promotions;  // lowercase letters

  char at(int f, int r) const { return cells[r * width + f]; }
};

Board from_fen(const std::string& fen, const mchess::VariantConfig& cfg);
std::vector<OracleMove> legal_moves(const Board& b);
Board play(const Board& b, const OracleMove& m);
bool king_attacked(const Board& b, bool white_king);
std::uint64_t perft(const Board& b, int depth);

}  // namespace oracle
