#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "mchess/geometry.hpp"

namespace mchess {

enum class Side : std::uint8_t { White, Black };

constexpr Side operator~(Side s) { return s == Side::White ? Side::Black : Side::White; }
constexpr int index_of(Side s) { return static_cast<int>(s); }

enum class PieceKind : std::uint8_t { Pawn, Knight, Bishop, Rook, Queen, King };

constexpr int kPieceKinds = 6;
constexpr int index_of(PieceKind k) { return static_cast<int>(k); }
constexpr std::array<PieceKind, kPieceKinds> kAllPieceKinds = {
    PieceKind::Pawn, PieceKind::Knight, PieceKind::Bishop,
    PieceKind::Rook, PieceKind::Queen,  PieceKind::King};

// FEN letter: uppercase for White.
char piece_char(Side side, PieceKind kind);
std::optional<std::pair<Side, PieceKind>> parse_piece_char(char c);

enum class MoveFlag : std::uint8_t { Quiet, Capture, DoublePush, EnPassant, CastleKing, CastleQueen };

struct Move {
  Square from = 0;
  Square to = 0;
  std::optional<PieceKind> promotion;
  MoveFlag flag = MoveFlag::Quiet;

  bool is_capture() const { return flag == MoveFlag::Capture || flag == MoveFlag::EnPassant; }
  bool is_castle() const { return flag == MoveFlag::CastleKing || flag == MoveFlag::CastleQueen; }

  friend bool operator==(const Move&, const Move&) = default;
};

// Canonical order: from, then to, then promotion (none first, then by kind).
inline bool move_order_less(const Move& a, const Move& b) {
  if (a.from != b.from) return a.from < b.from;
  if (a.to != b.to) return a.to < b.to;
  return a.promotion < b.promotion;
}

// Coordinate notation, e.g. "b4b5n".
std::string move_to_string(const Geometry& g, const Move& m);

enum class OutcomeKind : std::uint8_t { Ongoing, Win, Draw };
enum class DrawReason : std::uint8_t { None, Stalemate, Repetition, HalfmoveLimit, InsufficientMaterial, MoveCap };

struct GameOutcome {
  OutcomeKind kind = OutcomeKind::Ongoing;
  Side winner = Side::White;
  DrawReason reason = DrawReason::None;

  static GameOutcome ongoing() { return {}; }
  static GameOutcome win(Side s) { return {OutcomeKind::Win, s, DrawReason::None}; }
  static GameOutcome draw(DrawReason r) { return {OutcomeKind::Draw, Side::White, r}; }

  bool is_ongoing() const { return kind == OutcomeKind::Ongoing; }
  // +1 White win, -1 Black win, 0 otherwise.
  int white_score() const {
    if (kind != OutcomeKind::Win) return 0;
    return winner == Side::White ? 1 : -1;
  }

  friend bool operator==(const GameOutcome&, const GameOutcome&) = default;
};

std::string outcome_to_string(const GameOutcome& o);

}  // namespace mchess
