#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mchess/attacks.hpp"
#include "mchess/geometry.hpp"
#include "mchess/types.hpp"
#include "mchess/variant.hpp"

namespace mchess {

// Castling right bits.
enum CastlingRight : std::uint8_t {
  kWhiteKingSide = 1,
  kWhiteQueenSide = 2,
  kBlackKingSide = 4,
  kBlackQueenSide = 8,
};

struct ZobristKeys {
  std::array<std::array<std::array<std::uint64_t, 64>, kPieceKinds>, 2> piece{};
  std::array<std::uint64_t, 16> castling{};
  std::array<std::uint64_t, kMaxFiles> en_passant_file{};
  std::uint64_t side = 0;
};

// Everything immutable about a game: the variant, its attack tables and hash
// keys. Positions share one instance.
class Rules {
 public:
  static std::shared_ptr<const Rules> make(const VariantConfig& config,
                                           AttackBackend backend = AttackBackend::Magic);

  const VariantConfig& config() const { return config_; }
  const Geometry& geometry() const { return config_.geometry; }
  const AttackTables& attacks() const { return *tables_; }
  const ZobristKeys& keys() const { return keys_; }

 private:
  VariantConfig config_;
  std::shared_ptr<const AttackTables> tables_;
  ZobristKeys keys_;
};

using RulesPtr = std::shared_ptr<const Rules>;

class Position {
 public:
  static Position initial(const RulesPtr& rules);

  const Rules& rules() const { return *rules_; }
  const RulesPtr& rules_ptr() const { return rules_; }
  const Geometry& geometry() const { return rules_->geometry(); }

  Bitboard pieces(Side side, PieceKind kind) const { return pieces_[index_of(side)][index_of(kind)]; }
  Bitboard pieces(Side side) const { return occupancy_[index_of(side)]; }
  Bitboard occupied() const { return occupancy_[0] | occupancy_[1]; }
  std::optional<std::pair<Side, PieceKind>> piece_at(Square s) const;
  Square king_square(Side side) const { return lsb(pieces(side, PieceKind::King)); }

  Side side_to_move() const { return side_to_move_; }
  std::uint8_t castling_rights() const { return castling_; }
  std::optional<Square> en_passant() const { return en_passant_; }
  int halfmove_clock() const { return halfmove_clock_; }
  int fullmove_number() const { return fullmove_number_; }

  std::uint64_t hash() const { return hash_; }
  // Hashes since the last irreversible move; the current hash is last.
  const std::vector<std::uint64_t>& repetition_stack() const { return repetition_stack_; }
  int repetition_count() const;

  // Equality of game state: placement, side, rights, en passant, clocks.
  // Repetition history is not compared.
  friend bool operator==(const Position& a, const Position& b);

 private:
  friend Position parse_fen(std::string_view, const RulesPtr&);
  friend Position apply_move_unchecked(const Position&, const Move&);
  friend Position mirror(const Position&);
  friend std::uint64_t position_hash(const Position&);

  Position() = default;
  void put(Side side, PieceKind kind, Square s);
  void reset_history();

  RulesPtr rules_;
  std::array<std::array<Bitboard, kPieceKinds>, 2> pieces_{};
  std::array<Bitboard, 2> occupancy_{};
  Side side_to_move_ = Side::White;
  std::uint8_t castling_ = 0;
  std::optional<Square> en_passant_;
  int halfmove_clock_ = 0;
  int fullmove_number_ = 1;
  std::uint64_t hash_ = 0;
  std::vector<std::uint64_t> repetition_stack_;
};

// Legal moves in canonical order (see move_order_less).
std::vector<Move> legal_moves(const Position& p);

// Throws IllegalMove unless m is in legal_moves(p).
Position apply_move(const Position& p, const Move& m);
// For moves taken from legal_moves(p).
Position apply_move_unchecked(const Position& p, const Move& m);

bool is_in_check(const Position& p, Side side);
bool is_square_attacked(const Position& p, Square s, Side by);

GameOutcome game_outcome(const Position& p);
GameOutcome game_outcome(const Position& p, const std::vector<Move>& legal);

// From-scratch Zobrist hash; equals p.hash() for every valid position.
std::uint64_t position_hash(const Position& p);

std::string serialize_fen(const Position& p);
// Throws InvalidFen.
Position parse_fen(std::string_view text, const RulesPtr& rules);

// Colors swapped and ranks reflected; side to move flips.
Position mirror(const Position& p);

// Finds the legal move written in coordinate notation, or nullopt.
std::optional<Move> parse_move(const Position& p, std::string_view text);

}  // namespace mchess
