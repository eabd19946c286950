#pragma once

#include <cstdint>
#include <vector>

#include "mchess/position.hpp"

namespace mchess {

// Channel order. Piece planes are relative to the side to move ("own" first);
// ranks are flipped when Black moves so the mover always plays upward.
namespace plane {
constexpr int kOwnPieces = 0;        // + index_of(PieceKind)
constexpr int kOpponentPieces = 6;   // + index_of(PieceKind)
constexpr int kBlackToMove = 12;
constexpr int kOwnKingSide = 13;
constexpr int kOwnQueenSide = 14;
constexpr int kOpponentKingSide = 15;
constexpr int kOpponentQueenSide = 16;
constexpr int kHalfmoveClock = 17;   // halfmove_clock / halfmove_limit
constexpr int kRepetitions = 18;     // (occurrences - 1) / repetition_limit
constexpr int kCount = 19;
}  // namespace plane

// Flat [channel][rank][file] tensor, rank relative to the mover.
using InputPlanes = std::vector<float>;

InputPlanes encode_position(const Position& p);

// The side-to-move plane is the only channel that differs between p and
// mirror(p); this toggles it.
InputPlanes toggle_side_plane(const InputPlanes& planes, const Geometry& g);

// Geometry-parameterized policy layout:
//   plane = dir * L + (dist - 1)        sliding, dir in N,NE,E,SE,S,SW,W,NW, L = max(w,h) - 1
//         = 8L + k                      knight jump k
//         = 8L + 8 + 3u + (df + 1)      underpromotion u (allowed kinds minus Queen, ascending)
//   index = plane * H * W + relative from-square
// Queen promotions and castling use the sliding planes.
class MoveEncoder {
 public:
  explicit MoveEncoder(const VariantConfig& config);

  int planes_per_square() const { return planes_per_square_; }
  int policy_size() const { return planes_per_square_ * geometry_.squares(); }
  const Geometry& geometry() const { return geometry_; }

  // Precondition: m is legal in p.
  int move_to_index(const Move& m, const Position& p) const;
  // Throws NotLegalInPosition when the index leaves the board or decodes to a
  // move that is not legal in p.
  Move index_to_move(int index, const Position& p) const;

  // Index of every legal move, in legal_moves() order.
  std::vector<int> legal_indices(const Position& p) const;
  std::vector<int> legal_indices(const Position& p, const std::vector<Move>& legal) const;
  std::vector<std::uint8_t> policy_mask(const Position& p) const;

 private:
  Geometry geometry_;
  int ray_length_ = 0;
  int planes_per_square_ = 0;
  std::vector<PieceKind> underpromotions_;
};

}  // namespace mchess
