#include "mchess/encoding.hpp"

#include <algorithm>
#include <cstdlib>

#include "mchess/errors.hpp"

namespace mchess {

namespace {

constexpr int kDirections[8][2] = {{0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}};
constexpr int kKnightJumps[8][2] = {{1, 2}, {2, 1}, {2, -1}, {1, -2}, {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}};

int sgn(int x) { return (x > 0) - (x < 0); }

// Square as seen by the mover.
Square relative(const Geometry& g, Square s, Side mover) {
  if (mover == Side::White) return s;
  return g.square(g.file_of(s), g.height - 1 - g.rank_of(s));
}

}  // namespace

InputPlanes encode_position(const Position& p) {
  const Geometry& g = p.geometry();
  const int area = g.squares();
  const Side us = p.side_to_move();
  InputPlanes out(static_cast<std::size_t>(plane::kCount) * area, 0.0f);
  auto fill = [&](int channel, float value) {
    std::fill(out.begin() + channel * area, out.begin() + (channel + 1) * area, value);
  };

  for (Side s : {us, ~us}) {
    const int base = s == us ? plane::kOwnPieces : plane::kOpponentPieces;
    for (PieceKind k : kAllPieceKinds) {
      for (Bitboard b = p.pieces(s, k); b;) {
        out[(base + index_of(k)) * area + relative(g, pop_lsb(b), us)] = 1.0f;
      }
    }
  }
  if (us == Side::Black) fill(plane::kBlackToMove, 1.0f);

  const std::uint8_t rights = p.castling_rights();
  const bool white = us == Side::White;
  auto has = [&](std::uint8_t bit) { return (rights & bit) ? 1.0f : 0.0f; };
  fill(plane::kOwnKingSide, has(white ? kWhiteKingSide : kBlackKingSide));
  fill(plane::kOwnQueenSide, has(white ? kWhiteQueenSide : kBlackQueenSide));
  fill(plane::kOpponentKingSide, has(white ? kBlackKingSide : kWhiteKingSide));
  fill(plane::kOpponentQueenSide, has(white ? kBlackQueenSide : kWhiteQueenSide));

  const VariantConfig& cfg = p.rules().config();
  fill(plane::kHalfmoveClock, static_cast<float>(p.halfmove_clock()) / static_cast<float>(cfg.halfmove_limit));
  fill(plane::kRepetitions,
       static_cast<float>(p.repetition_count() - 1) / static_cast<float>(cfg.repetition_limit));
  return out;
}

InputPlanes toggle_side_plane(const InputPlanes& planes, const Geometry& g) {
  InputPlanes out = planes;
  const int area = g.squares();
  for (int i = 0; i < area; ++i) {
    float& v = out[plane::kBlackToMove * area + i];
    v = 1.0f - v;
  }
  return out;
}

MoveEncoder::MoveEncoder(const VariantConfig& config) : geometry_(config.geometry) {
  ray_length_ = std::max(geometry_.width, geometry_.height) - 1;
  for (PieceKind k : config.allowed_promotions) {
    if (k != PieceKind::Queen) underpromotions_.push_back(k);
  }
  planes_per_square_ = 8 * ray_length_ + 8 + 3 * static_cast<int>(underpromotions_.size());
}

int MoveEncoder::move_to_index(const Move& m, const Position& p) const {
  const Geometry& g = geometry_;
  const Side us = p.side_to_move();
  const Square from = relative(g, m.from, us);
  const Square to = relative(g, m.to, us);
  const int df = g.file_of(to) - g.file_of(from);
  const int dr = g.rank_of(to) - g.rank_of(from);
  const int area = g.squares();

  int plane_index = -1;
  if (m.promotion && *m.promotion != PieceKind::Queen) {
    auto it = std::find(underpromotions_.begin(), underpromotions_.end(), *m.promotion);
    if (it == underpromotions_.end()) throw Error(ErrorCode::NotLegalInPosition, "promotion kind not allowed");
    plane_index = 8 * ray_length_ + 8 + 3 * static_cast<int>(it - underpromotions_.begin()) + (df + 1);
  } else if (df == 0 || dr == 0 || std::abs(df) == std::abs(dr)) {
    const int dist = std::max(std::abs(df), std::abs(dr));
    for (int d = 0; d < 8; ++d) {
      if (kDirections[d][0] == sgn(df) && kDirections[d][1] == sgn(dr)) plane_index = d * ray_length_ + dist - 1;
    }
  } else {
    for (int k = 0; k < 8; ++k) {
      if (kKnightJumps[k][0] == df && kKnightJumps[k][1] == dr) plane_index = 8 * ray_length_ + k;
    }
  }
  if (plane_index < 0) throw Error(ErrorCode::NotLegalInPosition, "move has no policy plane");
  return plane_index * area + from;
}

Move MoveEncoder::index_to_move(int index, const Position& p) const {
  const Geometry& g = geometry_;
  const int area = g.squares();
  if (index < 0 || index >= policy_size()) {
    throw Error(ErrorCode::NotLegalInPosition, "policy index " + std::to_string(index) + " out of range");
  }
  const int plane_index = index / area;
  const Square rel_from = index % area;
  int df = 0, dr = 0;
  std::optional<PieceKind> promotion;
  if (plane_index < 8 * ray_length_) {
    const int d = plane_index / ray_length_, dist = plane_index % ray_length_ + 1;
    df = kDirections[d][0] * dist;
    dr = kDirections[d][1] * dist;
  } else if (plane_index < 8 * ray_length_ + 8) {
    df = kKnightJumps[plane_index - 8 * ray_length_][0];
    dr = kKnightJumps[plane_index - 8 * ray_length_][1];
  } else {
    const int u = plane_index - 8 * ray_length_ - 8;
    df = u % 3 - 1;
    dr = 1;
    promotion = underpromotions_[u / 3];
  }
  const int f = g.file_of(rel_from) + df, r = g.rank_of(rel_from) + dr;
  if (!g.contains(f, r)) {
    throw Error(ErrorCode::NotLegalInPosition, "policy index " + std::to_string(index) + " leaves the board");
  }
  const Side us = p.side_to_move();
  const Square from = relative(g, rel_from, us);
  const Square to = relative(g, g.square(f, r), us);

  const auto piece = p.piece_at(from);
  const bool pawn_to_last = piece && piece->second == PieceKind::Pawn &&
                            g.rank_of(to) == (us == Side::White ? g.height - 1 : 0);
  if (pawn_to_last && !promotion) promotion = PieceKind::Queen;

  for (const Move& m : legal_moves(p)) {
    if (m.from == from && m.to == to && m.promotion == promotion) return m;
  }
  throw Error(ErrorCode::NotLegalInPosition, "policy index " + std::to_string(index) + " is not a legal move");
}

std::vector<int> MoveEncoder::legal_indices(const Position& p) const { return legal_indices(p, legal_moves(p)); }

std::vector<int> MoveEncoder::legal_indices(const Position& p, const std::vector<Move>& legal) const {
  std::vector<int> out;
  out.reserve(legal.size());
  for (const Move& m : legal) out.push_back(move_to_index(m, p));
  return out;
}

std::vector<std::uint8_t> MoveEncoder::policy_mask(const Position& p) const {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(policy_size()), 0);
  for (int i : legal_indices(p)) mask[i] = 1;
  return mask;
}

}  // namespace mchess
