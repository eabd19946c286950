#include <sstream>

#include "mchess/errors.hpp"
#include "mchess/geometry.hpp"
#include "mchess/types.hpp"

namespace mchess {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::GeometryOutOfRange: return "GeometryOutOfRange";
    case ErrorCode::IllegalStartingArray: return "IllegalStartingArray";
    case ErrorCode::InvalidFen: return "InvalidFen";
    case ErrorCode::IllegalMove: return "IllegalMove";
    case ErrorCode::MagicSearchExhausted: return "MagicSearchExhausted";
    case ErrorCode::NotLegalInPosition: return "NotLegalInPosition";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::ScarceClass: return "ScarceClass";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyValidation: return "EmptyValidation";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool Error::is_usage_error() const {
  switch (code_) {
    case ErrorCode::Parse:
    case ErrorCode::GeometryOutOfRange:
    case ErrorCode::IllegalStartingArray:
    case ErrorCode::InvalidFen:
    case ErrorCode::InvalidConfig:
    case ErrorCode::UnknownName:
    case ErrorCode::SpecMismatch:
      return true;
    default:
      return false;
  }
}

Bitboard Geometry::file_mask(int file) const {
  Bitboard b = 0;
  for (int r = 0; r < height; ++r) b |= square_bb(square(file, r));
  return b;
}

Bitboard Geometry::rank_mask(int rank) const {
  Bitboard b = 0;
  for (int f = 0; f < width; ++f) b |= square_bb(square(f, rank));
  return b;
}

std::string Geometry::square_name(Square s) const {
  std::string out;
  out += static_cast<char>('a' + file_of(s));
  out += static_cast<char>('1' + rank_of(s));
  return out;
}

std::optional<Square> Geometry::parse_square(std::string_view text) const {
  if (text.size() != 2) return std::nullopt;
  int file = text[0] - 'a';
  int rank = text[1] - '1';
  if (!contains(file, rank)) return std::nullopt;
  return square(file, rank);
}

void validate_geometry(const Geometry& g) {
  if (g.width < 1 || g.width > kMaxFiles || g.height < 1 || g.height > kMaxRanks) {
    std::ostringstream os;
    os << "board " << g.width << "x" << g.height << " outside 1..8 x 1..8";
    throw Error(ErrorCode::GeometryOutOfRange, os.str());
  }
}

char piece_char(Side side, PieceKind kind) {
  static constexpr char kLetters[] = "pnbrqk";
  char c = kLetters[index_of(kind)];
  return side == Side::White ? static_cast<char>(c - 'a' + 'A') : c;
}

std::optional<std::pair<Side, PieceKind>> parse_piece_char(char c) {
  Side side = (c >= 'A' && c <= 'Z') ? Side::White : Side::Black;
  char lower = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  switch (lower) {
    case 'p': return std::pair{side, PieceKind::Pawn};
    case 'n': return std::pair{side, PieceKind::Knight};
    case 'b': return std::pair{side, PieceKind::Bishop};
    case 'r': return std::pair{side, PieceKind::Rook};
    case 'q': return std::pair{side, PieceKind::Queen};
    case 'k': return std::pair{side, PieceKind::King};
    default: return std::nullopt;
  }
}

std::string move_to_string(const Geometry& g, const Move& m) {
  std::string out = g.square_name(m.from) + g.square_name(m.to);
  if (m.promotion) out += piece_char(Side::Black, *m.promotion);
  return out;
}

std::string outcome_to_string(const GameOutcome& o) {
  switch (o.kind) {
    case OutcomeKind::Ongoing: return "ongoing";
    case OutcomeKind::Win: return o.winner == Side::White ? "white-wins" : "black-wins";
    case OutcomeKind::Draw:
      switch (o.reason) {
        case DrawReason::Stalemate: return "draw-stalemate";
        case DrawReason::Repetition: return "draw-repetition";
        case DrawReason::HalfmoveLimit: return "draw-halfmove";
        case DrawReason::InsufficientMaterial: return "draw-material";
        case DrawReason::MoveCap: return "draw-movecap";
        case DrawReason::None: break;
      }
      return "draw";
  }
  return "unknown";
}

}  // namespace mchess
