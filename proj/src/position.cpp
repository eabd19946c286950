#include "mchess/position.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "mchess/errors.hpp"
#include "mchess/seed.hpp"

namespace mchess {

namespace {

using PieceBoards = std::array<std::array<Bitboard, kPieceKinds>, 2>;

constexpr std::uint64_t kZobristSeed = 0x2545f4914f6cdd1dULL;

ZobristKeys make_keys() {
  ZobristKeys k;
  std::uint64_t state = kZobristSeed;
  auto next = [&] { return state = splitmix64(state); };
  for (auto& side : k.piece)
    for (auto& kind : side)
      for (auto& key : kind) key = next();
  // Combined-rights keys are XORs of per-bit keys so updates stay incremental.
  std::array<std::uint64_t, 4> bit_keys;
  for (auto& key : bit_keys) key = next();
  for (int rights = 0; rights < 16; ++rights) {
    k.castling[rights] = 0;
    for (int b = 0; b < 4; ++b)
      if (rights & (1 << b)) k.castling[rights] ^= bit_keys[b];
  }
  for (auto& key : k.en_passant_file) key = next();
  k.side = next();
  return k;
}

int pawn_push(const Geometry& g, Side s) { return s == Side::White ? g.width : -g.width; }
int last_rank(const Geometry& g, Side s) { return s == Side::White ? g.height - 1 : 0; }
int back_rank(const Geometry& g, Side s) { return s == Side::White ? 0 : g.height - 1; }
int double_step_rank(const Geometry& g, Side s) { return s == Side::White ? 1 : g.height - 2; }

std::uint8_t right_bit(Side s, bool king_side) {
  if (s == Side::White) return king_side ? kWhiteKingSide : kWhiteQueenSide;
  return king_side ? kBlackKingSide : kBlackQueenSide;
}

Square rook_corner(const Geometry& g, Side s, bool king_side) {
  return g.square(king_side ? g.width - 1 : 0, back_rank(g, s));
}

Bitboard attackers(const Rules& rules, const PieceBoards& pieces, Bitboard occ, Square s, Side by) {
  const AttackTables& t = rules.attacks();
  const auto& p = pieces[index_of(by)];
  Bitboard hit = t.pawn(~by, s) & p[index_of(PieceKind::Pawn)];
  hit |= t.knight(s) & p[index_of(PieceKind::Knight)];
  hit |= t.king(s) & p[index_of(PieceKind::King)];
  const Bitboard queens = p[index_of(PieceKind::Queen)];
  const Bitboard rooks = p[index_of(PieceKind::Rook)] | queens;
  const Bitboard bishops = p[index_of(PieceKind::Bishop)] | queens;
  if (rooks) hit |= t.rook(s, occ) & rooks;
  if (bishops) hit |= t.bishop(s, occ) & bishops;
  return hit;
}

struct CastleSquares {
  Square king_from, king_to, rook_from, rook_to;
};

std::optional<CastleSquares> castle_squares(const Geometry& g, Square king_from, Side s, bool king_side) {
  const int rank = back_rank(g, s);
  if (g.rank_of(king_from) != rank) return std::nullopt;
  const int king_to_file = king_side ? g.width - 2 : 2;
  const int rook_to_file = king_side ? g.width - 3 : 3;
  if (!g.contains(king_to_file, rank) || !g.contains(rook_to_file, rank)) return std::nullopt;
  CastleSquares c{king_from, g.square(king_to_file, rank), rook_corner(g, s, king_side),
                  g.square(rook_to_file, rank)};
  const int kf = g.file_of(king_from);
  if (king_side ? kf >= g.width - 1 : kf <= 0) return std::nullopt;
  if (c.king_to == c.king_from || c.rook_from == c.king_to) return std::nullopt;
  return c;
}

std::string initial_castling_field(const VariantConfig& cfg) {
  // Rights follow the starting array: a side that may castle gets each wing
  // whose corner holds its rook, provided the king stands on the back rank.
  const Geometry& g = cfg.geometry;
  std::vector<std::string> rows;
  std::string field;
  std::stringstream ss(cfg.starting_array);
  for (std::string row; std::getline(ss, row, '/');) rows.push_back(row);
  if (static_cast<int>(rows.size()) != g.height) return "-";
  auto piece_on = [&](int file, int rank) -> char {
    const std::string& row = rows[g.height - 1 - rank];
    int f = 0;
    for (char c : row) {
      if (std::isdigit(static_cast<unsigned char>(c))) {
        f += c - '0';
      } else {
        if (f == file) return c;
        ++f;
      }
      if (f > file) break;
    }
    return '.';
  };
  for (Side s : {Side::White, Side::Black}) {
    if (!cfg.castling_enabled[index_of(s)]) continue;
    const int rank = back_rank(g, s);
    int king_file = -1;
    for (int f = 0; f < g.width; ++f)
      if (piece_on(f, rank) == piece_char(s, PieceKind::King)) king_file = f;
    if (king_file < 0) continue;
    const Square king = g.square(king_file, rank);
    for (bool king_side : {true, false}) {
      const int corner = king_side ? g.width - 1 : 0;
      if (piece_on(corner, rank) == piece_char(s, PieceKind::Rook) && castle_squares(g, king, s, king_side)) {
        char c = king_side ? 'k' : 'q';
        field += s == Side::White ? static_cast<char>(std::toupper(c)) : c;
      }
    }
  }
  return field.empty() ? "-" : field;
}

[[noreturn]] void fen_error(const std::string& what) { throw Error(ErrorCode::InvalidFen, what); }

}  // namespace

// ---------------------------------------------------------------------------
// Rules

std::shared_ptr<const Rules> Rules::make(const VariantConfig& config, AttackBackend backend) {
  validate_geometry(config.geometry);
  auto rules = std::make_shared<Rules>();
  rules->config_ = config;
  rules->tables_ = shared_tables(config.geometry, backend);
  static const ZobristKeys keys = make_keys();
  rules->keys_ = keys;
  return rules;
}

// ---------------------------------------------------------------------------
// Position

Position Position::initial(const RulesPtr& rules) {
  const VariantConfig& cfg = rules->config();
  return parse_fen(cfg.starting_array + " w " + initial_castling_field(cfg) + " - 0 1", rules);
}

std::optional<std::pair<Side, PieceKind>> Position::piece_at(Square s) const {
  const Bitboard b = square_bb(s);
  for (Side side : {Side::White, Side::Black}) {
    if (!(occupancy_[index_of(side)] & b)) continue;
    for (PieceKind k : kAllPieceKinds)
      if (pieces_[index_of(side)][index_of(k)] & b) return std::pair{side, k};
  }
  return std::nullopt;
}

int Position::repetition_count() const {
  return static_cast<int>(std::count(repetition_stack_.begin(), repetition_stack_.end(), hash_));
}

void Position::put(Side side, PieceKind kind, Square s) {
  pieces_[index_of(side)][index_of(kind)] |= square_bb(s);
  occupancy_[index_of(side)] |= square_bb(s);
}

void Position::reset_history() {
  hash_ = position_hash(*this);
  repetition_stack_.assign(1, hash_);
}

bool operator==(const Position& a, const Position& b) {
  return a.geometry() == b.geometry() && a.pieces_ == b.pieces_ && a.side_to_move_ == b.side_to_move_ &&
         a.castling_ == b.castling_ && a.en_passant_ == b.en_passant_ &&
         a.halfmove_clock_ == b.halfmove_clock_ && a.fullmove_number_ == b.fullmove_number_;
}

std::uint64_t position_hash(const Position& p) {
  const ZobristKeys& k = p.rules().keys();
  std::uint64_t h = 0;
  for (int side = 0; side < 2; ++side)
    for (int kind = 0; kind < kPieceKinds; ++kind)
      for (Bitboard b = p.pieces_[side][kind]; b;) h ^= k.piece[side][kind][pop_lsb(b)];
  h ^= k.castling[p.castling_];
  if (p.en_passant_) h ^= k.en_passant_file[p.geometry().file_of(*p.en_passant_)];
  if (p.side_to_move_ == Side::Black) h ^= k.side;
  return h;
}

bool is_square_attacked(const Position& p, Square s, Side by) {
  PieceBoards boards;
  for (Side side : {Side::White, Side::Black})
    for (PieceKind k : kAllPieceKinds) boards[index_of(side)][index_of(k)] = p.pieces(side, k);
  return attackers(p.rules(), boards, p.occupied(), s, by) != 0;
}

bool is_in_check(const Position& p, Side side) {
  return is_square_attacked(p, p.king_square(side), ~side);
}

// ---------------------------------------------------------------------------
// Move generation

namespace {

struct Generator {
  const Position& pos;
  const Rules& rules;
  const Geometry& g;
  const AttackTables& t;
  Side us;
  Side them;
  PieceBoards boards;
  std::vector<Move>& out;

  Generator(const Position& p, std::vector<Move>& sink)
      : pos(p), rules(p.rules()), g(p.geometry()), t(p.rules().attacks()), us(p.side_to_move()),
        them(~p.side_to_move()), out(sink) {
    for (Side side : {Side::White, Side::Black})
      for (PieceKind k : kAllPieceKinds) boards[index_of(side)][index_of(k)] = p.pieces(side, k);
  }

  // King safety after playing m on a scratch copy of the bitboards.
  bool safe_after(const Move& m, PieceKind mover) const {
    PieceBoards b = boards;
    auto& mine = b[index_of(us)];
    auto& theirs = b[index_of(them)];
    mine[index_of(mover)] &= ~square_bb(m.from);
    mine[index_of(m.promotion.value_or(mover))] |= square_bb(m.to);
    if (m.flag == MoveFlag::EnPassant) {
      theirs[index_of(PieceKind::Pawn)] &= ~square_bb(m.to - pawn_push(g, us));
    } else if (m.flag == MoveFlag::Capture) {
      for (auto& bb : theirs) bb &= ~square_bb(m.to);
    }
    Bitboard occ = 0;
    for (const auto& side : b)
      for (Bitboard bb : side) occ |= bb;
    const Square king = mover == PieceKind::King ? m.to : pos.king_square(us);
    return attackers(rules, b, occ, king, them) == 0;
  }

  void emit(Square from, Square to, MoveFlag flag, PieceKind mover, std::optional<PieceKind> promo = {}) {
    Move m{from, to, promo, flag};
    if (safe_after(m, mover)) out.push_back(m);
  }

  void pawn_moves() {
    const VariantConfig& cfg = rules.config();
    const int push = pawn_push(g, us);
    const Bitboard empty = ~pos.occupied() & g.board_mask();
    const Bitboard enemies = pos.pieces(them);
    for (Bitboard pawns = pos.pieces(us, PieceKind::Pawn); pawns;) {
      const Square from = pop_lsb(pawns);
      auto add = [&](Square to, MoveFlag flag) {
        if (g.rank_of(to) == last_rank(g, us)) {
          for (PieceKind k : cfg.allowed_promotions) emit(from, to, flag, PieceKind::Pawn, k);
        } else {
          emit(from, to, flag, PieceKind::Pawn);
        }
      };
      const Square one = from + push;
      if (one >= 0 && one < g.squares() && (empty & square_bb(one))) {
        add(one, MoveFlag::Quiet);
        const Square two = one + push;
        if (cfg.pawn_double_step && g.rank_of(from) == double_step_rank(g, us) && two >= 0 &&
            two < g.squares() && g.rank_of(two) != last_rank(g, us) && (empty & square_bb(two))) {
          emit(from, two, MoveFlag::DoublePush, PieceKind::Pawn);
        }
      }
      for (Bitboard caps = t.pawn(us, from) & enemies; caps;) add(pop_lsb(caps), MoveFlag::Capture);
      if (pos.en_passant() && (t.pawn(us, from) & square_bb(*pos.en_passant()))) {
        emit(from, *pos.en_passant(), MoveFlag::EnPassant, PieceKind::Pawn);
      }
    }
  }

  void piece_moves(PieceKind kind) {
    const Bitboard own = pos.pieces(us);
    const Bitboard enemies = pos.pieces(them);
    const Bitboard occ = pos.occupied();
    for (Bitboard bb = pos.pieces(us, kind); bb;) {
      const Square from = pop_lsb(bb);
      Bitboard targets = 0;
      switch (kind) {
        case PieceKind::Knight: targets = t.knight(from); break;
        case PieceKind::Bishop: targets = t.bishop(from, occ); break;
        case PieceKind::Rook: targets = t.rook(from, occ); break;
        case PieceKind::Queen: targets = t.rook(from, occ) | t.bishop(from, occ); break;
        case PieceKind::King: targets = t.king(from); break;
        case PieceKind::Pawn: break;
      }
      for (targets &= ~own; targets;) {
        const Square to = pop_lsb(targets);
        emit(from, to, (enemies & square_bb(to)) ? MoveFlag::Capture : MoveFlag::Quiet, kind);
      }
    }
  }

  void castling_moves() {
    const std::uint8_t rights = pos.castling_rights();
    if (!rights) return;
    const Square king = pos.king_square(us);
    for (bool king_side : {true, false}) {
      if (!(rights & right_bit(us, king_side))) continue;
      auto c = castle_squares(g, king, us, king_side);
      if (!c || !(pos.pieces(us, PieceKind::Rook) & square_bb(c->rook_from))) continue;
      const int lo = std::min({c->king_from, c->king_to, c->rook_from, c->rook_to});
      const int hi = std::max({c->king_from, c->king_to, c->rook_from, c->rook_to});
      Bitboard span = 0;
      for (int s = lo; s <= hi; ++s) span |= square_bb(s);
      span &= ~(square_bb(c->king_from) | square_bb(c->rook_from));
      if (span & pos.occupied()) continue;
      // Every square the king stands on or crosses must be unattacked.
      const Bitboard occ_without_king = pos.occupied() & ~square_bb(c->king_from);
      const int step = c->king_to > c->king_from ? 1 : -1;
      bool safe = true;
      for (Square s = c->king_from;; s += step) {
        Bitboard occ = s == c->king_from ? pos.occupied() : occ_without_king;
        if (attackers(rules, boards, occ, s, them)) {
          safe = false;
          break;
        }
        if (s == c->king_to) break;
      }
      if (!safe) continue;
      PieceBoards after = boards;
      auto& mine = after[index_of(us)];
      mine[index_of(PieceKind::King)] ^= square_bb(c->king_from) | square_bb(c->king_to);
      mine[index_of(PieceKind::Rook)] ^= square_bb(c->rook_from) | square_bb(c->rook_to);
      Bitboard occ_after = 0;
      for (const auto& side : after)
        for (Bitboard bb : side) occ_after |= bb;
      if (attackers(rules, after, occ_after, c->king_to, them)) continue;
      Move m{c->king_from, c->king_to, std::nullopt, king_side ? MoveFlag::CastleKing : MoveFlag::CastleQueen};
      out.push_back(m);
    }
  }
};

}  // namespace

std::vector<Move> legal_moves(const Position& p) {
  std::vector<Move> moves;
  moves.reserve(48);
  Generator gen(p, moves);
  gen.pawn_moves();
  for (PieceKind k : {PieceKind::Knight, PieceKind::Bishop, PieceKind::Rook, PieceKind::Queen, PieceKind::King})
    gen.piece_moves(k);
  gen.castling_moves();
  std::sort(moves.begin(), moves.end(), move_order_less);
  return moves;
}

Position apply_move(const Position& p, const Move& m) {
  const auto moves = legal_moves(p);
  if (std::find(moves.begin(), moves.end(), m) == moves.end()) {
    throw Error(ErrorCode::IllegalMove, move_to_string(p.geometry(), m) + " in " + serialize_fen(p));
  }
  return apply_move_unchecked(p, m);
}

Position apply_move_unchecked(const Position& p, const Move& m) {
  Position n = p;
  const Geometry& g = p.geometry();
  const ZobristKeys& keys = p.rules().keys();
  const Side us = p.side_to_move_;
  const Side them = ~us;
  const int u = index_of(us), t = index_of(them);

  PieceKind mover = PieceKind::Pawn;
  for (PieceKind k : kAllPieceKinds)
    if (p.pieces_[u][index_of(k)] & square_bb(m.from)) mover = k;

  bool irreversible = mover == PieceKind::Pawn;

  auto toggle = [&](int side, PieceKind kind, Square s) {
    n.pieces_[side][index_of(kind)] ^= square_bb(s);
    n.occupancy_[side] ^= square_bb(s);
    n.hash_ ^= keys.piece[side][index_of(kind)][s];
  };

  // Captures.
  if (m.flag == MoveFlag::EnPassant) {
    toggle(t, PieceKind::Pawn, m.to - pawn_push(g, us));
    irreversible = true;
  } else if (p.occupancy_[t] & square_bb(m.to)) {
    for (PieceKind k : kAllPieceKinds)
      if (p.pieces_[t][index_of(k)] & square_bb(m.to)) toggle(t, k, m.to);
    irreversible = true;
  }

  toggle(u, mover, m.from);
  toggle(u, m.promotion.value_or(mover), m.to);

  if (m.is_castle()) {
    auto c = castle_squares(g, m.from, us, m.flag == MoveFlag::CastleKing);
    toggle(u, PieceKind::Rook, c->rook_from);
    toggle(u, PieceKind::Rook, c->rook_to);
  }

  // Rights.
  std::uint8_t rights = p.castling_;
  if (rights) {
    if (mover == PieceKind::King) rights &= ~(right_bit(us, true) | right_bit(us, false));
    for (Side s : {Side::White, Side::Black}) {
      for (bool ks : {true, false}) {
        const Square corner = rook_corner(g, s, ks);
        if (m.from == corner || m.to == corner) rights &= ~right_bit(s, ks);
      }
    }
  }
  n.hash_ ^= keys.castling[p.castling_] ^ keys.castling[rights];
  n.castling_ = rights;

  if (p.en_passant_) n.hash_ ^= keys.en_passant_file[g.file_of(*p.en_passant_)];
  n.en_passant_.reset();
  if (m.flag == MoveFlag::DoublePush && p.rules().config().en_passant) {
    const Square skipped = m.from + pawn_push(g, us);
    if (p.rules().attacks().pawn(us, skipped) & n.pieces_[t][index_of(PieceKind::Pawn)]) {
      n.en_passant_ = skipped;
      n.hash_ ^= keys.en_passant_file[g.file_of(skipped)];
    }
  }

  n.halfmove_clock_ = irreversible ? 0 : p.halfmove_clock_ + 1;
  if (us == Side::Black) ++n.fullmove_number_;
  n.side_to_move_ = them;
  n.hash_ ^= keys.side;

  if (irreversible) n.repetition_stack_.clear();
  n.repetition_stack_.push_back(n.hash_);
  return n;
}

GameOutcome game_outcome(const Position& p) { return game_outcome(p, legal_moves(p)); }

GameOutcome game_outcome(const Position& p, const std::vector<Move>& legal) {
  const Side stm = p.side_to_move();
  if (legal.empty()) {
    return is_in_check(p, stm) ? GameOutcome::win(~stm) : GameOutcome::draw(DrawReason::Stalemate);
  }
  const Bitboard kings = p.pieces(Side::White, PieceKind::King) | p.pieces(Side::Black, PieceKind::King);
  if (p.occupied() == kings) return GameOutcome::draw(DrawReason::InsufficientMaterial);
  if (p.repetition_count() >= p.rules().config().repetition_limit) return GameOutcome::draw(DrawReason::Repetition);
  if (p.halfmove_clock() >= p.rules().config().halfmove_limit) return GameOutcome::draw(DrawReason::HalfmoveLimit);
  return GameOutcome::ongoing();
}

// ---------------------------------------------------------------------------
// FEN

std::string serialize_fen(const Position& p) {
  const Geometry& g = p.geometry();
  std::string out;
  for (int rank = g.height - 1; rank >= 0; --rank) {
    int empty = 0;
    for (int file = 0; file < g.width; ++file) {
      auto piece = p.piece_at(g.square(file, rank));
      if (!piece) {
        ++empty;
        continue;
      }
      if (empty) out += static_cast<char>('0' + empty);
      empty = 0;
      out += piece_char(piece->first, piece->second);
    }
    if (empty) out += static_cast<char>('0' + empty);
    if (rank) out += '/';
  }
  out += p.side_to_move() == Side::White ? " w " : " b ";
  const std::uint8_t r = p.castling_rights();
  std::string castling;
  if (r & kWhiteKingSide) castling += 'K';
  if (r & kWhiteQueenSide) castling += 'Q';
  if (r & kBlackKingSide) castling += 'k';
  if (r & kBlackQueenSide) castling += 'q';
  out += castling.empty() ? "-" : castling;
  out += ' ';
  out += p.en_passant() ? g.square_name(*p.en_passant()) : "-";
  out += ' ' + std::to_string(p.halfmove_clock()) + ' ' + std::to_string(p.fullmove_number());
  return out;
}

Position parse_fen(std::string_view text, const RulesPtr& rules) {
  const Geometry& g = rules->geometry();
  const VariantConfig& cfg = rules->config();
  std::vector<std::string> fields;
  {
    std::istringstream is{std::string(text)};
    for (std::string f; is >> f;) fields.push_back(f);
  }
  if (fields.size() < 4 || fields.size() > 6) fen_error("expected 4 to 6 fields in '" + std::string(text) + "'");

  Position p;
  p.rules_ = rules;

  // Placement.
  int rank = g.height - 1, file = 0;
  for (char c : fields[0]) {
    if (c == '/') {
      if (file != g.width) fen_error("rank " + std::to_string(rank + 1) + " has wrong width");
      if (--rank < 0) fen_error("too many ranks");
      file = 0;
    } else if (c >= '1' && c <= '9') {
      file += c - '0';
      if (file > g.width) fen_error("rank " + std::to_string(rank + 1) + " overflows the board");
    } else {
      auto piece = parse_piece_char(c);
      if (!piece) fen_error(std::string("bad piece letter '") + c + "'");
      if (file >= g.width) fen_error("piece outside the board on rank " + std::to_string(rank + 1));
      p.put(piece->first, piece->second, g.square(file, rank));
      ++file;
    }
  }
  if (rank != 0 || file != g.width) fen_error("placement does not cover the " + std::to_string(g.width) + "x" +
                                              std::to_string(g.height) + " board");

  for (Side s : {Side::White, Side::Black}) {
    if (popcount(p.pieces(s, PieceKind::King)) != 1) {
      fen_error(std::string(s == Side::White ? "white" : "black") + " must have exactly one king");
    }
  }
  const Bitboard pawns = p.pieces(Side::White, PieceKind::Pawn) | p.pieces(Side::Black, PieceKind::Pawn);
  if (pawns & (g.rank_mask(0) | g.rank_mask(g.height - 1))) fen_error("pawn on the first or last rank");

  if (fields[1] == "w") p.side_to_move_ = Side::White;
  else if (fields[1] == "b") p.side_to_move_ = Side::Black;
  else fen_error("side to move must be 'w' or 'b'");

  // Castling rights.
  if (fields[2] != "-") {
    for (char c : fields[2]) {
      Side s = std::isupper(static_cast<unsigned char>(c)) ? Side::White : Side::Black;
      char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (lower != 'k' && lower != 'q') fen_error(std::string("bad castling letter '") + c + "'");
      const bool king_side = lower == 'k';
      if (!cfg.castling_enabled[index_of(s)]) fen_error("castling is disabled in this variant");
      auto cs = castle_squares(g, p.king_square(s), s, king_side);
      if (!cs || !(p.pieces(s, PieceKind::Rook) & square_bb(cs->rook_from))) {
        fen_error(std::string("castling right '") + c + "' without king and rook in place");
      }
      p.castling_ |= right_bit(s, king_side);
    }
  }

  // En passant target, kept only when a capture onto it is possible.
  if (fields[3] != "-") {
    auto ep = g.parse_square(fields[3]);
    if (!ep) fen_error("bad en passant square '" + fields[3] + "'");
    const Side us = p.side_to_move_;
    const Square pawn_sq = *ep - pawn_push(g, us);
    const int expected_rank = us == Side::White ? g.height - 3 : 2;
    if (!cfg.en_passant || g.rank_of(*ep) != expected_rank || (p.occupied() & square_bb(*ep)) ||
        !(p.pieces(~us, PieceKind::Pawn) & square_bb(pawn_sq))) {
      fen_error("inconsistent en passant square '" + fields[3] + "'");
    }
    if (rules->attacks().pawn(~us, *ep) & p.pieces(us, PieceKind::Pawn)) p.en_passant_ = *ep;
  }

  auto parse_int = [](const std::string& s, const char* what) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v < 0) fen_error(std::string("bad ") + what);
    return v;
  };
  if (fields.size() > 4) p.halfmove_clock_ = parse_int(fields[4], "halfmove clock");
  if (fields.size() > 5) p.fullmove_number_ = parse_int(fields[5], "fullmove number");
  if (p.fullmove_number_ < 1) fen_error("fullmove number must be >= 1");

  if (is_in_check(p, ~p.side_to_move_)) fen_error("side not to move is in check");

  p.reset_history();
  return p;
}

Position mirror(const Position& p) {
  const Geometry& g = p.geometry();
  Position m;
  m.rules_ = p.rules_;
  for (Side s : {Side::White, Side::Black}) {
    for (PieceKind k : kAllPieceKinds) {
      for (Bitboard b = p.pieces(s, k); b;) {
        const Square sq = pop_lsb(b);
        m.put(~s, k, g.square(g.file_of(sq), g.height - 1 - g.rank_of(sq)));
      }
    }
  }
  m.side_to_move_ = ~p.side_to_move_;
  const std::uint8_t r = p.castling_;
  m.castling_ = static_cast<std::uint8_t>(((r & 3) << 2) | ((r >> 2) & 3));
  if (p.en_passant_) m.en_passant_ = g.square(g.file_of(*p.en_passant_), g.height - 1 - g.rank_of(*p.en_passant_));
  m.halfmove_clock_ = p.halfmove_clock_;
  m.fullmove_number_ = p.fullmove_number_;
  m.reset_history();
  return m;
}

std::optional<Move> parse_move(const Position& p, std::string_view text) {
  for (const Move& m : legal_moves(p))
    if (move_to_string(p.geometry(), m) == text) return m;
  return std::nullopt;
}

}  // namespace mchess
