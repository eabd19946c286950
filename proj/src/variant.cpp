#include "mchess/variant.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "mchess/errors.hpp"
#include "mchess/keyvalue.hpp"
#include "mchess/position.hpp"

namespace mchess {

namespace {

const std::map<std::string, std::string>& builtin_texts() {
  static const std::map<std::string, std::string> texts = {
      {"silverman4x5",
       "# Silverman 4x5 minichess\n"
       "name = silverman4x5\n"
       "width = 4\n"
       "height = 5\n"
       "start = rqkr/pppp/4/PPPP/RQKR\n"
       "castling_white = false\n"
       "castling_black = false\n"
       "pawn_double_step = false\n"
       "en_passant = false\n"
       "promotions = NBRQ\n"
       "halfmove_limit = 100\n"
       "repetition_limit = 3\n"},
      {"losalamos6x6",
       "# Los Alamos 6x6 chess (no bishops)\n"
       "name = losalamos6x6\n"
       "width = 6\n"
       "height = 6\n"
       "start = rnqknr/pppppp/6/6/PPPPPP/RNQKNR\n"
       "castling_white = false\n"
       "castling_black = false\n"
       "pawn_double_step = false\n"
       "en_passant = false\n"
       "promotions = NRQ\n"
       "halfmove_limit = 100\n"
       "repetition_limit = 3\n"},
      {"standard8x8",
       "# Orthodox chess\n"
       "name = standard8x8\n"
       "width = 8\n"
       "height = 8\n"
       "start = rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR\n"
       "castling_white = true\n"
       "castling_black = true\n"
       "pawn_double_step = true\n"
       "en_passant = true\n"
       "promotions = NBRQ\n"
       "halfmove_limit = 100\n"
       "repetition_limit = 3\n"},
  };
  return texts;
}

const std::vector<std::string> kVariantKeys = {
    "name", "width", "height", "start", "castling_white", "castling_black", "pawn_double_step",
    "en_passant", "promotions", "halfmove_limit", "repetition_limit"};

std::vector<PieceKind> parse_promotions(const std::string& text) {
  std::vector<PieceKind> kinds;
  for (char c : text) {
    if (c == ' ' || c == ',') continue;
    auto piece = parse_piece_char(c);
    if (!piece || piece->second == PieceKind::Pawn || piece->second == PieceKind::King) {
      throw Error(ErrorCode::Parse, std::string("field 'promotions': invalid piece letter '") + c + "'");
    }
    kinds.push_back(piece->second);
  }
  std::sort(kinds.begin(), kinds.end());
  kinds.erase(std::unique(kinds.begin(), kinds.end()), kinds.end());
  if (kinds.empty()) throw Error(ErrorCode::Parse, "field 'promotions': at least one piece required");
  return kinds;
}

}  // namespace

bool VariantConfig::allows_promotion(PieceKind k) const {
  return std::find(allowed_promotions.begin(), allowed_promotions.end(), k) != allowed_promotions.end();
}

const std::vector<std::string>& builtin_variant_names() {
  static const std::vector<std::string> names = {"silverman4x5", "losalamos6x6", "standard8x8"};
  return names;
}

std::string builtin_variant_text(const std::string& name) {
  auto it = builtin_texts().find(name);
  if (it == builtin_texts().end()) throw Error(ErrorCode::UnknownName, "unknown variant '" + name + "'");
  return it->second;
}

VariantConfig parse_variant(std::string_view text) {
  std::string trimmed(text);
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
  trimmed.erase(trimmed.find_last_not_of(" \t\r\n") + 1);
  if (builtin_texts().count(trimmed)) return parse_variant(builtin_texts().at(trimmed));

  KeyValueDoc doc = KeyValueDoc::parse(text);
  doc.reject_unknown(kVariantKeys);

  VariantConfig cfg;
  cfg.name = doc.get_string("name", "custom");
  cfg.geometry.width = static_cast<int>(doc.get_int("width", 8));
  cfg.geometry.height = static_cast<int>(doc.get_int("height", 8));
  validate_geometry(cfg.geometry);
  cfg.starting_array = doc.require_string("start");
  cfg.castling_enabled = {doc.get_bool("castling_white", false), doc.get_bool("castling_black", false)};
  cfg.pawn_double_step = doc.get_bool("pawn_double_step", false);
  cfg.en_passant = doc.get_bool("en_passant", false);
  cfg.allowed_promotions = parse_promotions(doc.get_string("promotions", "NBRQ"));
  cfg.halfmove_limit = static_cast<int>(doc.get_int("halfmove_limit", 100));
  cfg.repetition_limit = static_cast<int>(doc.get_int("repetition_limit", 3));

  if (cfg.en_passant && !cfg.pawn_double_step) {
    throw Error(ErrorCode::Parse, "field 'en_passant': requires pawn_double_step");
  }
  if (cfg.halfmove_limit < 1) throw Error(ErrorCode::Parse, "field 'halfmove_limit': must be positive");
  if (cfg.repetition_limit < 1) throw Error(ErrorCode::Parse, "field 'repetition_limit': must be positive");

  try {
    (void)Position::initial(Rules::make(cfg, AttackBackend::RayScan));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidFen) throw;
    throw Error(ErrorCode::IllegalStartingArray, e.what());
  }
  return cfg;
}

VariantConfig load_variant(const std::string& name_or_path) {
  if (builtin_texts().count(name_or_path)) return parse_variant(name_or_path);
  std::ifstream in(name_or_path);
  if (!in) throw Error(ErrorCode::UnknownName, "no preset or file named '" + name_or_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_variant(ss.str());
}

std::string serialize_variant(const VariantConfig& c) {
  std::ostringstream os;
  os << "name = " << c.name << "\n"
     << "width = " << c.geometry.width << "\n"
     << "height = " << c.geometry.height << "\n"
     << "start = " << c.starting_array << "\n"
     << "castling_white = " << (c.castling_enabled[0] ? "true" : "false") << "\n"
     << "castling_black = " << (c.castling_enabled[1] ? "true" : "false") << "\n"
     << "pawn_double_step = " << (c.pawn_double_step ? "true" : "false") << "\n"
     << "en_passant = " << (c.en_passant ? "true" : "false") << "\n"
     << "promotions = ";
  for (PieceKind k : c.allowed_promotions) os << piece_char(Side::White, k);
  os << "\n"
     << "halfmove_limit = " << c.halfmove_limit << "\n"
     << "repetition_limit = " << c.repetition_limit << "\n";
  return os.str();
}

}  // namespace mchess
