#include "mchess/concepts.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <unordered_set>

#include "mchess/errors.hpp"
#include "mchess/io.hpp"
#include "mchess/keyvalue.hpp"
#include "mchess/seed.hpp"
#include "mchess/selfplay.hpp"

namespace mchess {

namespace {

constexpr int kMaterialValue[kPieceKinds] = {1, 3, 3, 5, 9, 0};

int material(const Position& p, Side side, bool piece_count) {
  int total = 0;
  for (PieceKind k : kAllPieceKinds) {
    if (k == PieceKind::King) continue;
    const int n = popcount(p.pieces(side, k));
    total += piece_count ? n : n * kMaterialValue[index_of(k)];
  }
  return total;
}

// The same placement with the other side to move and no en-passant square.
std::optional<Position> pass_turn(const Position& p) {
  std::istringstream in(serialize_fen(p));
  std::string board, side, castling, ep, half, full;
  in >> board >> side >> castling >> ep >> half >> full;
  const std::string text = board + " " + (side == "w" ? "b" : "w") + " " + castling + " - " + half + " " + full;
  try {
    return parse_fen(text, p.rules_ptr());
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::string format_provenance(const SampleProvenance& p) {
  return "w" + std::to_string(p.white_iteration) + ":b" + std::to_string(p.black_iteration) + ":g" +
         std::to_string(p.game) + ":p" + std::to_string(p.ply);
}

SampleProvenance parse_provenance(const std::string& text, int line) {
  SampleProvenance p;
  unsigned long long w = 0, b = 0, g = 0;
  int ply = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "w%llu:b%llu:g%llu:p%d%c", &w, &b, &g, &ply, &tail) != 4) {
    throw Error(ErrorCode::Parse, "dataset line " + std::to_string(line) + ": bad provenance '" + text + "'");
  }
  p.white_iteration = w;
  p.black_iteration = b;
  p.game = g;
  p.ply = ply;
  return p;
}

std::size_t validation_target(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

// Fisher-Yates with an explicit draw so the order is fixed for a seed.
template <class T>
void shuffle_seeded(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

void assign_validation_split(ConceptDataset& d, double fraction) {
  std::mt19937_64 rng(d.split_seed);
  for (int label : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < d.samples.size(); ++i)
      if (d.samples[i].label == label) idx.push_back(i);
    shuffle_seeded(idx, rng);
    const std::size_t n_val = validation_target(idx.size(), fraction);
    for (std::size_t k = 0; k < idx.size(); ++k) d.samples[idx[k]].validation = k < n_val;
  }
}


// ---------------------------------------------------------------------------
// Labels

int label_has_mate_threat(const Position& p, bool opponent_perspective) {
  if (opponent_perspective) {
    if (is_in_check(p, p.side_to_move())) return 0;
    const auto passed = pass_turn(p);
    return passed ? label_has_mate_threat(*passed, false) : 0;
  }
  for (const Move& m : legal_moves(p)) {
    const Position child = apply_move_unchecked(p, m);
    const GameOutcome o = game_outcome(child);
    if (o.kind == OutcomeKind::Win && o.winner == p.side_to_move()) return 1;
  }
  return 0;
}

int label_in_check(const Position& p) { return is_in_check(p, p.side_to_move()) ? 1 : 0; }

int label_material_advantage(const Position& p, int threshold, bool piece_count) {
  const Side us = p.side_to_move();
  return material(p, us, piece_count) - material(p, ~us, piece_count) >= threshold ? 1 : 0;
}

int label_threat_opp_queen(const Position& p) {
  const Bitboard queens = p.pieces(~p.side_to_move(), PieceKind::Queen);
  if (!queens) return 0;
  for (const Move& m : legal_moves(p))
    if (m.flag == MoveFlag::Capture && (queens >> m.to & 1)) return 1;
  return 0;
}

const std::vector<std::string>& concept_names() {
  static const std::vector<std::string> names = {"has_mate_threat", "in_check", "material_advantage",
                                                 "threat_opp_queen"};
  return names;
}

Concept make_concept(const std::string& name, const ConceptOptions& options) {
  Concept c{name, options, {}};
  if (name == "has_mate_threat") {
    const bool opp = options.mate_threat_opponent;
    c.label = [opp](const Position& p) { return label_has_mate_threat(p, opp); };
  } else if (name == "in_check") {
    c.label = label_in_check;
  } else if (name == "material_advantage") {
    const int threshold = options.resolved_threshold();
    const bool count = options.material_piece_count;
    c.label = [threshold, count](const Position& p) { return label_material_advantage(p, threshold, count); };
  } else if (name == "threat_opp_queen") {
    c.label = label_threat_opp_queen;
  } else {
    std::string valid;
    for (const auto& n : concept_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::UnknownName, "unknown concept '" + name + "' (valid: " + valid + ")");
  }
  return c;
}

std::string describe_concept_options(const std::string& name, const ConceptOptions& o) {
  if (name == "has_mate_threat") return o.mate_threat_opponent ? "perspective=opponent" : "perspective=mover";
  if (name == "material_advantage") {
    return std::string("mode=") + (o.material_piece_count ? "count" : "value") +
           ",threshold=" + std::to_string(o.resolved_threshold());
  }
  return "-";
}

// ---------------------------------------------------------------------------
// Datasets

std::size_t ConceptDataset::count(int label) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [&](const ConceptSample& s) { return s.label == label; }));
}

std::size_t ConceptDataset::validation_count(int label) const {
  return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [&](const ConceptSample& s) {
    return s.label == label && s.validation;
  }));
}

ConceptDataset generate_dataset(const Concept& target_concept, const std::vector<Checkpoint>& lineage,
                                const DatasetConfig& config,
                                const std::function<void(const DatasetProgress&)>& on_progress) {
  if (lineage.size() < 2) throw Error(ErrorCode::InvalidConfig, "dataset generation needs at least 2 checkpoints");
  if (config.target_per_class < 1) throw Error(ErrorCode::InvalidConfig, "target_per_class must be >= 1");
  if (!(config.sample_fraction > 0 && config.sample_fraction <= 1)) {
    throw Error(ErrorCode::InvalidConfig, "sample_fraction must be in (0,1]");
  }
  if (!(config.validation_fraction >= 0 && config.validation_fraction < 1)) {
    throw Error(ErrorCode::InvalidConfig, "validation_fraction must be in [0,1)");
  }
  if (config.games_per_batch < 1 || config.max_games < 1) throw Error(ErrorCode::InvalidConfig, "game budget must be >= 1");
  for (const auto& c : lineage) {
    if (!(c.variant == lineage.front().variant)) throw Error(ErrorCode::SpecMismatch, "lineage mixes variants");
  }
  SearchParams search = config.search;
  search.root_noise = true;
  validate_search_params(search);

  const VariantConfig& variant = lineage.front().variant;
  const RulesPtr rules = Rules::make(variant);
  const Position start = Position::initial(rules);
  std::vector<NetworkEvaluator> evaluators;
  evaluators.reserve(lineage.size());
  for (const auto& c : lineage) evaluators.emplace_back(c.net, variant);
  const GameParams params{search, TemperatureSchedule::constant(config.temperature), config.move_cap};

  struct Candidate {
    std::string fen;
    std::uint64_t hash;
    int label;
    SampleProvenance provenance;
  };

  ConceptDataset out;
  out.concept_name = target_concept.name;
  out.options = describe_concept_options(target_concept.name, target_concept.options);
  out.variant = variant.name;
  out.split_seed = derive_seed(config.seed, "split");

  const std::size_t target = static_cast<std::size_t>(config.target_per_class);
  std::unordered_set<std::uint64_t> seen;
  DatasetProgress progress;
  while (progress.positives < target || progress.negatives < target) {
    if (progress.games >= config.max_games) {
      throw Error(ErrorCode::ScarceClass, "concept " + target_concept.name + ": after " + std::to_string(progress.games) +
                                              " games only " + std::to_string(progress.positives) + " positives and " +
                                              std::to_string(progress.negatives) + " negatives of " +
                                              std::to_string(target) + " each");
    }
    const int batch = std::min(config.games_per_batch, config.max_games - progress.games);
    std::vector<std::vector<Candidate>> found(batch);
#pragma omp parallel for schedule(dynamic, 1)
    for (int k = 0; k < batch; ++k) {
      const std::uint64_t g = static_cast<std::uint64_t>(progress.games + k);
      std::mt19937_64 rng(derive_seed(config.seed, "pair", g));
      const std::size_t wi = rng() % lineage.size();
      const std::size_t bi = rng() % lineage.size();
      const GameRecord record =
          play_game(start, evaluators[wi], evaluators[bi], params, derive_seed(config.seed, "game", g));
      const std::vector<Position> positions = replay_game(record, start);
      std::mt19937_64 pick(derive_seed(config.seed, "sample", g));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (std::size_t ply = 0; ply < record.moves.size(); ++ply) {
        if (u(pick) >= config.sample_fraction) continue;
        const Position& p = positions[ply];
        found[k].push_back({serialize_fen(p), p.hash(), target_concept.label(p),
                            {lineage[wi].iteration, lineage[bi].iteration, g, static_cast<int>(ply)}});
      }
    }
    for (const auto& game : found) {
      for (const Candidate& c : game) {
        std::size_t& have = c.label ? progress.positives : progress.negatives;
        if (have >= target || !seen.insert(c.hash).second) continue;
        ++have;
        out.samples.push_back({c.fen, c.label, false, c.provenance});
      }
    }
    progress.games += batch;
    if (on_progress) on_progress(progress);
  }
  assign_validation_split(out, config.validation_fraction);
  return out;
}

ConceptDataset random_label_control(const ConceptDataset& dataset, std::uint64_t seed) {
  ConceptDataset out = dataset;
  out.concept_name = dataset.concept_name + "_random_labels";
  std::mt19937_64 rng(seed);
  for (bool validation : {false, true}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < out.samples.size(); ++i)
      if (out.samples[i].validation == validation) idx.push_back(i);
    shuffle_seeded(idx, rng);
    for (std::size_t k = 0; k < idx.size(); ++k) out.samples[idx[k]].label = k < idx.size() / 2 ? 1 : 0;
  }
  return out;
}

std::string serialize_dataset(const ConceptDataset& d) {
  std::ostringstream os;
  const std::size_t pos = d.count(1), neg = d.count(0);
  os << "# mchess concept dataset\n"
     << "concept = " << d.concept_name << "\n"
     << "options = " << d.options << "\n"
     << "variant = " << d.variant << "\n"
     << "positives = " << pos << "\n"
     << "negatives = " << neg << "\n"
     << "validation_positives = " << d.validation_count(1) << "\n"
     << "validation_negatives = " << d.validation_count(0) << "\n"
     << "split_seed = " << d.split_seed << "\n"
     << "records = " << d.samples.size() << "\n"
     << "\n";
  for (const auto& s : d.samples) {
    os << s.fen << '\t' << s.label << '\t' << (s.validation ? "validation" : "train") << '\t'
       << format_provenance(s.provenance) << '\n';
  }
  return os.str();
}

ConceptDataset parse_dataset(const std::string& text) {
  const auto split_at = text.find("\n\n");
  if (split_at == std::string::npos) throw Error(ErrorCode::Parse, "dataset: missing blank line after header");
  const KeyValueDoc header = KeyValueDoc::parse(text.substr(0, split_at + 1));
  ConceptDataset d;
  d.concept_name = header.require_string("concept");
  d.options = header.get_string("options", "-");
  d.variant = header.require_string("variant");
  d.split_seed = std::stoull(header.require_string("split_seed"));
  const long long records = header.get_int("records", -1);

  int line_no = static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(split_at) + 2, '\n'));
  std::istringstream in(text.substr(split_at + 2));
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t b = 0;
    for (std::size_t e; (e = line.find('\t', b)) != std::string::npos; b = e + 1) f.push_back(line.substr(b, e - b));
    f.push_back(line.substr(b));
    if (f.size() != 4 || (f[1] != "0" && f[1] != "1") || (f[2] != "train" && f[2] != "validation")) {
      throw Error(ErrorCode::Parse, "dataset line " + std::to_string(line_no) + ": malformed record");
    }
    d.samples.push_back({f[0], f[1] == "1", f[2] == "validation", parse_provenance(f[3], line_no)});
  }
  if (records >= 0 && static_cast<std::size_t>(records) != d.samples.size()) {
    throw Error(ErrorCode::Parse, "dataset: header promises " + std::to_string(records) + " records, found " +
                                      std::to_string(d.samples.size()));
  }
  if (header.get_int("positives", -1) != static_cast<long long>(d.count(1)) ||
      header.get_int("negatives", -1) != static_cast<long long>(d.count(0))) {
    throw Error(ErrorCode::Parse, "dataset: class counts disagree with the header");
  }
  return d;
}

void save_dataset(const ConceptDataset& dataset, const std::string& path) {
  write_file_atomic(path, serialize_dataset(dataset));
}

ConceptDataset load_dataset(const std::string& path) { return parse_dataset(read_file(path)); }

std::vector<Position> dataset_positions(const ConceptDataset& dataset, const VariantConfig& variant) {
  const RulesPtr rules = Rules::make(variant);
  std::vector<Position> out;
  out.reserve(dataset.samples.size());
  for (const auto& s : dataset.samples) out.push_back(parse_fen(s.fen, rules));
  return out;
}

std::string check_dataset_invariants(const ConceptDataset& d, const VariantConfig& variant, double validation_fraction) {
  if (d.count(1) != d.count(0)) return "classes are not balanced";
  std::unordered_set<std::uint64_t> seen;
  for (const Position& p : dataset_positions(d, variant))
    if (!seen.insert(p.hash()).second) return "duplicate position " + serialize_fen(p);
  const std::size_t expected = validation_target(d.count(1), validation_fraction);
  if (d.validation_count(1) != expected || d.validation_count(0) != expected) {
    return "validation split is not " + std::to_string(expected) + " per class";
  }
  return "";
}

}  // namespace mchess
