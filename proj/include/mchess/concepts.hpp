#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mchess/checkpoint.hpp"
#include "mchess/mcts.hpp"
#include "mchess/position.hpp"

namespace mchess {

// ---------------------------------------------------------------------------
// Labels. All are relative to the side to move.

// 1 iff the side to move has a mating move. With opponent_perspective, 1 iff
// the opponent would have one were it their turn (0 when the side to move is
// in check, since passing is then impossible).
int label_has_mate_threat(const Position& p, bool opponent_perspective = false);
int label_in_check(const Position& p);
// Valued material (P1 N3 B3 R5 Q9) or, with piece_count, non-king piece counts:
// 1 iff own minus opponent's >= threshold.
int label_material_advantage(const Position& p, int threshold = 3, bool piece_count = false);
// 1 iff a legal move of the side to move captures an opponent queen.
int label_threat_opp_queen(const Position& p);

struct ConceptOptions {
  bool mate_threat_opponent = false;
  bool material_piece_count = false;
  int material_threshold = 0;  // 0: 3 for valued material, 1 for piece counts

  int resolved_threshold() const { return material_threshold > 0 ? material_threshold : material_piece_count ? 1 : 3; }
};

struct Concept {
  std::string name;
  ConceptOptions options;
  std::function<int(const Position&)> label;
};

const std::vector<std::string>& concept_names();
// Throws UnknownName listing the valid names.
Concept make_concept(const std::string& name, const ConceptOptions& options = {});
// "key=value" list of the options that affect `name`, or "-" when none do.
std::string describe_concept_options(const std::string& name, const ConceptOptions& options);

// ---------------------------------------------------------------------------
// Datasets

struct SampleProvenance {
  std::uint64_t white_iteration = 0;
  std::uint64_t black_iteration = 0;
  std::uint64_t game = 0;
  int ply = 0;
};

struct ConceptSample {
  std::string fen;
  int label = 0;
  bool validation = false;
  SampleProvenance provenance;
};

struct ConceptDataset {
  std::string concept_name;
  std::string options = "-";
  std::string variant;  // variant name
  std::uint64_t split_seed = 0;
  std::vector<ConceptSample> samples;

  std::size_t count(int label) const;
  std::size_t validation_count(int label) const;
};

struct DatasetConfig {
  int target_per_class = 5000;
  double sample_fraction = 0.1;
  double validation_fraction = 0.2;
  SearchParams search;  // root noise on
  double temperature = 1.0;
  int move_cap = 200;
  int max_games = 20000;
  int games_per_batch = 32;  // fixed so output does not depend on thread count
  std::uint64_t seed = 1;
};

struct DatasetProgress {
  int games = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// Plays games between uniformly drawn (white, black) lineage members, keeps
// each non-terminal position with probability sample_fraction, labels,
// deduplicates by hash, stops at target_per_class per class and splits each
// class validation_fraction / rest. Throws ScarceClass past max_games.
ConceptDataset generate_dataset(const Concept& target_concept, const std::vector<Checkpoint>& lineage,
                                const DatasetConfig& config,
                                const std::function<void(const DatasetProgress&)>& on_progress = {});

// Stratified split: a seeded shuffle of each class (split_seed), the first
// round(fraction * n) go to validation.
void assign_validation_split(ConceptDataset& dataset, double fraction);

// Same positions and split, labels drawn at random with exact balance inside
// each split so the classes stay equal in size.
ConceptDataset random_label_control(const ConceptDataset& dataset, std::uint64_t seed);

std::string serialize_dataset(const ConceptDataset& dataset);
// Throws Parse with a line number.
ConceptDataset parse_dataset(const std::string& text);
void save_dataset(const ConceptDataset& dataset, const std::string& path);
ConceptDataset load_dataset(const std::string& path);

// Exact balance, unique hashes, round(fraction * n) validation samples per
// class; returns the first violation or an empty string.
std::string check_dataset_invariants(const ConceptDataset& dataset, const VariantConfig& variant,
                                     double validation_fraction = 0.2);

// Positions parsed back from the dataset. Repetition history is not stored.
std::vector<Position> dataset_positions(const ConceptDataset& dataset, const VariantConfig& variant);

}  // namespace mchess
