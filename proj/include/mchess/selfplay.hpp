#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mchess/checkpoint.hpp"
#include "mchess/mcts.hpp"
#include "mchess/position.hpp"

namespace mchess {

// Piecewise-constant temperature by ply. Text form: "1.0@10,0" means 1.0
// for plies 0..9 and 0 afterwards; the last entry has no bound.
struct TemperatureSchedule {
  std::vector<std::pair<double, int>> steps;  // (temperature, first ply past this step)
  double final_temperature = 0;

  double at(int ply) const;
  static TemperatureSchedule parse(const std::string& text);
  static TemperatureSchedule constant(double t) { return {{}, t}; }
  std::string to_string() const;
};

struct RunConfig {
  std::string name = "run";
  std::string variant_name = "silverman4x5";  // preset name or variant file path
  VariantConfig variant;                       // resolved from variant_name
  NetworkSpec net;
  int iterations = 20;
  int games_per_iteration = 30;
  SearchParams search;
  int replay_capacity = 0;
  int batch_size = 64;
  int steps_per_iteration = 100;
  double lr = 0.02;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  TemperatureSchedule temperature = TemperatureSchedule::parse("1.0@10,0");
  int move_cap = 200;
  int checkpoint_every = 1;
  std::uint64_t seed = 1;
  std::string out_dir = "runs";

  // Not persisted: affects speed only when search.threads == 1.
  int threads = 0;  // 0: OpenMP default
};

// Unset keys take defaults that depend on the variant (network spec, budget,
// replay capacity). Throws InvalidConfig / Parse.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
// Every field with defaults resolved; parse_run_config round-trips it.
std::string serialize_run_config(const RunConfig& config);
void validate_run_config(const RunConfig& config);

struct GameRecord {
  std::vector<Move> moves;
  // Per ply: (policy index, visit count) for every root move, legal-move order.
  std::vector<std::vector<std::pair<int, int>>> visits;
  GameOutcome outcome;

  // +1 White win, -1 Black win, 0 any draw.
  int z() const { return outcome.white_score(); }
  Side mover(std::size_t ply) const { return ply % 2 == 0 ? start_side : ~start_side; }
  Side start_side = Side::White;
};

// One line: result, outcome, moves, visit lists, tab separated. See docs/formats.md.
std::string format_game_record(const GameRecord& record, const Position& start);
// Throws Parse if a move is illegal or the stored outcome disagrees with replay.
GameRecord parse_game_record(const std::string& line, const Position& start);
// Positions before each move plus the final one.
std::vector<Position> replay_game(const GameRecord& record, const Position& start);

struct GameParams {
  SearchParams search;
  TemperatureSchedule temperature;
  int move_cap = 200;
};

// Plays from `start` with a search per move; white and black may differ.
// Ends at a decided outcome or at move_cap plies (Draw by MoveCap).
GameRecord play_game(const Position& start, const Evaluator& white, const Evaluator& black,
                     const GameParams& params, std::uint64_t seed);
GameRecord play_game(const Network& net, const RunConfig& config, std::uint64_t seed);

// Visit-count targets with z from each mover's perspective.
std::vector<TrainingExample> samples_from_record(const GameRecord& record, const Position& start);

// Fixed-capacity FIFO of training examples.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(TrainingExample example);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const TrainingExample& operator[](std::size_t i) const { return items_[i]; }  // 0 is oldest
  std::uint64_t pushed() const { return pushed_; }

 private:
  std::size_t capacity_;
  std::deque<TrainingExample> items_;
  std::uint64_t pushed_ = 0;
};

struct IterationStats {
  int iteration = 0;
  int games = 0;
  int white_wins = 0;
  int black_wins = 0;
  int draws = 0;
  double mean_plies = 0;
  std::size_t buffer_size = 0;
  LossParts mean_loss;
  bool checkpoint_written = false;
};

std::string checkpoint_name(std::uint64_t iteration);
// (iteration, path), ascending iteration. Missing directory gives an empty list.
std::vector<std::pair<std::uint64_t, std::string>> list_checkpoints(const std::string& run_dir);
std::string run_directory(const RunConfig& config);

// Writes ckpt-0, then per iteration the game file and (every
// checkpoint_every iterations, and at the end) ckpt-<iter> plus optimizer
// state. With resume, continues after the newest checkpoint; a finished run
// is a no-op. Returns the number of iterations run.
int run_training(const RunConfig& config, bool resume,
                 const std::function<void(const IterationStats&)>& on_iteration = {});

class Player {
 public:
  virtual ~Player() = default;
  virtual Move choose(const Position& p, const std::vector<Move>& legal, std::uint64_t seed) const = 0;
};

class RandomPlayer : public Player {
 public:
  Move choose(const Position& p, const std::vector<Move>& legal, std::uint64_t seed) const override;
};

// Search without root noise, most-visited move.
class SearchPlayer : public Player {
 public:
  SearchPlayer(const Network& net, const VariantConfig& variant, SearchParams params);
  Move choose(const Position& p, const std::vector<Move>& legal, std::uint64_t seed) const override;

 private:
  NetworkEvaluator evaluator_;
  SearchParams params_;
};

struct MatchResult {
  int games = 0;
  int wins = 0;  // for player a
  int draws = 0;
  int losses = 0;
  // (wins + draws / 2) / games; 0 when no games were played.
  double score() const { return games == 0 ? 0.0 : (wins + 0.5 * draws) / games; }
};

// Player a takes White in even-numbered games. Games run in parallel.
MatchResult evaluate_match(const Player& a, const Player& b, const Position& start, int games,
                           std::uint64_t seed, int move_cap = 200);

}  // namespace mchess
