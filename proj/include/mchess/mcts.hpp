#pragma once

#include <cstdint>
#include <vector>

#include "mchess/encoding.hpp"
#include "mchess/network.hpp"

namespace mchess {

struct SearchParams {
  int simulations = 100;
  double c_puct = 1.5;
  double dirichlet_alpha = 0;  // <= 0: 10 / number of legal root moves
  double noise_fraction = 0.25;
  bool root_noise = true;
  double virtual_loss = 1.0;
  int threads = 1;
};

// Throws InvalidConfig.
void validate_search_params(const SearchParams& params);

// Leaf evaluation: priors aligned with `legal`, value for the side to move.
struct Evaluation {
  std::vector<double> priors;
  double value = 0;
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  // Must be safe to call concurrently.
  virtual Evaluation evaluate(const Position& p, const std::vector<Move>& legal) const = 0;
};

class NetworkEvaluator : public Evaluator {
 public:
  NetworkEvaluator(const Network& net, const VariantConfig& variant) : net_(net), encoder_(variant) {}
  Evaluation evaluate(const Position& p, const std::vector<Move>& legal) const override;

 private:
  const Network& net_;
  MoveEncoder encoder_;
};

// Uniform priors, value 0.
class UniformEvaluator : public Evaluator {
 public:
  Evaluation evaluate(const Position& p, const std::vector<Move>& legal) const override;
};

struct SearchResult {
  std::vector<Move> moves;                 // root legal moves, legal_moves() order
  std::vector<int> policy_indices;         // aligned with moves
  std::vector<int> visits;                 // aligned with moves
  std::vector<double> visit_distribution;  // visits / total
  double root_value = 0;                   // mover's perspective, in [-1, 1]
  std::vector<Move> principal_variation;

  // Post-search diagnostics.
  int root_visit_total = 0;
  double residual_virtual_loss = 0;  // summed over every edge in the tree
  int nodes = 0;
};

// Runs exactly params.simulations simulations from root, which must be
// ongoing. PUCT selection on Q + c * P * sqrt(max(1, sum N)) / (1 + N) with
// virtual loss added to N and subtracted from W during descent; unvisited
// edges use Q = 0. Terminal leaves back up their exact outcome. Ties go to
// the first edge in legal-move order. threads = 1 is deterministic in seed.
SearchResult search(const Position& root, const Evaluator& evaluator, const SearchParams& params,
                    std::uint64_t seed);

// (1 - fraction) * priors + fraction * Dirichlet(alpha), renormalized.
std::vector<double> add_root_noise(const std::vector<double>& priors, double alpha, double fraction,
                                   std::uint64_t seed);

// temperature <= 0: most visits, ties to the lowest policy index. Otherwise
// samples proportional to visits^(1/temperature). Returns a position in
// result.moves.
std::size_t select_move_index(const SearchResult& result, double temperature, std::uint64_t seed);
Move select_move(const SearchResult& result, double temperature, std::uint64_t seed);

}  // namespace mchess
