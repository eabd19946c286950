#include "mchess/perft.hpp"

#include <vector>

namespace mchess {

std::uint64_t perft(const Position& p, int depth) {
  if (depth <= 0) return 1;
  const auto moves = legal_moves(p);
  if (depth == 1) return moves.size();
  std::uint64_t nodes = 0;
  for (const Move& m : moves) nodes += perft(apply_move_unchecked(p, m), depth - 1);
  return nodes;
}

std::uint64_t perft_parallel(const Position& p, int depth) {
  if (depth <= 1) return perft(p, depth);
  const auto moves = legal_moves(p);
  const long n = static_cast<long>(moves.size());
  std::vector<std::uint64_t> counts(moves.size(), 0);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) counts[i] = perft(apply_move_unchecked(p, moves[i]), depth - 1);
  std::uint64_t nodes = 0;
  for (auto c : counts) nodes += c;
  return nodes;
}

std::uint64_t perft(const VariantConfig& config, int depth, AttackBackend backend) {
  return perft_parallel(Position::initial(Rules::make(config, backend)), depth);
}

}  // namespace mchess
