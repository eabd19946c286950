#include "mchess/mcts.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

#include "mchess/errors.hpp"

namespace mchess {

namespace {

struct Node;

struct Edge {
  Move move;
  double prior = 0;
  std::atomic<int> visits{0};
  std::atomic<double> value_sum{0};  // from the perspective of the node's mover
  std::atomic<int> pending{0};       // descents in flight (virtual losses)
  std::unique_ptr<Node> child;       // guarded by the owning node's mutex
};

struct Node {
  explicit Node(Position p) : position(std::move(p)) {}

  Position position;
  std::mutex mu;
  std::atomic<bool> expanded{false};
  bool terminal = false;
  double terminal_value = 0;  // mover's perspective
  std::unique_ptr<Edge[]> edges;
  int edge_count = 0;
};

void atomic_add(std::atomic<double>& a, double v) {
  double cur = a.load(std::memory_order_relaxed);
  while (!a.compare_exchange_weak(cur, cur + v, std::memory_order_relaxed)) {
  }
}

// Fills edges (or marks terminal). Caller holds node.mu. Returns the leaf
// value for the node's mover.
double expand(Node& node, const Evaluator& evaluator) {
  std::vector<Move> legal = legal_moves(node.position);
  const GameOutcome outcome = game_outcome(node.position, legal);
  if (!outcome.is_ongoing()) {
    node.terminal = true;
    node.terminal_value = outcome.kind == OutcomeKind::Win ? (outcome.winner == node.position.side_to_move() ? 1 : -1) : 0;
    node.expanded.store(true, std::memory_order_release);
    return node.terminal_value;
  }
  Evaluation ev = evaluator.evaluate(node.position, legal);
  node.edge_count = static_cast<int>(legal.size());
  node.edges = std::make_unique<Edge[]>(legal.size());
  for (std::size_t i = 0; i < legal.size(); ++i) {
    node.edges[i].move = legal[i];
    node.edges[i].prior = ev.priors[i];
  }
  node.expanded.store(true, std::memory_order_release);
  return ev.value;
}

class Tree {
 public:
  Tree(const Position& root, const Evaluator& evaluator, const SearchParams& params)
      : root_(std::make_unique<Node>(root)), evaluator_(evaluator), params_(params) {}

  Node& root() { return *root_; }

  void simulate() {
    std::vector<Edge*> path;
    Node* node = root_.get();
    double value = 0;  // for the mover at `node`
    for (;;) {
      if (!node->expanded.load(std::memory_order_acquire)) {
        std::lock_guard<std::mutex> lock(node->mu);
        if (!node->expanded.load(std::memory_order_relaxed)) {
          value = expand(*node, evaluator_);
          break;
        }
      }
      if (node->terminal) {
        value = node->terminal_value;
        break;
      }
      Edge& e = select(*node);
      e.pending.fetch_add(1, std::memory_order_relaxed);
      path.push_back(&e);
      node = child_of(*node, e);
    }
    // Each edge is scored for the mover at its parent, one ply up.
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      value = -value;
      atomic_add((*it)->value_sum, value);
      (*it)->visits.fetch_add(1, std::memory_order_relaxed);
      (*it)->pending.fetch_sub(1, std::memory_order_relaxed);
    }
  }

 private:
  Edge& select(Node& node) {
    const double vl = params_.virtual_loss;
    double total = 0;
    for (int i = 0; i < node.edge_count; ++i) {
      const Edge& e = node.edges[i];
      total += e.visits.load(std::memory_order_relaxed) + vl * e.pending.load(std::memory_order_relaxed);
    }
    const double sqrt_total = std::sqrt(std::max(1.0, total));
    int best = 0;
    double best_score = -INFINITY;
    for (int i = 0; i < node.edge_count; ++i) {
      const Edge& e = node.edges[i];
      const double pending = vl * e.pending.load(std::memory_order_relaxed);
      const double n = e.visits.load(std::memory_order_relaxed) + pending;
      const double w = e.value_sum.load(std::memory_order_relaxed) - pending;
      const double q = n > 0 ? w / n : 0.0;
      const double score = q + params_.c_puct * e.prior * sqrt_total / (1 + n);
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    return node.edges[best];
  }

  Node* child_of(Node& node, Edge& e) {
    std::lock_guard<std::mutex> lock(node.mu);
    if (!e.child) e.child = std::make_unique<Node>(apply_move_unchecked(node.position, e.move));
    return e.child.get();
  }

  std::unique_ptr<Node> root_;
  const Evaluator& evaluator_;
  const SearchParams& params_;
};

void collect(const Node& node, double& residual, int& nodes) {
  ++nodes;
  for (int i = 0; i < node.edge_count; ++i) {
    residual += std::abs(static_cast<double>(node.edges[i].pending.load()));
    if (node.edges[i].child) collect(*node.edges[i].child, residual, nodes);
  }
}

}  // namespace

void validate_search_params(const SearchParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidConfig, std::string("search: ") + what);
  };
  require(p.simulations >= 1, "simulations must be >= 1");
  require(p.noise_fraction >= 0 && p.noise_fraction <= 1, "noise_fraction must be in [0,1]");
  require(p.virtual_loss > 0, "virtual_loss must be > 0");
  require(p.threads >= 1, "threads must be >= 1");
  require(p.c_puct >= 0, "c_puct must be >= 0");
}

Evaluation NetworkEvaluator::evaluate(const Position& p, const std::vector<Move>& legal) const {
  const Trace<float> t = net_.forward(encode_position(p));
  Evaluation ev;
  ev.priors = masked_softmax(t.policy_logits, encoder_.legal_indices(p, legal));
  ev.value = t.value;
  return ev;
}

Evaluation UniformEvaluator::evaluate(const Position&, const std::vector<Move>& legal) const {
  Evaluation ev;
  ev.priors.assign(legal.size(), legal.empty() ? 0.0 : 1.0 / static_cast<double>(legal.size()));
  return ev;
}

std::vector<double> add_root_noise(const std::vector<double>& priors, double alpha, double fraction,
                                   std::uint64_t seed) {
  if (fraction == 0 || priors.empty()) return priors;
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> noise(priors.size());
  double sum = 0;
  for (double& x : noise) sum += (x = gamma(rng));
  if (!(sum > 0)) {
    // Every draw underflowed (tiny alpha); fall back to a uniform Dirichlet mean.
    std::fill(noise.begin(), noise.end(), 1.0);
    sum = static_cast<double>(noise.size());
  }
  std::vector<double> out(priors.size());
  double total = 0;
  for (std::size_t i = 0; i < priors.size(); ++i) total += (out[i] = (1 - fraction) * priors[i] + fraction * noise[i] / sum);
  for (double& x : out) x /= total;
  return out;
}

SearchResult search(const Position& root, const Evaluator& evaluator, const SearchParams& params,
                    std::uint64_t seed) {
  validate_search_params(params);
  Tree tree(root, evaluator, params);
  Node& r = tree.root();
  {
    std::lock_guard<std::mutex> lock(r.mu);
    expand(r, evaluator);
  }
  if (r.terminal) throw Error(ErrorCode::InvalidConfig, "search root is not an ongoing position");
  if (params.root_noise && params.noise_fraction > 0) {
    std::vector<double> priors(r.edge_count);
    for (int i = 0; i < r.edge_count; ++i) priors[i] = r.edges[i].prior;
    const double alpha = params.dirichlet_alpha > 0 ? params.dirichlet_alpha : 10.0 / r.edge_count;
    priors = add_root_noise(priors, alpha, params.noise_fraction, seed);
    for (int i = 0; i < r.edge_count; ++i) r.edges[i].prior = priors[i];
  }

  std::atomic<int> started{0};
  auto worker = [&] {
    while (started.fetch_add(1, std::memory_order_relaxed) < params.simulations) tree.simulate();
  };
  if (params.threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 1; t < params.threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
  }

  SearchResult out;
  MoveEncoder encoder(root.rules().config());
  double w_total = 0;
  for (int i = 0; i < r.edge_count; ++i) {
    const Edge& e = r.edges[i];
    out.moves.push_back(e.move);
    out.policy_indices.push_back(encoder.move_to_index(e.move, root));
    out.visits.push_back(e.visits.load());
    out.root_visit_total += out.visits.back();
    w_total += e.value_sum.load();
  }
  for (int v : out.visits) out.visit_distribution.push_back(static_cast<double>(v) / out.root_visit_total);
  out.root_value = out.root_visit_total > 0 ? w_total / out.root_visit_total : 0.0;
  collect(r, out.residual_virtual_loss, out.nodes);

  for (const Node* n = &r; n && n->edge_count > 0;) {
    int best = -1;
    for (int i = 0; i < n->edge_count; ++i) {
      const int v = n->edges[i].visits.load();
      if (v > 0 && (best < 0 || v > n->edges[best].visits.load())) best = i;
    }
    if (best < 0) break;
    out.principal_variation.push_back(n->edges[best].move);
    n = n->edges[best].child.get();
  }
  return out;
}

std::size_t select_move_index(const SearchResult& result, double temperature, std::uint64_t seed) {
  if (result.moves.empty()) throw Error(ErrorCode::InvalidConfig, "no moves to select from");
  if (temperature <= 0) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.moves.size(); ++i) {
      if (result.visits[i] > result.visits[best] ||
          (result.visits[i] == result.visits[best] && result.policy_indices[i] < result.policy_indices[best])) {
        best = i;
      }
    }
    return best;
  }
  int max_visits = 0;
  for (int v : result.visits) max_visits = std::max(max_visits, v);
  std::vector<double> weights(result.visits.size(), 0.0);
  double sum = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (result.visits[i] > 0) {
      weights[i] = std::exp((std::log(result.visits[i]) - std::log(max_visits)) / temperature);
    }
    sum += weights[i];
  }
  std::mt19937_64 rng(seed);
  const double u = std::uniform_real_distribution<double>(0, sum)(rng);
  double acc = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc && weights[i] > 0) return i;
  }
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0) return i;
  return 0;
}

Move select_move(const SearchResult& result, double temperature, std::uint64_t seed) {
  return result.moves[select_move_index(result, temperature, seed)];
}

}  // namespace mchess
