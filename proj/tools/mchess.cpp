// Command-line entry point: perft, train, play, gen-concepts, probe, report.
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "mchess/concepts.hpp"
#include "mchess/errors.hpp"
#include "mchess/io.hpp"
#include "mchess/kernels.hpp"
#include "mchess/perft.hpp"
#include "mchess/probe.hpp"
#include "mchess/seed.hpp"
#include "mchess/selfplay.hpp"

using namespace mchess;

namespace {

constexpr int kUsage = 2;
constexpr int kRuntime = 1;

struct Common {
  std::uint64_t seed = 1;
  int threads = 0;
};

// Effective configuration, one "# key = value" line each.
void print_config(const std::vector<std::pair<std::string, std::string>>& entries) {
  std::cout << "# effective config\n";
  for (const auto& [k, v] : entries) std::cout << "# " << k << " = " << v << "\n";
}

std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

void apply_threads(int threads) {
  if (threads > 0) kernels::set_threads(threads);
}

std::vector<Checkpoint> load_lineage(const std::string& dir) {
  const auto entries = list_checkpoints(dir);
  if (entries.empty()) throw Error(ErrorCode::InvalidConfig, "no checkpoints in " + dir);
  std::vector<Checkpoint> out;
  for (const auto& [it, path] : entries) out.push_back(load_checkpoint(path));
  return out;
}

// ---------------------------------------------------------------------------

struct PerftArgs {
  std::string variant = "standard8x8";
  int depth = 3;
  int max_depth = 7;
  std::string backend = "magic";
  bool serial = false;
};

int cmd_perft(const PerftArgs& a, const Common& c) {
  if (a.depth < 0 || a.depth > a.max_depth) {
    throw Error(ErrorCode::InvalidConfig, "depth must be in [0, " + std::to_string(a.max_depth) + "]");
  }
  if (a.backend != "magic" && a.backend != "rays") throw Error(ErrorCode::InvalidConfig, "backend must be magic or rays");
  apply_threads(c.threads);
  const VariantConfig cfg = load_variant(a.variant);
  print_config({{"command", "perft"},
                {"variant", a.variant},
                {"depth", std::to_string(a.depth)},
                {"backend", a.backend},
                {"serial", a.serial ? "true" : "false"},
                {"threads", std::to_string(c.threads > 0 ? c.threads : kernels::max_threads())}});
  const Position start =
      Position::initial(Rules::make(cfg, a.backend == "magic" ? AttackBackend::Magic : AttackBackend::RayScan));
  for (int d = a.depth == 0 ? 0 : 1; d <= a.depth; ++d) {
    const std::uint64_t n = a.serial ? perft(start, d) : perft_parallel(start, d);
    std::cout << "depth " << d << ": " << n << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  bool resume = false;
  bool seed_set = false;
};

int cmd_train(const TrainArgs& a, const Common& c) {
  std::string text;
  try {
    text = read_file(a.config);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.detail());
  }
  RunConfig cfg = parse_run_config(text);
  if (a.seed_set) cfg.seed = c.seed;
  cfg.threads = c.threads;
  apply_threads(c.threads);

  std::cout << "# effective config\n";
  std::istringstream lines(serialize_run_config(cfg));
  for (std::string line; std::getline(lines, line);) std::cout << "# " << line << "\n";
  std::cout << "# threads = " << (c.threads > 0 ? c.threads : kernels::max_threads()) << "\n";
  std::cout << "# resume = " << (a.resume ? "true" : "false") << "\n";
  std::cout << "# run_directory = " << run_directory(cfg) << "\n" << std::flush;

  const int ran = run_training(cfg, a.resume, [](const IterationStats& s) {
    std::cout << "iteration=" << s.iteration << " games=" << s.games << " white_wins=" << s.white_wins
              << " black_wins=" << s.black_wins << " draws=" << s.draws << " mean_plies=" << fmt(s.mean_plies, 2)
              << " buffer=" << s.buffer_size << " loss_policy=" << fmt(s.mean_loss.policy)
              << " loss_value=" << fmt(s.mean_loss.value) << " loss_decay=" << fmt(s.mean_loss.decay)
              << " checkpoint=" << (s.checkpoint_written ? "yes" : "no") << "\n"
              << std::flush;
  });
  std::cout << "iterations_run=" << ran << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct PlayArgs {
  std::string variant;
  std::string white = "random";
  std::string black = "random";
  int games = 1;
  int simulations = 64;
  int move_cap = 200;
  bool trace = false;
};

int cmd_play(const PlayArgs& a, const Common& c) {
  apply_threads(c.threads);
  std::optional<Checkpoint> ckpts[2];
  const std::string* specs[2] = {&a.white, &a.black};
  std::optional<VariantConfig> variant;
  if (!a.variant.empty()) variant = load_variant(a.variant);
  for (int s = 0; s < 2; ++s) {
    if (*specs[s] == "random") continue;
    ckpts[s] = load_checkpoint(*specs[s]);
    if (variant && !(*variant == ckpts[s]->variant)) {
      throw Error(ErrorCode::SpecMismatch, *specs[s] + " was trained on " + ckpts[s]->variant.name);
    }
    variant = ckpts[s]->variant;
  }
  if (!variant) variant = load_variant("silverman4x5");
  if (a.games < 1) throw Error(ErrorCode::InvalidConfig, "games must be >= 1");

  SearchParams sp;
  sp.simulations = a.simulations;
  sp.root_noise = false;
  validate_search_params(sp);
  print_config({{"command", "play"},
                {"variant", variant->name},
                {"white", a.white},
                {"black", a.black},
                {"games", std::to_string(a.games)},
                {"simulations", std::to_string(a.simulations)},
                {"move_cap", std::to_string(a.move_cap)},
                {"seed", std::to_string(c.seed)},
                {"threads", std::to_string(c.threads > 0 ? c.threads : kernels::max_threads())}});

  std::optional<NetworkEvaluator> evals[2];
  for (int s = 0; s < 2; ++s)
    if (ckpts[s]) evals[s].emplace(ckpts[s]->net, *variant);
  const Position start = Position::initial(Rules::make(*variant));
  int score[3] = {0, 0, 0};  // white wins, black wins, draws
  for (int g = 0; g < a.games; ++g) {
    const std::uint64_t game_seed = derive_seed(c.seed, "play", static_cast<std::uint64_t>(g));
    Position p = start;
    std::vector<std::string> moves;
    GameOutcome outcome;
    for (int ply = 0;; ++ply) {
      const auto legal = legal_moves(p);
      outcome = game_outcome(p, legal);
      if (!outcome.is_ongoing()) break;
      if (ply >= a.move_cap) {
        outcome = GameOutcome::draw(DrawReason::MoveCap);
        break;
      }
      const int side = p.side_to_move() == Side::White ? 0 : 1;
      const std::uint64_t move_seed = derive_seed(game_seed, static_cast<std::uint64_t>(ply));
      Move m;
      if (evals[side]) {
        const SearchResult r = search(p, *evals[side], sp, move_seed);
        const std::size_t pick = select_move_index(r, 0, move_seed);
        m = r.moves[pick];
        if (a.trace) {
          std::cout << "{\"game\":" << g << ",\"ply\":" << ply << ",\"move\":\"" << move_to_string(p.geometry(), m)
                    << "\",\"visits\":" << r.visits[pick] << ",\"root_value\":" << fmt(r.root_value)
                    << ",\"nodes\":" << r.nodes << "}\n";
        }
      } else {
        m = RandomPlayer().choose(p, legal, move_seed);
      }
      moves.push_back(move_to_string(p.geometry(), m));
      p = apply_move_unchecked(p, m);
    }
    std::cout << "game " << g + 1 << ": ";
    for (std::size_t i = 0; i < moves.size(); ++i) {
      if (i % 2 == 0) std::cout << (i / 2 + 1) << ". ";
      std::cout << moves[i] << " ";
    }
    std::cout << "{" << outcome_to_string(outcome) << "}\n";
    std::cout << "final: " << serialize_fen(p) << "\n";
    ++score[outcome.white_score() > 0 ? 0 : outcome.white_score() < 0 ? 1 : 2];
  }
  std::cout << "white_wins=" << score[0] << " black_wins=" << score[1] << " draws=" << score[2] << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string lineage;
  std::string concept_name;
  int target = 5000;
  std::string out;
  int simulations = 16;
  double sample_fraction = 0.1;
  double validation_fraction = 0.2;
  double temperature = 1.0;
  int max_games = 20000;
  int move_cap = 200;
  std::string mate_perspective = "mover";
  std::string material_mode = "value";
  int material_threshold = 0;
};

int cmd_gen_concepts(const GenArgs& a, const Common& c) {
  if (a.mate_perspective != "mover" && a.mate_perspective != "opponent") {
    throw Error(ErrorCode::InvalidConfig, "--mate-perspective must be mover or opponent");
  }
  if (a.material_mode != "value" && a.material_mode != "count") {
    throw Error(ErrorCode::InvalidConfig, "--material-mode must be value or count");
  }
  ConceptOptions options;
  options.mate_threat_opponent = a.mate_perspective == "opponent";
  options.material_piece_count = a.material_mode == "count";
  options.material_threshold = a.material_threshold;
  const Concept concept_def = make_concept(a.concept_name, options);
  apply_threads(c.threads);
  const std::vector<Checkpoint> lineage = load_lineage(a.lineage);

  DatasetConfig dc;
  dc.target_per_class = a.target;
  dc.sample_fraction = a.sample_fraction;
  dc.validation_fraction = a.validation_fraction;
  dc.search.simulations = a.simulations;
  dc.temperature = a.temperature;
  dc.move_cap = a.move_cap;
  dc.max_games = a.max_games;
  dc.seed = c.seed;
  print_config({{"command", "gen-concepts"},
                {"lineage", a.lineage},
                {"checkpoints", std::to_string(lineage.size())},
                {"concept", a.concept_name},
                {"concept_options", describe_concept_options(a.concept_name, options)},
                {"target_per_class", std::to_string(a.target)},
                {"sample_fraction", fmt(a.sample_fraction, 4)},
                {"validation_fraction", fmt(a.validation_fraction, 4)},
                {"simulations", std::to_string(a.simulations)},
                {"temperature", fmt(a.temperature, 4)},
                {"noise_fraction", fmt(dc.search.noise_fraction, 4)},
                {"max_games", std::to_string(a.max_games)},
                {"games_per_batch", std::to_string(dc.games_per_batch)},
                {"move_cap", std::to_string(a.move_cap)},
                {"seed", std::to_string(c.seed)},
                {"threads", std::to_string(c.threads > 0 ? c.threads : kernels::max_threads())},
                {"out", a.out}});
  const ConceptDataset d = generate_dataset(concept_def, lineage, dc, [](const DatasetProgress& p) {
    std::cout << "games=" << p.games << " positives=" << p.positives << " negatives=" << p.negatives << "\n"
              << std::flush;
  });
  save_dataset(d, a.out);
  std::cout << "wrote " << d.samples.size() << " records to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ProbeArgs {
  std::string lineage;
  std::string dataset;
  std::string out;
  bool random_label = false;
  double lambda = 0.01;
  int max_epochs = 2000;
};

int cmd_probe(const ProbeArgs& a, const Common& c) {
  apply_threads(c.threads);
  ConceptDataset d = load_dataset(a.dataset);
  const std::vector<Checkpoint> lineage = load_lineage(a.lineage);
  if (a.random_label) d = random_label_control(d, derive_seed(c.seed, "random-labels"));
  const std::string problem = check_dataset_invariants(d, lineage.front().variant, 0.2);
  if (!problem.empty() && !a.random_label) std::cerr << "warning: dataset " << problem << "\n";
  ProbeConfig pc;
  pc.lambda = a.lambda;
  pc.max_epochs = a.max_epochs;
  print_config({{"command", "probe"},
                {"lineage", a.lineage},
                {"checkpoints", std::to_string(lineage.size())},
                {"dataset", a.dataset},
                {"concept", d.concept_name},
                {"records", std::to_string(d.samples.size())},
                {"random_label", a.random_label ? "true" : "false"},
                {"lambda", fmt(pc.lambda, 6)},
                {"max_epochs", std::to_string(pc.max_epochs)},
                {"tolerance", fmt(pc.tolerance, 9)},
                {"seed", std::to_string(c.seed)},
                {"threads", std::to_string(c.threads > 0 ? c.threads : kernels::max_threads())},
                {"out", a.out}});
  const auto rows = probe_lineage(lineage, d, pc);
  write_file_atomic(a.out, format_probe_csv(rows));
  for (const auto& r : rows) {
    std::cout << "iteration=" << r.iteration << " layer=" << r.layer << " corrected_accuracy=" << fmt(r.corrected_accuracy)
              << " nonzero_weights=" << r.nonzero_weights << "\n";
  }
  std::cout << "wrote " << rows.size() << " rows to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> csvs;
  std::string out = "report";
};

int cmd_report(const ReportArgs& a, const Common&) {
  std::vector<ProbeResult> all;
  for (const auto& path : a.csvs) {
    std::string text;
    try {
      text = read_file(path);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, e.detail());
    }
    try {
      auto rows = parse_probe_csv(text);
      all.insert(all.end(), rows.begin(), rows.end());
    } catch (const Error& e) {
      throw Error(e.code(), path + ": " + e.detail());
    }
  }
  print_config({{"command", "report"}, {"inputs", std::to_string(a.csvs.size())}, {"out", a.out}});
  for (const auto& f : write_report(all, a.out).files) std::cout << "wrote " << f << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minichess self-play training and concept probing"};
  app.require_subcommand(1);
  Common common;
  bool seed_set = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Run seed; every component derives its own stream from it")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--threads", common.threads, "Worker thread cap (0: OpenMP default)")->check(CLI::NonNegativeNumber);
  };

  PerftArgs perft_args;
  auto* perft_cmd = app.add_subcommand("perft", "Count leaf nodes of the legal move tree");
  perft_cmd->add_option("--variant", perft_args.variant, "Preset name or variant file");
  perft_cmd->add_option("--depth", perft_args.depth, "Depth");
  perft_cmd->add_option("--max-depth", perft_args.max_depth, "Largest accepted depth");
  perft_cmd->add_option("--backend", perft_args.backend, "magic or rays");
  perft_cmd->add_flag("--serial", perft_args.serial, "Single-threaded reference count");
  add_common(perft_cmd);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Self-play training loop");
  train_cmd->add_option("--config", train_args.config, "Run config file")->required();
  train_cmd->add_flag("--resume", train_args.resume, "Continue after the newest checkpoint");
  add_common(train_cmd);

  PlayArgs play_args;
  auto* play_cmd = app.add_subcommand("play", "Print game transcripts between checkpoints or random players");
  play_cmd->add_option("--variant", play_args.variant, "Variant when both players are random");
  play_cmd->add_option("--white", play_args.white, "Checkpoint path or 'random'");
  play_cmd->add_option("--black", play_args.black, "Checkpoint path or 'random'");
  play_cmd->add_option("--games", play_args.games, "Number of games");
  play_cmd->add_option("--simulations", play_args.simulations, "Search simulations per move");
  play_cmd->add_option("--move-cap", play_args.move_cap, "Plies before a game is drawn");
  play_cmd->add_flag("--trace", play_args.trace, "Stream per-move search statistics as JSON lines");
  add_common(play_cmd);

  GenArgs gen_args;
  auto* gen_cmd = app.add_subcommand("gen-concepts", "Generate a balanced concept dataset from a lineage");
  gen_cmd->add_option("--lineage", gen_args.lineage, "Run directory with ckpt-<iter> files")->required();
  gen_cmd->add_option("--concept", gen_args.concept_name, "has_mate_threat, in_check, material_advantage or threat_opp_queen")
      ->required();
  gen_cmd->add_option("--target", gen_args.target, "Samples per class");
  gen_cmd->add_option("--out", gen_args.out, "Dataset file")->required();
  gen_cmd->add_option("--simulations", gen_args.simulations, "Search simulations per move");
  gen_cmd->add_option("--sample-fraction", gen_args.sample_fraction, "Share of each game's positions kept");
  gen_cmd->add_option("--validation-fraction", gen_args.validation_fraction, "Validation share per class");
  gen_cmd->add_option("--temperature", gen_args.temperature, "Move selection temperature");
  gen_cmd->add_option("--max-games", gen_args.max_games, "Game budget before giving up");
  gen_cmd->add_option("--move-cap", gen_args.move_cap, "Plies before a game is drawn");
  gen_cmd->add_option("--mate-perspective", gen_args.mate_perspective, "mover or opponent");
  gen_cmd->add_option("--material-mode", gen_args.material_mode, "value or count");
  gen_cmd->add_option("--material-threshold", gen_args.material_threshold, "0: 3 for value, 1 for count");
  add_common(gen_cmd);

  ProbeArgs probe_args;
  auto* probe_cmd = app.add_subcommand("probe", "Fit concept probes at every checkpoint and layer");
  probe_cmd->add_option("--lineage", probe_args.lineage, "Run directory")->required();
  probe_cmd->add_option("--dataset", probe_args.dataset, "Concept dataset file")->required();
  probe_cmd->add_option("--out", probe_args.out, "Output CSV")->required();
  probe_cmd->add_flag("--random-label", probe_args.random_label, "Replace labels by balanced coin flips (control)");
  probe_cmd->add_option("--lambda", probe_args.lambda, "L1 penalty");
  probe_cmd->add_option("--max-epochs", probe_args.max_epochs, "Optimizer epoch cap");
  add_common(probe_cmd);

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Curve CSVs and SVG plots from probe CSVs");
  report_cmd->add_option("csv", report_args.csvs, "Probe CSV files")->required();
  report_cmd->add_option("--out", report_args.out, "Output directory");
  add_common(report_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  train_args.seed_set = seed_set;

  try {
    if (*perft_cmd) return cmd_perft(perft_args, common);
    if (*train_cmd) return cmd_train(train_args, common);
    if (*play_cmd) return cmd_play(play_args, common);
    if (*gen_cmd) return cmd_gen_concepts(gen_args, common);
    if (*probe_cmd) return cmd_probe(probe_args, common);
    if (*report_cmd) return cmd_report(report_args, common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_usage_error() ? kUsage : kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
