#include "mchess/selfplay.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include "mchess/errors.hpp"
#include "mchess/io.hpp"
#include "mchess/kernels.hpp"
#include "mchess/keyvalue.hpp"
#include "mchess/seed.hpp"

namespace fs = std::filesystem;

namespace mchess {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

// Desk budgets: small boards train faster.
bool small_board(const VariantConfig& v) { return v.geometry.squares() <= 20; }

const std::vector<std::string> kConfigKeys = {
    "name",          "variant",        "blocks",        "filters",         "residual",
    "value_hidden",  "iterations",     "games_per_iteration", "simulations", "c_puct",
    "dirichlet_alpha", "noise_fraction", "root_noise",  "virtual_loss",    "search_threads",
    "replay_capacity", "batch_size",   "steps_per_iteration", "lr",        "momentum",
    "weight_decay",  "temperature_schedule", "move_cap", "checkpoint_every", "seed",
    "out_dir",
};

const char* result_token(int z) { return z > 0 ? "1-0" : z < 0 ? "0-1" : "1/2-1/2"; }

GameOutcome parse_outcome(const std::string& s) {
  if (s == "white-wins") return GameOutcome::win(Side::White);
  if (s == "black-wins") return GameOutcome::win(Side::Black);
  if (s == "draw-stalemate") return GameOutcome::draw(DrawReason::Stalemate);
  if (s == "draw-repetition") return GameOutcome::draw(DrawReason::Repetition);
  if (s == "draw-halfmove") return GameOutcome::draw(DrawReason::HalfmoveLimit);
  if (s == "draw-material") return GameOutcome::draw(DrawReason::InsufficientMaterial);
  if (s == "draw-movecap") return GameOutcome::draw(DrawReason::MoveCap);
  throw Error(ErrorCode::Parse, "game record: unknown outcome '" + s + "'");
}

// Optimizer momentum, stored next to the checkpoint it belongs to.
constexpr char kOptimizerMagic[4] = {'M', 'C', 'O', 'P'};

std::string optimizer_name(std::uint64_t iteration) { return "optimizer-" + std::to_string(iteration); }

void save_optimizer(const std::string& path, std::uint64_t iteration, const std::vector<float>& velocity) {
  std::string out(kOptimizerMagic, 4);
  auto put = [&](const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); };
  const std::uint64_t count = velocity.size();
  put(&iteration, 8);
  put(&count, 8);
  put(velocity.data(), velocity.size() * sizeof(float));
  const std::uint32_t crc =
      static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(out.data()), static_cast<uInt>(out.size())));
  put(&crc, 4);
  write_file_atomic(path, out);
}

std::vector<float> load_optimizer(const std::string& path, std::uint64_t iteration, std::size_t count) {
  const std::string bytes = read_file(path);
  const std::size_t expected = 4 + 16 + count * sizeof(float) + 4;
  if (bytes.size() != expected || std::memcmp(bytes.data(), kOptimizerMagic, 4) != 0) {
    throw Error(ErrorCode::CorruptCheckpoint, "bad optimizer state " + path);
  }
  std::uint64_t it = 0, n = 0;
  std::uint32_t crc = 0;
  std::memcpy(&it, bytes.data() + 4, 8);
  std::memcpy(&n, bytes.data() + 12, 8);
  std::memcpy(&crc, bytes.data() + expected - 4, 4);
  const auto actual = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(expected - 4)));
  if (it != iteration || n != count || crc != actual) {
    throw Error(ErrorCode::CorruptCheckpoint, "optimizer state does not match checkpoint: " + path);
  }
  std::vector<float> v(count);
  std::memcpy(v.data(), bytes.data() + 20, count * sizeof(float));
  return v;
}

std::string games_name(int iteration) { return "games-" + std::to_string(iteration) + ".txt"; }

}  // namespace

// ---------------------------------------------------------------------------
// Temperature schedule

double TemperatureSchedule::at(int ply) const {
  for (const auto& [t, until] : steps)
    if (ply < until) return t;
  return final_temperature;
}

TemperatureSchedule TemperatureSchedule::parse(const std::string& text) {
  TemperatureSchedule s;
  const auto parts = split(text, ',');
  int last_bound = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string part = trim(parts[i]);
    const auto at = part.find('@');
    const bool last = i + 1 == parts.size();
    if ((at == std::string::npos) != last) {
      throw Error(ErrorCode::InvalidConfig,
                  "temperature_schedule: every entry but the last needs '@ply' ('" + text + "')");
    }
    try {
      std::size_t used = 0;
      const std::string t_text = part.substr(0, at);
      const double t = std::stod(t_text, &used);
      if (used != t_text.size() || t < 0) throw std::invalid_argument("t");
      if (last) {
        s.final_temperature = t;
      } else {
        const std::string b_text = part.substr(at + 1);
        const int bound = std::stoi(b_text, &used);
        if (used != b_text.size() || bound <= last_bound) throw std::invalid_argument("b");
        s.steps.emplace_back(t, bound);
        last_bound = bound;
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidConfig, "temperature_schedule: cannot parse '" + text + "'");
    }
  }
  return s;
}

std::string TemperatureSchedule::to_string() const {
  std::string out;
  for (const auto& [t, until] : steps) out += format_double(t) + "@" + std::to_string(until) + ",";
  return out + format_double(final_temperature);
}

// ---------------------------------------------------------------------------
// Run config

RunConfig parse_run_config(const std::string& text) {
  const KeyValueDoc doc = KeyValueDoc::parse(text);
  doc.reject_unknown(kConfigKeys);
  RunConfig c;
  c.name = doc.get_string("name", c.name);
  c.variant_name = doc.get_string("variant", c.variant_name);
  c.variant = load_variant(c.variant_name);

  const NetworkSpec def = default_spec(c.variant);
  c.net = def;
  c.net.blocks = static_cast<int>(doc.get_int("blocks", def.blocks));
  c.net.filters = static_cast<int>(doc.get_int("filters", def.filters));
  c.net.residual = doc.get_bool("residual", def.residual);
  c.net.value_hidden = static_cast<int>(doc.get_int("value_hidden", def.value_hidden));

  const bool small = small_board(c.variant);
  c.iterations = static_cast<int>(doc.get_int("iterations", small ? 20 : 40));
  c.games_per_iteration = static_cast<int>(doc.get_int("games_per_iteration", small ? 30 : 60));
  c.search.simulations = static_cast<int>(doc.get_int("simulations", c.search.simulations));
  c.search.c_puct = doc.get_double("c_puct", c.search.c_puct);
  c.search.dirichlet_alpha = doc.get_double("dirichlet_alpha", c.search.dirichlet_alpha);
  c.search.noise_fraction = doc.get_double("noise_fraction", c.search.noise_fraction);
  c.search.root_noise = doc.get_bool("root_noise", c.search.root_noise);
  c.search.virtual_loss = doc.get_double("virtual_loss", c.search.virtual_loss);
  c.search.threads = static_cast<int>(doc.get_int("search_threads", c.search.threads));
  // About ten iterations of positions at roughly 50 plies per game.
  c.replay_capacity = static_cast<int>(doc.get_int("replay_capacity", 10LL * c.games_per_iteration * 50));
  c.batch_size = static_cast<int>(doc.get_int("batch_size", c.batch_size));
  c.steps_per_iteration = static_cast<int>(doc.get_int("steps_per_iteration", c.steps_per_iteration));
  c.lr = doc.get_double("lr", c.lr);
  c.momentum = doc.get_double("momentum", c.momentum);
  c.weight_decay = doc.get_double("weight_decay", c.weight_decay);
  if (doc.has("temperature_schedule")) c.temperature = TemperatureSchedule::parse(doc.get_string("temperature_schedule", ""));
  c.move_cap = static_cast<int>(doc.get_int("move_cap", c.move_cap));
  c.checkpoint_every = static_cast<int>(doc.get_int("checkpoint_every", c.checkpoint_every));
  if (const auto* e = doc.find("seed")) {
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), seed);
    if (ec != std::errc{} || ptr != e->value.data() + e->value.size()) {
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(e->line) + ": seed must be an unsigned integer");
    }
    c.seed = seed;
  }
  c.out_dir = doc.get_string("out_dir", c.out_dir);
  c.net.geometry = c.variant.geometry;
  validate_run_config(c);
  return c;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_file(path)); }

std::string serialize_run_config(const RunConfig& c) {
  std::ostringstream os;
  os << "name = " << c.name << "\n"
     << "variant = " << c.variant_name << "\n"
     << "blocks = " << c.net.blocks << "\n"
     << "filters = " << c.net.filters << "\n"
     << "residual = " << (c.net.residual ? "true" : "false") << "\n"
     << "value_hidden = " << c.net.value_hidden << "\n"
     << "iterations = " << c.iterations << "\n"
     << "games_per_iteration = " << c.games_per_iteration << "\n"
     << "simulations = " << c.search.simulations << "\n"
     << "c_puct = " << format_double(c.search.c_puct) << "\n"
     << "dirichlet_alpha = " << format_double(c.search.dirichlet_alpha) << "\n"
     << "noise_fraction = " << format_double(c.search.noise_fraction) << "\n"
     << "root_noise = " << (c.search.root_noise ? "true" : "false") << "\n"
     << "virtual_loss = " << format_double(c.search.virtual_loss) << "\n"
     << "search_threads = " << c.search.threads << "\n"
     << "replay_capacity = " << c.replay_capacity << "\n"
     << "batch_size = " << c.batch_size << "\n"
     << "steps_per_iteration = " << c.steps_per_iteration << "\n"
     << "lr = " << format_double(c.lr) << "\n"
     << "momentum = " << format_double(c.momentum) << "\n"
     << "weight_decay = " << format_double(c.weight_decay) << "\n"
     << "temperature_schedule = " << c.temperature.to_string() << "\n"
     << "move_cap = " << c.move_cap << "\n"
     << "checkpoint_every = " << c.checkpoint_every << "\n"
     << "seed = " << c.seed << "\n"
     << "out_dir = " << c.out_dir << "\n";
  return os.str();
}

void validate_run_config(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidConfig, "run config: " + what);
  };
  require(!c.name.empty() && c.name.find('/') == std::string::npos, "name must be a plain directory name");
  require(c.iterations >= 1, "iterations must be >= 1");
  require(c.games_per_iteration >= 1, "games_per_iteration must be >= 1");
  require(c.replay_capacity >= 1, "replay_capacity must be >= 1");
  require(c.batch_size >= 1, "batch_size must be >= 1");
  require(c.steps_per_iteration >= 0, "steps_per_iteration must be >= 0");
  require(c.lr > 0, "lr must be > 0");
  require(c.momentum >= 0 && c.momentum < 1, "momentum must be in [0,1)");
  require(c.weight_decay >= 0, "weight_decay must be >= 0");
  require(c.move_cap >= 1, "move_cap must be >= 1");
  require(c.checkpoint_every >= 1, "checkpoint_every must be >= 1");
  validate_search_params(c.search);
  NetworkSpec spec = c.net;
  spec.geometry = c.variant.geometry;
  spec.policy_size = MoveEncoder(c.variant).policy_size();
  validate_spec(spec);
}

// ---------------------------------------------------------------------------
// Game records

std::string format_game_record(const GameRecord& record, const Position& start) {
  std::string out = result_token(record.z());
  out += '\t';
  out += outcome_to_string(record.outcome);
  out += '\t';
  for (std::size_t i = 0; i < record.moves.size(); ++i) {
    if (i) out += ' ';
    out += move_to_string(start.geometry(), record.moves[i]);
  }
  out += '\t';
  for (std::size_t i = 0; i < record.visits.size(); ++i) {
    if (i) out += ' ';
    for (std::size_t j = 0; j < record.visits[i].size(); ++j) {
      if (j) out += ',';
      out += std::to_string(record.visits[i][j].first) + ":" + std::to_string(record.visits[i][j].second);
    }
  }
  return out;
}

std::vector<Position> replay_game(const GameRecord& record, const Position& start) {
  std::vector<Position> out{start};
  out.reserve(record.moves.size() + 1);
  for (const Move& m : record.moves) out.push_back(apply_move(out.back(), m));
  return out;
}

GameRecord parse_game_record(const std::string& line, const Position& start) {
  const auto fields = split(line, '\t');
  if (fields.size() != 4) throw Error(ErrorCode::Parse, "game record: expected 4 tab-separated fields");
  GameRecord r;
  r.start_side = start.side_to_move();
  r.outcome = parse_outcome(fields[1]);
  if (fields[0] != result_token(r.z())) throw Error(ErrorCode::Parse, "game record: result disagrees with outcome");

  Position p = start;
  if (!fields[2].empty()) {
    for (const std::string& text : split(fields[2], ' ')) {
      auto m = parse_move(p, text);
      if (!m) throw Error(ErrorCode::Parse, "game record: illegal move '" + text + "' at ply " + std::to_string(r.moves.size()));
      r.moves.push_back(*m);
      p = apply_move_unchecked(p, *m);
    }
  }
  if (!fields[3].empty()) {
    for (const std::string& ply : split(fields[3], ' ')) {
      std::vector<std::pair<int, int>> v;
      for (const std::string& pair : split(ply, ',')) {
        const auto colon = pair.find(':');
        if (colon == std::string::npos) throw Error(ErrorCode::Parse, "game record: bad visit entry '" + pair + "'");
        try {
          v.emplace_back(std::stoi(pair.substr(0, colon)), std::stoi(pair.substr(colon + 1)));
        } catch (const std::logic_error&) {
          throw Error(ErrorCode::Parse, "game record: bad visit entry '" + pair + "'");
        }
      }
      r.visits.push_back(std::move(v));
    }
  }
  if (!r.visits.empty() && r.visits.size() != r.moves.size()) {
    throw Error(ErrorCode::Parse, "game record: visit lists do not match the move count");
  }
  const GameOutcome final = game_outcome(p);
  const bool consistent = final.is_ongoing() ? r.outcome == GameOutcome::draw(DrawReason::MoveCap) : final == r.outcome;
  if (!consistent) throw Error(ErrorCode::Parse, "game record: outcome disagrees with the replayed position");
  return r;
}

// ---------------------------------------------------------------------------
// Games

GameRecord play_game(const Position& start, const Evaluator& white, const Evaluator& black,
                     const GameParams& params, std::uint64_t seed) {
  GameRecord r;
  r.start_side = start.side_to_move();
  Position p = start;
  for (int ply = 0;; ++ply) {
    std::vector<Move> legal = legal_moves(p);
    const GameOutcome outcome = game_outcome(p, legal);
    if (!outcome.is_ongoing()) {
      r.outcome = outcome;
      break;
    }
    if (ply >= params.move_cap) {
      r.outcome = GameOutcome::draw(DrawReason::MoveCap);
      break;
    }
    const Evaluator& ev = p.side_to_move() == Side::White ? white : black;
    const SearchResult result = search(p, ev, params.search, derive_seed(seed, 2 * static_cast<std::uint64_t>(ply)));
    const std::size_t pick =
        select_move_index(result, params.temperature.at(ply), derive_seed(seed, 2 * static_cast<std::uint64_t>(ply) + 1));
    std::vector<std::pair<int, int>> visits(result.moves.size());
    for (std::size_t i = 0; i < visits.size(); ++i) visits[i] = {result.policy_indices[i], result.visits[i]};
    r.visits.push_back(std::move(visits));
    r.moves.push_back(result.moves[pick]);
    p = apply_move_unchecked(p, result.moves[pick]);
  }
  return r;
}

GameRecord play_game(const Network& net, const RunConfig& config, std::uint64_t seed) {
  const NetworkEvaluator ev(net, config.variant);
  const GameParams params{config.search, config.temperature, config.move_cap};
  return play_game(Position::initial(Rules::make(config.variant)), ev, ev, params, seed);
}

std::vector<TrainingExample> samples_from_record(const GameRecord& record, const Position& start) {
  const std::vector<Position> positions = replay_game(record, start);
  std::vector<TrainingExample> out;
  out.reserve(record.visits.size());
  for (std::size_t ply = 0; ply < record.visits.size(); ++ply) {
    TrainingExample ex;
    ex.planes = encode_position(positions[ply]);
    long total = 0;
    for (const auto& [idx, n] : record.visits[ply]) total += n;
    for (const auto& [idx, n] : record.visits[ply]) {
      ex.legal.push_back(idx);
      ex.target.push_back(static_cast<float>(static_cast<double>(n) / static_cast<double>(total)));
    }
    const int sign = positions[ply].side_to_move() == Side::White ? 1 : -1;
    ex.z = static_cast<float>(record.z() * sign);
    out.push_back(std::move(ex));
  }
  return out;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorCode::InvalidConfig, "replay capacity must be >= 1");
}

void ReplayBuffer::push(TrainingExample example) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(example));
  ++pushed_;
}

// ---------------------------------------------------------------------------
// Training

std::string checkpoint_name(std::uint64_t iteration) { return "ckpt-" + std::to_string(iteration); }

std::string run_directory(const RunConfig& config) { return (fs::path(config.out_dir) / config.name).string(); }

std::vector<std::pair<std::uint64_t, std::string>> list_checkpoints(const std::string& run_dir) {
  std::vector<std::pair<std::uint64_t, std::string>> out;
  std::error_code ec;
  if (!fs::is_directory(run_dir, ec)) return out;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("ckpt-", 0) != 0) continue;
    std::uint64_t it = 0;
    const char* b = name.data() + 5;
    const char* e = name.data() + name.size();
    auto [ptr, err] = std::from_chars(b, e, it);
    if (err != std::errc{} || ptr != e || b == e) continue;
    out.emplace_back(it, entry.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

int run_training(const RunConfig& config, bool resume, const std::function<void(const IterationStats&)>& on_iteration) {
  validate_run_config(config);
  if (config.threads > 0) kernels::set_threads(config.threads);
  const fs::path dir = run_directory(config);
  const std::string config_text = serialize_run_config(config);
  const fs::path config_path = dir / "config.txt";

  auto io_guard = [&](int iteration, const auto& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Io) throw;
      throw Error(ErrorCode::Io, "iteration " + std::to_string(iteration) + ": " + e.detail());
    }
  };

  if (fs::exists(config_path)) {
    if (!resume) throw Error(ErrorCode::InvalidConfig, "run directory " + dir.string() + " already exists; use --resume");
    if (read_file(config_path.string()) != config_text) {
      throw Error(ErrorCode::InvalidConfig, "config differs from the one stored in " + config_path.string());
    }
  } else {
    io_guard(0, [&] {
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
      write_file_atomic((dir / "variant.txt").string(), serialize_variant(config.variant));
      write_file_atomic(config_path.string(), config_text);
    });
  }

  const RulesPtr rules = Rules::make(config.variant);
  const Position start = Position::initial(rules);
  NetworkSpec spec = config.net;
  spec.geometry = config.variant.geometry;
  spec.policy_size = MoveEncoder(config.variant).policy_size();

  Checkpoint ckpt{config.variant, Network(spec), 0, std::nullopt};
  std::vector<float> velocity;
  const auto existing = list_checkpoints(dir.string());
  if (existing.empty()) {
    ckpt.net = Network::initialized(spec, derive_seed(config.seed, "network"));
    io_guard(0, [&] { save_checkpoint(ckpt, (dir / checkpoint_name(0)).string()); });
    velocity.assign(ckpt.net.params().size(), 0.0f);
  } else {
    ckpt = load_checkpoint(existing.back().second, spec);
    if (ckpt.iteration == 0) {
      velocity.assign(ckpt.net.params().size(), 0.0f);
    } else {
      velocity = load_optimizer((dir / optimizer_name(ckpt.iteration)).string(), ckpt.iteration, ckpt.net.params().size());
    }
  }
  const int first = static_cast<int>(ckpt.iteration) + 1;
  if (first > config.iterations) return 0;

  ReplayBuffer buffer(static_cast<std::size_t>(config.replay_capacity));
  for (int it = 1; it < first; ++it) {
    std::istringstream in(read_file((dir / games_name(it)).string()));
    std::string line;
    while (std::getline(in, line)) {
      for (auto& ex : samples_from_record(parse_game_record(line, start), start)) buffer.push(std::move(ex));
    }
  }

  const GameParams game_params{config.search, config.temperature, config.move_cap};
  for (int it = first; it <= config.iterations; ++it) {
    IterationStats stats;
    stats.iteration = it;
    stats.games = config.games_per_iteration;

    std::vector<GameRecord> records(config.games_per_iteration);
    {
      const NetworkEvaluator ev(ckpt.net, config.variant);
      const std::uint64_t iter_seed = derive_seed(config.seed, "selfplay", it);
#pragma omp parallel for schedule(dynamic, 1)
      for (int g = 0; g < config.games_per_iteration; ++g) {
        records[g] = play_game(start, ev, ev, game_params, derive_seed(iter_seed, g));
      }
    }

    std::string games_text;
    long plies = 0;
    for (const GameRecord& r : records) {
      games_text += format_game_record(r, start) + "\n";
      plies += static_cast<long>(r.moves.size());
      if (r.z() > 0) ++stats.white_wins;
      else if (r.z() < 0) ++stats.black_wins;
      else ++stats.draws;
      for (auto& ex : samples_from_record(r, start)) buffer.push(std::move(ex));
    }
    stats.mean_plies = static_cast<double>(plies) / config.games_per_iteration;
    stats.buffer_size = buffer.size();
    io_guard(it, [&] { write_file_atomic((dir / games_name(it)).string(), games_text); });

    std::mt19937_64 rng(derive_seed(config.seed, "train", it));
    std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
    std::vector<float> grad;
    std::vector<const TrainingExample*> batch(config.batch_size);
    for (int step = 0; step < config.steps_per_iteration; ++step) {
      for (auto& b : batch) b = &buffer[pick(rng)];
      const LossParts loss = ckpt.net.train_loss(batch, config.weight_decay, &grad, true);
      sgd_step(ckpt.net.params(), velocity, grad, config.lr, config.momentum);
      stats.mean_loss.policy += loss.policy / config.steps_per_iteration;
      stats.mean_loss.value += loss.value / config.steps_per_iteration;
      stats.mean_loss.decay += loss.decay / config.steps_per_iteration;
    }

    ckpt.iteration = static_cast<std::uint64_t>(it);
    if (it % config.checkpoint_every == 0 || it == config.iterations) {
      io_guard(it, [&] {
        save_optimizer((dir / optimizer_name(ckpt.iteration)).string(), ckpt.iteration, velocity);
        save_checkpoint(ckpt, (dir / checkpoint_name(ckpt.iteration)).string());
        // Only the newest optimizer state is needed for resuming.
        for (const auto& [old, path] : list_checkpoints(dir.string())) {
          if (old < ckpt.iteration) fs::remove(dir / optimizer_name(old));
        }
      });
      stats.checkpoint_written = true;
    }
    if (on_iteration) on_iteration(stats);
  }
  return config.iterations - first + 1;
}

// ---------------------------------------------------------------------------
// Players and matches

Move RandomPlayer::choose(const Position&, const std::vector<Move>& legal, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  return legal[std::uniform_int_distribution<std::size_t>(0, legal.size() - 1)(rng)];
}

SearchPlayer::SearchPlayer(const Network& net, const VariantConfig& variant, SearchParams params)
    : evaluator_(net, variant), params_(params) {
  params_.root_noise = false;
  validate_search_params(params_);
}

Move SearchPlayer::choose(const Position& p, const std::vector<Move>&, std::uint64_t seed) const {
  const SearchResult r = search(p, evaluator_, params_, seed);
  return r.moves[select_move_index(r, 0, seed)];
}

MatchResult evaluate_match(const Player& a, const Player& b, const Position& start, int games, std::uint64_t seed,
                           int move_cap) {
  MatchResult result;
  result.games = std::max(games, 0);
  std::vector<int> scores(result.games, 0);  // +1 a wins, -1 b wins
#pragma omp parallel for schedule(dynamic, 1)
  for (int g = 0; g < result.games; ++g) {
    const bool a_white = g % 2 == 0;
    const std::uint64_t game_seed = derive_seed(seed, "match", static_cast<std::uint64_t>(g));
    Position p = start;
    GameOutcome outcome;
    for (int ply = 0;; ++ply) {
      const std::vector<Move> legal = legal_moves(p);
      outcome = game_outcome(p, legal);
      if (!outcome.is_ongoing()) break;
      if (ply >= move_cap) {
        outcome = GameOutcome::draw(DrawReason::MoveCap);
        break;
      }
      const bool a_to_move = (p.side_to_move() == Side::White) == a_white;
      const Player& mover = a_to_move ? a : b;
      p = apply_move_unchecked(p, mover.choose(p, legal, derive_seed(game_seed, static_cast<std::uint64_t>(ply))));
    }
    scores[g] = outcome.white_score() * (a_white ? 1 : -1);
  }
  for (int s : scores) {
    if (s > 0) ++result.wins;
    else if (s < 0) ++result.losses;
    else ++result.draws;
  }
  return result;
}

}  // namespace mchess
