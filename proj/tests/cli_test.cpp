#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "mchess/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "mchess_cli_tests";
  fs::create_directories(dir);
  return dir;
}

Run cli(const std::string& args) {
  const fs::path log = scratch() / "out.log";
  const std::string cmd = "cd '" + scratch().string() + "' && '" MCHESS_CLI_PATH "' " + args + " > '" +
                          log.string() + "' 2>&1";
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = mchess::read_file(log.string());
  return r;
}

std::string last_line(const std::string& s) {
  const auto end = s.find_last_not_of('\n');
  const auto start = s.rfind('\n', end);
  return s.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("perft output and errors") {
    Run r = cli("perft --variant standard8x8 --depth 3");
    CHECK(r.status == 0);
    CHECK(r.out.rfind("# effective config", 0) == 0);
    CHECK(last_line(r.out) == "depth 3: 8902");
    CHECK(last_line(cli("perft --variant silverman4x5 --depth 0").out) == "depth 0: 1");
    CHECK(last_line(cli("perft --variant losalamos6x6 --depth 2 --backend rays --serial").out) == "depth 2: 100");
    CHECK(cli("perft --variant nosuch --depth 1").status == 2);
    CHECK(cli("perft --depth 9").status == 2);
    CHECK(cli("perft --depth x").status == 2);
    CHECK(cli("").status == 2);
  }

  TEST_CASE("train, play, gen-concepts, probe, report") {
    fs::remove_all(scratch() / "runs");
    mchess::write_file_atomic((scratch() / "t.cfg").string(),
                              "name = t\nvariant = silverman4x5\nblocks = 1\nfilters = 4\nvalue_hidden = 8\n"
                              "iterations = 2\ngames_per_iteration = 2\nsimulations = 8\nsteps_per_iteration = 2\n"
                              "batch_size = 8\nmove_cap = 40\nout_dir = runs\n");
    CHECK(cli("train --config missing.cfg").status == 2);
    Run t = cli("train --config t.cfg --threads 1");
    CHECK(t.status == 0);
    CHECK(t.out.find("# seed = 1") != std::string::npos);
    CHECK(t.out.find("iteration=2 ") != std::string::npos);
    CHECK(cli("train --config t.cfg").status == 2);
    CHECK(last_line(cli("train --config t.cfg --resume").out) == "iterations_run=0");

    Run p = cli("play --white runs/t/ckpt-2 --black random --games 2 --simulations 4 --trace");
    CHECK(p.status == 0);
    CHECK(p.out.find("{\"game\":0,\"ply\":0,") != std::string::npos);
    CHECK(p.out.find("game 2: ") != std::string::npos);
    CHECK(cli("play --white runs/t/ckpt-2 --variant losalamos6x6").status == 2);
    CHECK(cli("play --white runs/t/nothing").status == 1);

    Run bad = cli("gen-concepts --lineage runs/t --concept nonsense --out d.txt");
    CHECK(bad.status == 2);
    CHECK(bad.out.find("material_advantage") != std::string::npos);
    CHECK(cli("gen-concepts --lineage runs/t --concept in_check --target 20 --simulations 2 --out d.txt").status == 0);
    CHECK(cli("gen-concepts --lineage runs/t --concept in_check --target 100000 --max-games 32 --simulations 2 "
              "--out never.txt")
              .status == 1);
    CHECK_FALSE(fs::exists(scratch() / "never.txt"));

    CHECK(cli("probe --lineage runs/t --dataset d.txt --out p.csv").status == 0);
    CHECK(cli("probe --lineage runs/t --dataset d.txt --out r.csv --random-label").status == 0);
    const std::string csv = mchess::read_file((scratch() / "p.csv").string());
    CHECK(csv.rfind("concept,iteration,layer,corrected_accuracy,nonzero_weights,train_loss\n", 0) == 0);

    fs::remove_all(scratch() / "rep");
    CHECK(cli("report --out rep p.csv").status == 0);
    CHECK(fs::exists(scratch() / "rep" / "in_check.svg"));
    CHECK(fs::exists(scratch() / "rep" / "summary.csv"));
    mchess::write_file_atomic((scratch() / "empty.csv").string(), "");
    CHECK(cli("report --out rep empty.csv").status == 2);
    CHECK(cli("report --out rep no_such.csv").status == 2);
  }
}
