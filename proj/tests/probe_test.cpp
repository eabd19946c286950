#include <filesystem>

#include "doctest.h"
#include "mchess/errors.hpp"
#include "mchess/io.hpp"
#include "mchess/probe.hpp"
#include "support/probe_fixtures.hpp"

using namespace mchess;
namespace fs = std::filesystem;

namespace {

ProbeProblem one_dimensional(std::size_t n) {
  ProbeProblem p;
  p.dim = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    p.labels.push_back(y);
    p.features.push_back(static_cast<float>(2 * y - 1));
  }
  return p;
}

}  // namespace

TEST_SUITE("probe") {
  TEST_CASE("objective at the origin") {
    auto [train, val] = fixtures::separable_problem(7, 3, 64, 1);
    CHECK(probe_objective(train, std::vector<double>(7, 0.0), 0.0, 0.5) == 0.25);
  }

  TEST_CASE("one-dimensional separable fit") {
    const ProbeProblem p = one_dimensional(40);
    ProbeConfig cfg;
    cfg.lambda = 0;
    const ProbeFit fit = fit_probe(p, cfg);
    CHECK(fit.w[0] > 0);
    CHECK(score_probe(fit.w, fit.b, p) == 1.0);
    for (std::size_t i = 1; i < fit.objective_history.size(); ++i)
      CHECK(fit.objective_history[i] <= fit.objective_history[i - 1]);
  }

  TEST_CASE("large penalty zeroes every weight") {
    auto [train, val] = fixtures::separable_problem(50, 5, 400, 2);
    for (double lambda : {10.0, 100.0}) {
      ProbeConfig cfg;
      cfg.lambda = lambda;
      const ProbeFit fit = fit_probe(train, cfg);
      CHECK(fit.nonzero() == 0);
      CHECK(fit.b == 0.0);
      CHECK(score_probe(fit.w, fit.b, val) == 0.0);
    }
  }

  TEST_CASE("sparse separable data") {
    auto [train, val] = fixtures::separable_problem(100, 10, 2000, 3);
    ProbeConfig dense;
    dense.lambda = 0;
    ProbeConfig sparse;  // default penalty
    CHECK(sparse.lambda == 0.01);
    const ProbeFit a = fit_probe(train, dense);
    const ProbeFit b = fit_probe(train, sparse);
    const double score = score_probe(b.w, b.b, val);
    MESSAGE("nonzero dense " << a.nonzero() << " sparse " << b.nonzero() << " score " << score << " epochs " << b.epochs);
    CHECK(score >= 0.99);
    CHECK(b.nonzero() < a.nonzero());
    for (std::size_t i = 1; i < b.objective_history.size(); ++i)
      CHECK(b.objective_history[i] <= b.objective_history[i - 1]);
  }

  TEST_CASE("score conventions") {
    ProbeProblem p;
    p.dim = 1;
    p.features = {1, -1, 2, -3};
    p.labels = {1, 0, 1, 0};
    CHECK(score_probe({1.0}, 0, p) == 1.0);
    CHECK(score_probe({-1.0}, 0, p) == -1.0);
    CHECK(score_probe({0.0}, 0, p) == 0.0);    // tie predicts class 1
    CHECK(score_probe({0.0}, -1, p) == 0.0);   // constant class 0
    CHECK(score_probe({2.5}, 0.25, p) == score_probe({0.5}, 0.05, p));
    ProbeProblem empty;
    empty.dim = 1;
    CHECK_THROWS_AS(score_probe({1.0}, 0, empty), Error);
    p.features[0] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(fit_probe(p, {}), Error);
  }

  TEST_CASE("rigged checkpoint and random-label control") {
    const VariantConfig cfg = parse_variant("silverman4x5");
    auto positions = fixtures::random_positions(cfg, 3000, 17);
    const ConceptDataset d = fixtures::balanced_dataset(
        "black_to_move", positions, [](const Position& p) { return p.side_to_move() == Side::Black; }, 600, 9);
    const Checkpoint rigged = fixtures::rigged_checkpoint(cfg, plane::kBlackToMove);
    const std::string before = serialize_checkpoint(rigged);
    const auto rows = probe_lineage({rigged}, d, {});
    CHECK(serialize_checkpoint(rigged) == before);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].layer == "conv1");
    CHECK(rows[0].corrected_accuracy >= 0.95);

    const Checkpoint random_net{cfg, Network::initialized(default_spec(cfg), 4), 0, std::nullopt};
    const ConceptDataset control = random_label_control(d, 21);
    for (const auto& r : probe_lineage({random_net}, control, {})) {
      CHECK_MESSAGE(std::abs(r.corrected_accuracy) <= 0.05, r.layer << " " << r.corrected_accuracy);
    }

    ConceptDataset other = d;
    other.variant = "losalamos6x6";
    CHECK_THROWS_AS(probe_lineage({rigged}, other, {}), Error);
  }

  TEST_CASE("csv and report") {
    std::vector<ProbeResult> rows;
    for (const char* concept_name : {"a", "b", "c", "d"}) {
      for (std::uint64_t it : {0u, 10u, 20u}) {
        for (int l = 0; l < 3; ++l) {
          ProbeResult r;
          r.concept_name = concept_name;
          r.iteration = it;
          r.layer_index = l;
          r.layer = "conv" + std::to_string(l + 1);
          r.corrected_accuracy = 0.01 * static_cast<double>(it) + 0.1 * l;
          r.nonzero_weights = 5 + l;
          r.train_loss = 0.2;
          rows.push_back(r);
        }
      }
    }
    const std::string csv = format_probe_csv(rows);
    const auto parsed = parse_probe_csv(csv);
    CHECK(format_probe_csv(parsed) == csv);
    CHECK(parsed[4].layer_index == 1);

    CHECK_THROWS_AS(parse_probe_csv(""), Error);
    CHECK_THROWS_AS(parse_probe_csv("concept,iteration,layer,corrected_accuracy,nonzero_weights,train_loss\n"), Error);
    try {
      parse_probe_csv("concept,iteration,layer,corrected_accuracy,nonzero_weights,train_loss\na,0,conv1,0.5,3,0.1\na,x,conv1,0.5,3,0.1\n");
      FAIL("expected Parse");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }

    const fs::path dir = fs::temp_directory_path() / ("mchess-report-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    const ReportOutput out = write_report(parsed, dir.string());
    int svgs = 0, csvs = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
      svgs += e.path().extension() == ".svg";
      csvs += e.path().extension() == ".csv";
    }
    CHECK(svgs == 4);
    CHECK(csvs == 5);
    CHECK(fs::exists(dir / "summary.csv"));
    const std::string svg = read_file((dir / "a.svg").string());
    CHECK(svg.find("conv1") < svg.find("conv2"));
    CHECK(svg.find("conv2") < svg.find("conv3"));
    CHECK(read_file((dir / "a.csv").string()).rfind("iteration,conv1,conv2,conv3\n", 0) == 0);
    fs::remove_all(dir);
  }
}
