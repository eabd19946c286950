#include <algorithm>
#include <numeric>
#include <set>

#include "doctest.h"
#include "mchess/encoding.hpp"
#include "mchess/errors.hpp"
#include "test_support.hpp"

using namespace mchess;

namespace {

float plane_sum(const InputPlanes& x, int channel, int area) {
  return std::accumulate(x.begin() + channel * area, x.begin() + (channel + 1) * area, 0.0f);
}

}  // namespace

TEST_SUITE("encoding") {

TEST_CASE("policy sizes follow the plane formula") {
  // 8 * (max(w,h) - 1) + 8 + 3 * underpromotion kinds, times the board area.
  CHECK(MoveEncoder(parse_variant("silverman4x5")).planes_per_square() == 8 * 4 + 8 + 3 * 3);
  CHECK(MoveEncoder(parse_variant("silverman4x5")).policy_size() == 980);
  CHECK(MoveEncoder(parse_variant("losalamos6x6")).planes_per_square() == 8 * 5 + 8 + 3 * 2);
  CHECK(MoveEncoder(parse_variant("losalamos6x6")).policy_size() == 1944);
  CHECK(MoveEncoder(parse_variant("standard8x8")).policy_size() == 4672);
}

TEST_CASE("initial planes") {
  Position p = testing::initial("losalamos6x6");
  InputPlanes x = encode_position(p);
  const int area = 36;
  REQUIRE(x.size() == static_cast<std::size_t>(plane::kCount * area));
  const float* own_pawns = &x[(plane::kOwnPieces + index_of(PieceKind::Pawn)) * area];
  for (int s = 0; s < area; ++s) CHECK(own_pawns[s] == (s / 6 == 1 ? 1.0f : 0.0f));
  for (Side side : {Side::White, Side::Black}) {
    for (PieceKind k : kAllPieceKinds) {
      const int base = side == Side::White ? plane::kOwnPieces : plane::kOpponentPieces;
      CHECK(plane_sum(x, base + index_of(k), area) == static_cast<float>(popcount(p.pieces(side, k))));
    }
  }
  CHECK(plane_sum(x, plane::kBlackToMove, area) == 0.0f);
  CHECK(plane_sum(x, plane::kRepetitions, area) == 0.0f);
}

TEST_CASE("clock and rights planes") {
  Position p = testing::fen("standard8x8", "r3k2r/8/8/8/8/8/8/R3K2R b Kq - 50 40");
  InputPlanes x = encode_position(p);
  const int area = 64;
  for (int s = 0; s < area; ++s) {
    CHECK(x[plane::kHalfmoveClock * area + s] == doctest::Approx(0.5));
    CHECK(x[plane::kBlackToMove * area + s] == 1.0f);
    CHECK(x[plane::kOwnKingSide * area + s] == 0.0f);
    CHECK(x[plane::kOwnQueenSide * area + s] == 1.0f);
    CHECK(x[plane::kOpponentKingSide * area + s] == 1.0f);
    CHECK(x[plane::kOpponentQueenSide * area + s] == 0.0f);
  }
  // Black's king sits on its own back rank, which is relative rank 0.
  CHECK(x[(plane::kOwnPieces + index_of(PieceKind::King)) * area + 4] == 1.0f);
}

TEST_CASE("flip consistency with mirror") {
  for (const auto& name : builtin_variant_names()) {
    testing::random_playouts(testing::initial(name), 2000, 3, [&](const Position&, const Move&, const Position& c) {
      // mirror() starts a fresh repetition history, so that plane is left out.
      const int area = c.geometry().squares();
      InputPlanes a = encode_position(c);
      InputPlanes b = toggle_side_plane(encode_position(mirror(c)), c.geometry());
      std::fill(a.begin() + plane::kRepetitions * area, a.end(), 0.0f);
      std::fill(b.begin() + plane::kRepetitions * area, b.end(), 0.0f);
      if (a != b) FAIL_CHECK(name << " " << serialize_fen(c));
    });
  }
}

TEST_CASE("hand-computed indices") {
  Position sm = testing::fen("silverman4x5", "3k/1P2/4/4/K3 w - - 0 1");
  MoveEncoder enc45(sm.rules().config());
  auto knight = parse_move(sm, "b4b5n");
  REQUIRE(knight);
  // Underpromotion block starts at plane 8*4+8 = 40; knight first, straight push is offset 1.
  CHECK(enc45.move_to_index(*knight, sm) == 41 * 20 + 13);
  auto queen = parse_move(sm, "b4b5q");
  REQUIRE(queen);
  CHECK(enc45.move_to_index(*queen, sm) == 0 * 20 + 13);  // north, distance 1

  Position la = testing::initial("losalamos6x6");
  MoveEncoder enc66(la.rules().config());
  auto jump = parse_move(la, "b1a3");
  REQUIRE(jump);
  const int index = enc66.move_to_index(*jump, la);
  CHECK(index / 36 >= 40);
  CHECK(index / 36 < 48);
  CHECK(index == 47 * 36 + 1);
}

TEST_CASE("black moves share the white layout") {
  Position p = testing::fen("losalamos6x6", "rnqknr/pppppp/6/6/PPPPPP/RNQKNR b - - 0 1");
  MoveEncoder enc(p.rules().config());
  auto m = parse_move(p, "b6a4");
  REQUIRE(m);
  // Relative to Black, b6 is b1 and a4 is a3.
  CHECK(enc.move_to_index(*m, p) == 47 * 36 + 1);
}

TEST_CASE("bijection over random positions") {
  for (const auto& name : builtin_variant_names()) {
    MoveEncoder enc(parse_variant(name));
    int moves_checked = 0;
    testing::random_playouts(testing::initial(name), 10000, 8, [&](const Position&, const Move&, const Position& c) {
      auto legal = legal_moves(c);
      std::set<int> seen;
      for (const Move& m : legal) {
        const int i = enc.move_to_index(m, c);
        if (i < 0 || i >= enc.policy_size() || !seen.insert(i).second) FAIL_CHECK("collision");
        if (!(enc.index_to_move(i, c) == m)) FAIL_CHECK(name << " " << move_to_string(c.geometry(), m));
        ++moves_checked;
      }
      auto mask = enc.policy_mask(c);
      if (std::count(mask.begin(), mask.end(), 1) != static_cast<long>(legal.size())) FAIL_CHECK("mask size");
    });
    CHECK(moves_checked > 10000);
  }
}

TEST_CASE("indices outside the mask never decode to a legal move") {
  Position p = testing::fen("standard8x8", "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1");
  MoveEncoder enc(p.rules().config());
  auto mask = enc.policy_mask(p);
  int rejected = 0;
  for (int i = 0; i < enc.policy_size(); ++i) {
    if (mask[i]) {
      CHECK_NOTHROW(enc.index_to_move(i, p));
      continue;
    }
    try {
      enc.index_to_move(i, p);
      FAIL_CHECK("index " << i << " decoded");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotLegalInPosition);
      ++rejected;
    }
  }
  CHECK(rejected == enc.policy_size() - 48);
}

TEST_CASE("policy mask edge cases") {
  Position la = testing::initial("losalamos6x6");
  auto mask = MoveEncoder(la.rules().config()).policy_mask(la);
  CHECK(std::count(mask.begin(), mask.end(), 1) == 10);

  Position mated = testing::fen("standard8x8", "rnb1kbnr/pppp1ppp/8/4p3/6Pq/5P2/PPPPP2P/RNBQKBNR w KQkq - 1 3");
  auto empty = MoveEncoder(mated.rules().config()).policy_mask(mated);
  CHECK(std::count(empty.begin(), empty.end(), 1) == 0);
}

}  // TEST_SUITE
