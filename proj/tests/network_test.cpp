#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "mchess/checkpoint.hpp"
#include "mchess/errors.hpp"
#include "mchess/io.hpp"
#include "mchess/kernels.hpp"
#include "mchess/network.hpp"
#include "support/gradcheck.hpp"
#include "test_support.hpp"

using namespace mchess;

namespace {

NetworkSpec tiny_spec(bool residual) {
  NetworkSpec s;
  s.geometry = {4, 5};
  s.blocks = 2;
  s.filters = 4;
  s.residual = residual;
  s.policy_size = 980;
  s.value_hidden = 8;
  return s;
}

template <class T>
std::vector<T> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(u(rng));
  return v;
}

bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "mchess_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("gemm matches the serial reference bitwise") {
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      const int M = 37, N = 300, K = 53;
      auto A = random_vector<float>(M * K, 1), B = random_vector<float>(K * N, 2);
      std::vector<float> c1(M * N, 0.5f), c2(M * N, 0.5f);
      kernels::gemm(ta, tb, M, N, K, A.data(), B.data(), c1.data(), true);
      kernels::reference::gemm(ta, tb, M, N, K, A.data(), B.data(), c2.data(), true);
      CHECK(bitwise_equal(c1, c2));
    }
  }
}

TEST_CASE("im2col convolution matches the direct reference") {
  const int Cin = 5, Cout = 7, N = 3, H = 5, W = 4;
  auto x = random_vector<float>(Cin * N * H * W, 3);
  auto w = random_vector<float>(Cout * Cin * 9, 4);
  std::vector<float> cols(Cin * 9 * N * H * W), y1(Cout * N * H * W), y2(Cout * N * H * W);
  kernels::conv3x3(x.data(), w.data(), Cin, Cout, N, H, W, cols.data(), y1.data());
  kernels::reference::conv3x3(x.data(), w.data(), Cin, Cout, N, H, W, y2.data());
  for (std::size_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-6));
}

TEST_CASE("col2im is the adjoint of im2col") {
  // <im2col(x), c> == <x, col2im(c)>
  const int C = 3, N = 2, H = 4, W = 6;
  auto x = random_vector<double>(C * N * H * W, 5);
  auto c = random_vector<double>(C * 9 * N * H * W, 6);
  std::vector<double> cols(c.size()), back(x.size());
  kernels::im2col3x3(x.data(), C, N, H, W, cols.data());
  kernels::col2im3x3(c.data(), C, N, H, W, back.data());
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < c.size(); ++i) lhs += cols[i] * c[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * back[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("parameter count from shape arithmetic") {
  const NetworkSpec s = default_spec(parse_variant("silverman4x5"));
  CHECK_FALSE(s.residual);
  CHECK(s.blocks == 3);
  CHECK(s.filters == 32);
  const long hw = 20, f = 32, p = 980, hd = s.value_hidden;
  const long conv = f * 19 * 9 + 2 * f + 2 * (f * f * 9 + 2 * f);
  const long policy = 2 * f + 2 * 2 + p * 2 * hw + p;
  const long value = f + 2 + hd * hw + hd + hd + 1;
  CHECK(static_cast<long>(Network(s).params().size()) == conv + policy + value);

  const NetworkSpec r = default_spec(parse_variant("losalamos6x6"));
  CHECK(r.residual);
  CHECK(r.filters == 64);
  CHECK(r.capture_points() == r.blocks + 1);
}

TEST_CASE("initialization is deterministic and bounded") {
  const NetworkSpec s = default_spec(parse_variant("silverman4x5"));
  Network a = Network::initialized(s, 11), b = Network::initialized(s, 11), c = Network::initialized(s, 12);
  CHECK(bitwise_equal(a.params(), b.params()));
  CHECK_FALSE(bitwise_equal(a.params(), c.params()));
  Position p = testing::initial("silverman4x5");
  Trace<float> t = a.forward(encode_position(p));
  CHECK(t.value >= -1.0f);
  CHECK(t.value <= 1.0f);
  CHECK(t.policy_logits.size() == 980u);
}

TEST_CASE("forward purity, batching and capture") {
  const NetworkSpec s = default_spec(parse_variant("silverman4x5"));
  Network net = Network::initialized(s, 3);
  InputPlanes zero(19 * 20, 0.0f);
  auto t1 = net.forward(zero), t2 = net.forward(zero);
  CHECK(bitwise_equal(t1.policy_logits, t2.policy_logits));
  CHECK(t1.value == t2.value);

  std::vector<InputPlanes> xs;
  testing::random_playouts(testing::initial("silverman4x5"), 6, 2,
                           [&](const Position&, const Move&, const Position& c) { xs.push_back(encode_position(c)); });
  std::vector<const InputPlanes*> ptrs;
  for (const auto& x : xs) ptrs.push_back(&x);
  auto batched = net.forward_batch(ptrs, true);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto single = net.forward(xs[i], false);
    CHECK(bitwise_equal(single.policy_logits, batched[i].policy_logits));
    CHECK(single.value == batched[i].value);
    CHECK(single.activations.empty());
    REQUIRE(batched[i].activations.size() == 3u);
    for (const auto& a : batched[i].activations) CHECK(a.size() == static_cast<std::size_t>(s.activation_size()));
  }
  CHECK_THROWS_AS(net.forward(InputPlanes(10, 0.0f)), Error);
}

TEST_CASE("a residual block with zero kernels is the identity") {
  NetworkSpec s = tiny_spec(true);
  Network net = Network::initialized(s, 9);
  for (const char* name : {"res1.conv1.weight", "res1.conv2.weight"}) {
    const auto& slot = net.slot(name);
    std::fill_n(net.params().begin() + slot.offset, slot.size, 0.0f);
  }
  InputPlanes x(19 * 20);
  std::mt19937 rng(1);
  for (auto& v : x) v = (rng() % 4 == 0) ? 1.0f : 0.0f;
  auto t = net.forward(x, true);
  CHECK(bitwise_equal(t.activations[0], t.activations[1]));
}

TEST_CASE("loss terms") {
  Trace<double> t;
  t.policy_logits.assign(10, 0.0);
  t.value = 0;
  const std::vector<int> legal = {1, 4, 7, 9};
  const std::vector<float> uniform(4, 0.25f);
  LossParts l = example_loss(t, legal, uniform, 1.0f);
  CHECK(l.policy == doctest::Approx(std::log(4.0)));
  CHECK(l.value == doctest::Approx(1.0));
  t.value = 0.5;
  CHECK(example_loss(t, legal, uniform, 0.5f).value == 0.0);
}

TEST_CASE("zero learning signal at the optimum") {
  NetworkSpec s = tiny_spec(false);
  BasicNetwork<double> net = Network::initialized(s, 5).cast<double>();
  const auto& pb = net.slot("policy.dense.bias");
  const auto& pw = net.slot("policy.dense.weight");
  const auto& vb = net.slot("value.out.bias");
  const auto& vw = net.slot("value.out.weight");
  std::fill_n(net.params().begin() + pw.offset, pw.size, 0.0);
  std::fill_n(net.params().begin() + vw.offset, vw.size, 0.0);
  // Logits are now the bias; value is tanh(bias).
  std::mt19937_64 rng(4);
  for (std::size_t i = 0; i < pb.size; ++i) net.params()[pb.offset + i] = static_cast<double>(rng() % 100) / 50.0;
  net.params()[vb.offset] = 0.3;

  auto batch = testing::random_examples(s, 2, 6);
  double entropy = 0;
  for (auto& e : batch) {
    std::vector<double> logits(net.params().begin() + pb.offset, net.params().begin() + pb.offset + pb.size);
    auto sm = masked_softmax(logits, e.legal);
    for (std::size_t k = 0; k < sm.size(); ++k) {
      e.target[k] = static_cast<float>(sm[k]);
      entropy -= e.target[k] * std::log(static_cast<double>(e.target[k])) / 2;
    }
    e.z = static_cast<float>(std::tanh(0.3));
  }
  std::vector<double> grad;
  LossParts l = net.train_loss(testing::pointers(batch), 0.0, &grad);
  CHECK(l.policy == doctest::Approx(entropy).epsilon(1e-6));
  CHECK(l.value == doctest::Approx(0).epsilon(1e-12));
  for (std::size_t i = 0; i < pb.size; ++i) CHECK(std::abs(grad[pb.offset + i]) < 1e-7);
  CHECK(std::abs(grad[vb.offset]) < 1e-7);
}

TEST_CASE("weight decay gradient") {
  NetworkSpec s = tiny_spec(true);
  BasicNetwork<double> net = Network::initialized(s, 5).cast<double>();
  auto batch = testing::random_examples(s, 2, 6);
  std::vector<double> with, without;
  const double c = 0.01;
  LossParts lw = net.train_loss(testing::pointers(batch), c, &with);
  LossParts lo = net.train_loss(testing::pointers(batch), 0, &without);
  CHECK(lw.decay == doctest::Approx(weight_decay_term(net, c)));
  CHECK(lw.policy == lo.policy);
  for (const auto& slot : net.layout()) {
    for (std::size_t j = slot.offset; j < slot.offset + slot.size; ++j) {
      const double expected = slot.decayed ? c * net.params()[j] : 0.0;
      if (std::abs(with[j] - without[j] - expected) > 1e-12) {
        FAIL_CHECK(slot.name);
        break;
      }
    }
  }
}

TEST_CASE("gradient check on tiny plain and residual specs") {
  for (bool residual : {false, true}) {
    NetworkSpec s = tiny_spec(residual);
    auto net = Network::initialized(s, 21).cast<double>();
    auto batch = testing::random_examples(s, 3, 22);
    auto report = testing::gradient_check(net, batch, 1e-3, 200, 23);
    CAPTURE(residual);
    CAPTURE(report.worst_relative);
    CAPTURE(report.worst_slot);
    CAPTURE(report.worst_analytic);
    CAPTURE(report.worst_numeric);
    CAPTURE(report.skipped_kinks);
    CHECK(report.skipped_kinks < 20);
    CHECK(report.checked == 200);
    CHECK(report.failures == 0);
  }
}

TEST_CASE("sgd step") {
  std::vector<float> p = {1, 2, 3}, v, g = {0.5f, -1, 2};
  auto q = p;
  sgd_step(q, v, g, 0.0, 0.9);
  CHECK(q == p);
  std::vector<float> v2;
  sgd_step(q, v2, g, 0.1, 0.0);
  CHECK(q[0] == doctest::Approx(0.95));
  CHECK(q[1] == doctest::Approx(2.1));
  sgd_step(q, v2, g, 0.1, 0.5);
  CHECK(v2[2] == doctest::Approx(3.0));
}

TEST_CASE("overfitting one batch") {
  const NetworkSpec s = default_spec(parse_variant("silverman4x5"));
  Network net = Network::initialized(s, 31);
  auto batch = testing::random_examples(s, 32, 32);
  // One-hot targets so the attainable minimum is near zero.
  for (auto& e : batch) {
    std::fill(e.target.begin(), e.target.end(), 0.0f);
    e.target[0] = 1.0f;
  }
  auto ptrs = testing::pointers(batch);
  std::vector<float> grad, velocity;
  const double initial = net.train_loss(ptrs, 1e-4, nullptr).total();
  std::vector<double> curve;
  for (int step = 0; step < 200; ++step) {
    curve.push_back(net.train_loss(ptrs, 1e-4, &grad).total());
    sgd_step(net.params(), velocity, grad, 0.02, 0.9);
  }
  const double last = net.train_loss(ptrs, 1e-4, nullptr).total();
  // After warmup, every 20-step window ends lower than it started.
  for (int k = 40; k + 20 <= 200; k += 20) CHECK(curve[k + 19] < curve[k]);
  CAPTURE(initial);
  CAPTURE(last);
  CHECK(last < 0.1 * initial);
}

TEST_CASE("checkpoint round trip and failure modes") {
  Checkpoint c;
  c.variant = parse_variant("silverman4x5");
  c.net = Network::initialized(default_spec(c.variant), 4);
  c.net.running_stats()[3] = 0.25f;
  c.iteration = 7;
  c.rng_state = "abc";
  const std::string path = temp_path("round.ckpt");
  save_checkpoint(c, path);
  Checkpoint back = load_checkpoint(path, c.net.spec());
  CHECK(back.iteration == 7);
  CHECK(back.rng_state == c.rng_state);
  CHECK(back.variant == c.variant);
  CHECK(bitwise_equal(back.net.params(), c.net.params()));
  CHECK(bitwise_equal(back.net.running_stats(), c.net.running_stats()));
  InputPlanes x = encode_position(testing::initial("silverman4x5"));
  CHECK(bitwise_equal(back.net.forward(x).policy_logits, c.net.forward(x).policy_logits));
  CHECK(back.net.forward(x).value == c.net.forward(x).value);

  auto code_for = [&](const std::string& bytes) {
    write_file_atomic(path, bytes);
    try {
      load_checkpoint(path);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  const std::string good = serialize_checkpoint(c);
  CHECK(code_for(good.substr(0, good.size() / 2)) == ErrorCode::CorruptCheckpoint);
  std::string flipped = good;
  flipped[flipped.size() / 2] ^= 0x10;
  CHECK(code_for(flipped) == ErrorCode::CorruptCheckpoint);
  std::string versioned = good;
  versioned[4] = 9;
  CHECK(code_for(versioned) == ErrorCode::VersionMismatch);
  CHECK(code_for("junk") == ErrorCode::CorruptCheckpoint);

  save_checkpoint(c, path);
  const NetworkSpec six = default_spec(parse_variant("losalamos6x6"));
  try {
    load_checkpoint(path, six);
    FAIL("expected SpecMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SpecMismatch);
  }
  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.ckpt")), Error);
}

}  // TEST_SUITE
