#include "mchess/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mchess/errors.hpp"
#include "mchess/kernels.hpp"
#include "mchess/seed.hpp"

namespace mchess {

namespace {

struct ConvBn {
  std::size_t w = 0, gamma = 0, beta = 0, mean = 0, var = 0;
  int cin = 0, cout = 0, k = 3;
};

struct SlotInit {
  double bound = 0;  // uniform(-bound, bound) when > 0
  double value = 0;  // constant otherwise
};

struct Arch {
  std::vector<ConvBn> trunk;  // plain: one per block; residual: stem, then two per block
  ConvBn policy_conv, value_conv;
  std::size_t policy_w = 0, policy_b = 0;
  std::size_t value_w1 = 0, value_b1 = 0, value_w2 = 0, value_b2 = 0;
  std::size_t params = 0, running = 0;
};

Arch build_arch(const NetworkSpec& s, std::vector<ParamSlot>* layout = nullptr, std::vector<SlotInit>* init = nullptr) {
  Arch a;
  auto add = [&](const std::string& name, std::size_t size, bool decayed, SlotInit how) {
    const std::size_t offset = a.params;
    if (layout) layout->push_back({name, offset, size, decayed});
    if (init) init->push_back(how);
    a.params += size;
    return offset;
  };
  auto conv_bn = [&](const std::string& name, int cin, int cout, int k) {
    ConvBn c;
    c.cin = cin;
    c.cout = cout;
    c.k = k;
    const int fan_in = cin * k * k;
    c.w = add(name + ".weight", static_cast<std::size_t>(cout) * fan_in, true, {std::sqrt(6.0 / fan_in), 0});
    c.gamma = add(name + ".scale", cout, false, {0, 1});
    c.beta = add(name + ".offset", cout, false, {0, 0});
    c.mean = a.running;
    c.var = a.running + cout;
    a.running += 2 * static_cast<std::size_t>(cout);
    return c;
  };

  const int hw = s.geometry.squares();
  if (!s.residual) {
    for (int b = 0; b < s.blocks; ++b) {
      a.trunk.push_back(conv_bn("conv" + std::to_string(b + 1), b == 0 ? s.input_channels : s.filters, s.filters, 3));
    }
  } else {
    a.trunk.push_back(conv_bn("stem", s.input_channels, s.filters, 3));
    for (int b = 0; b < s.blocks; ++b) {
      const std::string name = "res" + std::to_string(b + 1);
      a.trunk.push_back(conv_bn(name + ".conv1", s.filters, s.filters, 3));
      a.trunk.push_back(conv_bn(name + ".conv2", s.filters, s.filters, 3));
    }
  }
  a.policy_conv = conv_bn("policy.conv", s.filters, 2, 1);
  a.policy_w = add("policy.dense.weight", static_cast<std::size_t>(s.policy_size) * 2 * hw, true,
                   {std::sqrt(1.0 / (2 * hw)), 0});
  a.policy_b = add("policy.dense.bias", s.policy_size, false, {0, 0});
  a.value_conv = conv_bn("value.conv", s.filters, 1, 1);
  a.value_w1 = add("value.hidden.weight", static_cast<std::size_t>(s.value_hidden) * hw, true,
                   {std::sqrt(6.0 / hw), 0});
  a.value_b1 = add("value.hidden.bias", s.value_hidden, false, {0, 0});
  a.value_w2 = add("value.out.weight", s.value_hidden, true, {std::sqrt(1.0 / s.value_hidden), 0});
  a.value_b2 = add("value.out.bias", 1, false, {0, 0});
  return a;
}

template <class T>
struct ConvBnTape {
  std::vector<T> cols;  // im2col patches, or the input itself for 1x1
  std::vector<T> xhat;
  std::vector<double> inv_std;
};

// y = BN(conv(x)), pre-activation. In batch mode the statistics come from
// this batch; otherwise from the running averages.
template <class T>
void conv_bn_forward(const ConvBn& L, const T* P, T* running, bool batch_stats, bool update_running,
                     const std::vector<T>& x, int N, int H, int W, std::vector<T>& y, ConvBnTape<T>* tape) {
  const int M = N * H * W;
  y.assign(static_cast<std::size_t>(L.cout) * M, T(0));
  std::vector<T> local_cols;
  std::vector<T>& cols = tape ? tape->cols : local_cols;
  if (L.k == 3) {
    cols.resize(static_cast<std::size_t>(L.cin) * 9 * M);
    kernels::conv3x3(x.data(), P + L.w, L.cin, L.cout, N, H, W, cols.data(), y.data());
  } else {
    kernels::gemm(false, false, L.cout, M, L.cin, P + L.w, x.data(), y.data());
    if (tape) cols = x;
  }
  if (tape) {
    tape->xhat.resize(y.size());
    tape->inv_std.resize(L.cout);
  }
  for (int c = 0; c < L.cout; ++c) {
    T* row = y.data() + static_cast<std::size_t>(c) * M;
    double mean, var;
    if (batch_stats) {
      double s = 0;
      for (int i = 0; i < M; ++i) s += row[i];
      mean = s / M;
      double v = 0;
      for (int i = 0; i < M; ++i) v += (row[i] - mean) * (row[i] - mean);
      var = v / M;
      if (update_running) {
        const double unbiased = M > 1 ? var * M / (M - 1) : var;
        running[L.mean + c] = static_cast<T>((1 - kBatchNormMomentum) * running[L.mean + c] + kBatchNormMomentum * mean);
        running[L.var + c] = static_cast<T>((1 - kBatchNormMomentum) * running[L.var + c] + kBatchNormMomentum * unbiased);
      }
    } else {
      mean = running[L.mean + c];
      var = running[L.var + c];
    }
    const double inv = 1.0 / std::sqrt(var + kBatchNormEpsilon);
    const double g = P[L.gamma + c], b = P[L.beta + c];
    for (int i = 0; i < M; ++i) {
      const double xh = (row[i] - mean) * inv;
      if (tape) tape->xhat[static_cast<std::size_t>(c) * M + i] = static_cast<T>(xh);
      row[i] = static_cast<T>(g * xh + b);
    }
    if (tape) tape->inv_std[c] = inv;
  }
}

// dy: gradient w.r.t. the BN output (batch statistics). Writes parameter
// gradients and, if dx is given, the gradient w.r.t. the layer input.
template <class T>
void conv_bn_backward(const ConvBn& L, const T* P, const ConvBnTape<T>& tape, const std::vector<T>& dy, int N, int H,
                      int W, T* grad, std::vector<T>* dx) {
  const int M = N * H * W;
  std::vector<T> dconv(dy.size());
  for (int c = 0; c < L.cout; ++c) {
    const T* d = dy.data() + static_cast<std::size_t>(c) * M;
    const T* xh = tape.xhat.data() + static_cast<std::size_t>(c) * M;
    double sum_d = 0, sum_dx = 0;
    for (int i = 0; i < M; ++i) {
      sum_d += d[i];
      sum_dx += static_cast<double>(d[i]) * xh[i];
    }
    grad[L.gamma + c] = static_cast<T>(sum_dx);
    grad[L.beta + c] = static_cast<T>(sum_d);
    const double g = P[L.gamma + c], inv = tape.inv_std[c];
    T* out = dconv.data() + static_cast<std::size_t>(c) * M;
    for (int i = 0; i < M; ++i) {
      out[i] = static_cast<T>(g * inv / M * (M * static_cast<double>(d[i]) - sum_d - xh[i] * sum_dx));
    }
  }
  const int K = L.cin * L.k * L.k;
  kernels::gemm(false, true, L.cout, K, M, dconv.data(), tape.cols.data(), grad + L.w);
  if (!dx) return;
  if (L.k == 3) {
    std::vector<T> dcols(static_cast<std::size_t>(K) * M);
    kernels::gemm(true, false, K, M, L.cout, P + L.w, dconv.data(), dcols.data());
    dx->resize(static_cast<std::size_t>(L.cin) * M);
    kernels::col2im3x3(dcols.data(), L.cin, N, H, W, dx->data());
  } else {
    dx->resize(static_cast<std::size_t>(L.cin) * M);
    kernels::gemm(true, false, L.cin, M, L.cout, P + L.w, dconv.data(), dx->data());
  }
}

template <class T>
void relu(std::vector<T>& v) {
  for (T& x : v) x = x > T(0) ? x : T(0);
}

// Zeroes gradient entries where the activation output was clamped.
template <class T>
void relu_backward(const std::vector<T>& out, std::vector<T>& d) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(out[i] > T(0))) d[i] = T(0);
  }
}

// Dense layer on row-major [N][in] inputs: y[N][out] = x W^T + b.
template <class T>
void dense(const T* P, std::size_t w, std::size_t b, const std::vector<T>& x, int N, int in, int out,
           std::vector<T>& y) {
  y.assign(static_cast<std::size_t>(N) * out, T(0));
  kernels::gemm(false, true, N, out, in, x.data(), P + w, y.data());
  for (int n = 0; n < N; ++n) {
    for (int o = 0; o < out; ++o) {
      y[static_cast<std::size_t>(n) * out + o] = static_cast<T>(static_cast<double>(y[static_cast<std::size_t>(n) * out + o]) + P[b + o]);
    }
  }
}

template <class T>
void dense_backward(const T* P, std::size_t w, std::size_t b, const std::vector<T>& x, const std::vector<T>& dy,
                    int N, int in, int out, T* grad, std::vector<T>* dx) {
  kernels::gemm(true, false, out, in, N, dy.data(), x.data(), grad + w);
  for (int o = 0; o < out; ++o) {
    double s = 0;
    for (int n = 0; n < N; ++n) s += dy[static_cast<std::size_t>(n) * out + o];
    grad[b + o] = static_cast<T>(s);
  }
  if (dx) {
    dx->assign(static_cast<std::size_t>(N) * in, T(0));
    kernels::gemm(false, false, N, in, out, dy.data(), P + w, dx->data());
  }
}

// Channel-major [C][N*HW] <-> sample-major [N][C*HW].
template <class T>
std::vector<T> to_sample_major(const std::vector<T>& a, int C, int N, int HW) {
  std::vector<T> out(a.size());
  for (int c = 0; c < C; ++c)
    for (int n = 0; n < N; ++n)
      std::copy_n(a.begin() + (static_cast<std::size_t>(c) * N + n) * HW, HW,
                  out.begin() + (static_cast<std::size_t>(n) * C + c) * HW);
  return out;
}

template <class T>
std::vector<T> to_channel_major(const std::vector<T>& a, int C, int N, int HW) {
  std::vector<T> out(a.size());
  for (int c = 0; c < C; ++c)
    for (int n = 0; n < N; ++n)
      std::copy_n(a.begin() + (static_cast<std::size_t>(n) * C + c) * HW, HW,
                  out.begin() + (static_cast<std::size_t>(c) * N + n) * HW);
  return out;
}

template <class T>
struct Tape {
  std::vector<ConvBnTape<T>> trunk;
  std::vector<std::vector<T>> trunk_out;  // post-activation output per trunk layer
  std::vector<std::vector<T>> block_in;   // residual: input to each block
  ConvBnTape<T> policy_conv, value_conv;
  std::vector<T> policy_act, value_act, hidden;
  std::vector<T> logits, value;
};

template <class T>
struct Outputs {
  std::vector<T> logits;  // [N][P]
  std::vector<T> value;   // [N]
  std::vector<std::vector<T>> captures;  // channel-major per capture point
};

template <class T>
Outputs<T> run(const NetworkSpec& s, const Arch& arch, const T* P, T* running, bool batch_stats, bool update_running,
               const std::vector<const InputPlanes*>& batch, bool capture, Tape<T>* tape) {
  const int N = static_cast<int>(batch.size());
  const int H = s.geometry.height, W = s.geometry.width, HW = H * W;
  const int M = N * HW;
  const std::size_t in_size = static_cast<std::size_t>(s.input_channels) * HW;

  std::vector<T> x(static_cast<std::size_t>(s.input_channels) * M);
  for (int n = 0; n < N; ++n) {
    if (batch[n]->size() != in_size) {
      throw Error(ErrorCode::ShapeMismatch, "input planes have " + std::to_string(batch[n]->size()) +
                                                " values, network expects " + std::to_string(in_size));
    }
    for (int c = 0; c < s.input_channels; ++c)
      for (int i = 0; i < HW; ++i)
        x[(static_cast<std::size_t>(c) * N + n) * HW + i] = static_cast<T>((*batch[n])[c * HW + i]);
  }

  Outputs<T> out;
  if (tape) {
    tape->trunk.assign(arch.trunk.size(), {});
    tape->trunk_out.assign(arch.trunk.size(), {});
    tape->block_in.clear();
  }
  auto layer = [&](std::size_t i, const std::vector<T>& in, std::vector<T>& y) {
    conv_bn_forward(arch.trunk[i], P, running, batch_stats, update_running, in, N, H, W, y,
                    tape ? &tape->trunk[i] : nullptr);
  };

  std::vector<T> a;
  if (!s.residual) {
    std::vector<T> cur = std::move(x);
    for (std::size_t i = 0; i < arch.trunk.size(); ++i) {
      layer(i, cur, a);
      relu(a);
      if (capture) out.captures.push_back(a);
      if (tape) tape->trunk_out[i] = a;
      cur = a;
    }
  } else {
    layer(0, x, a);
    relu(a);
    if (capture) out.captures.push_back(a);
    if (tape) tape->trunk_out[0] = a;
    for (int b = 0; b < s.blocks; ++b) {
      const std::size_t i1 = 1 + 2 * b, i2 = 2 + 2 * b;
      if (tape) tape->block_in.push_back(a);
      std::vector<T> t, u;
      layer(i1, a, t);
      relu(t);
      if (tape) tape->trunk_out[i1] = t;
      layer(i2, t, u);
      for (std::size_t j = 0; j < u.size(); ++j) u[j] = static_cast<T>(u[j] + a[j]);
      relu(u);
      a = std::move(u);
      if (capture) out.captures.push_back(a);
      if (tape) tape->trunk_out[i2] = a;
    }
  }

  std::vector<T> pa, va;
  conv_bn_forward(arch.policy_conv, P, running, batch_stats, update_running, a, N, H, W, pa,
                  tape ? &tape->policy_conv : nullptr);
  relu(pa);
  std::vector<T> pflat = to_sample_major(pa, 2, N, HW);
  dense(P, arch.policy_w, arch.policy_b, pflat, N, 2 * HW, s.policy_size, out.logits);

  conv_bn_forward(arch.value_conv, P, running, batch_stats, update_running, a, N, H, W, va,
                  tape ? &tape->value_conv : nullptr);
  relu(va);  // one channel: already [N][HW]
  std::vector<T> hidden, o;
  dense(P, arch.value_w1, arch.value_b1, va, N, HW, s.value_hidden, hidden);
  relu(hidden);
  dense(P, arch.value_w2, arch.value_b2, hidden, N, s.value_hidden, 1, o);
  out.value.resize(N);
  for (int n = 0; n < N; ++n) out.value[n] = static_cast<T>(std::tanh(static_cast<double>(o[n])));

  if (tape) {
    tape->policy_act = std::move(pflat);
    tape->value_act = std::move(va);
    tape->hidden = std::move(hidden);
    tape->logits = out.logits;
    tape->value = out.value;
  }
  return out;
}

}  // namespace

std::vector<std::string> NetworkSpec::capture_names() const {
  std::vector<std::string> names;
  if (residual) names.push_back("stem");
  for (int b = 0; b < blocks; ++b) names.push_back((residual ? "res" : "conv") + std::to_string(b + 1));
  return names;
}

NetworkSpec default_spec(const VariantConfig& config) {
  NetworkSpec s;
  s.geometry = config.geometry;
  s.policy_size = MoveEncoder(config).policy_size();
  if (config.geometry.squares() <= 20) {
    s.blocks = 3;
    s.filters = 32;
    s.residual = false;
  } else {
    s.blocks = 6;
    s.filters = 64;
    s.residual = true;
  }
  return s;
}

void validate_spec(const NetworkSpec& s) {
  validate_geometry(s.geometry);
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidConfig, "network spec: " + what);
  };
  require(s.input_channels >= 1, "input_channels must be positive");
  require(s.blocks >= 1, "blocks must be positive");
  require(s.filters >= 1, "filters must be positive");
  require(s.policy_size >= 1, "policy_size must be positive");
  require(s.value_hidden >= 1, "value_hidden must be positive");
}

std::string describe_spec(const NetworkSpec& s) {
  std::ostringstream os;
  os << s.geometry.width << "x" << s.geometry.height << " " << (s.residual ? "residual" : "plain") << " blocks=" << s.blocks
     << " filters=" << s.filters << " value_hidden=" << s.value_hidden << " policy=" << s.policy_size;
  return os.str();
}

template <class T>
BasicNetwork<T>::BasicNetwork(const NetworkSpec& spec) : spec_(spec) {
  validate_spec(spec);
  std::vector<SlotInit> init;
  const Arch arch = build_arch(spec, &layout_, &init);
  params_.assign(arch.params, T(0));
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (init[i].bound == 0) std::fill_n(params_.begin() + layout_[i].offset, layout_[i].size, static_cast<T>(init[i].value));
  }
  running_.assign(arch.running, T(0));
  for (const ConvBn* c : {&arch.policy_conv, &arch.value_conv}) std::fill_n(running_.begin() + c->var, c->cout, T(1));
  for (const ConvBn& c : arch.trunk) std::fill_n(running_.begin() + c.var, c.cout, T(1));
}

template <class T>
BasicNetwork<T> BasicNetwork<T>::initialized(const NetworkSpec& spec, std::uint64_t seed) {
  BasicNetwork net(spec);
  std::vector<SlotInit> init;
  std::vector<ParamSlot> layout;
  build_arch(spec, &layout, &init);
  std::uint64_t state = derive_seed(seed, "network-init");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (init[i].bound == 0) continue;
    for (std::size_t j = 0; j < layout[i].size; ++j) {
      state = splitmix64(state);
      const double u = static_cast<double>(state >> 11) * 0x1.0p-53;
      net.params_[layout[i].offset + j] = static_cast<T>((2 * u - 1) * init[i].bound);
    }
  }
  return net;
}

template <class T>
const ParamSlot& BasicNetwork<T>::slot(const std::string& name) const {
  for (const auto& s : layout_)
    if (s.name == name) return s;
  throw Error(ErrorCode::UnknownName, "no parameter slot named " + name);
}

template <class T>
Trace<T> BasicNetwork<T>::forward(const InputPlanes& planes, bool capture) const {
  return std::move(forward_batch({&planes}, capture).front());
}

template <class T>
std::vector<Trace<T>> BasicNetwork<T>::forward_batch(const std::vector<const InputPlanes*>& batch, bool capture) const {
  const Arch arch = build_arch(spec_);
  const int N = static_cast<int>(batch.size());
  if (N == 0) return {};
  Outputs<T> o = run<T>(spec_, arch, params_.data(), const_cast<T*>(running_.data()), false, false, batch, capture, nullptr);
  const int HW = spec_.geometry.squares(), P = spec_.policy_size;
  std::vector<Trace<T>> traces(N);
  for (int n = 0; n < N; ++n) {
    traces[n].policy_logits.assign(o.logits.begin() + static_cast<std::size_t>(n) * P,
                                   o.logits.begin() + static_cast<std::size_t>(n + 1) * P);
    traces[n].value = o.value[n];
  }
  for (const auto& a : o.captures) {
    const std::vector<T> rows = to_sample_major(a, spec_.filters, N, HW);
    const std::size_t len = spec_.activation_size();
    for (int n = 0; n < N; ++n) traces[n].activations.emplace_back(rows.begin() + n * len, rows.begin() + (n + 1) * len);
  }
  return traces;
}

template <class T>
LossParts BasicNetwork<T>::train_loss(const std::vector<const TrainingExample*>& batch, double weight_decay,
                                      std::vector<T>* grad, bool update_running) {
  const Arch arch = build_arch(spec_);
  const int N = static_cast<int>(batch.size());
  if (N == 0) throw Error(ErrorCode::ShapeMismatch, "empty training batch");
  const int H = spec_.geometry.height, W = spec_.geometry.width, HW = H * W;
  const int P = spec_.policy_size, Hd = spec_.value_hidden;

  std::vector<const InputPlanes*> inputs;
  for (const auto* e : batch) inputs.push_back(&e->planes);
  Tape<T> t;
  run<T>(spec_, arch, params_.data(), running_.data(), true, update_running, inputs, false, &t);

  LossParts loss;
  std::vector<T> dlogits(static_cast<std::size_t>(N) * P, T(0));
  std::vector<T> dout(N);
  for (int n = 0; n < N; ++n) {
    const TrainingExample& e = *batch[n];
    Trace<T> tr;
    tr.policy_logits.assign(t.logits.begin() + static_cast<std::size_t>(n) * P,
                            t.logits.begin() + static_cast<std::size_t>(n + 1) * P);
    tr.value = t.value[n];
    const LossParts l = example_loss(tr, e.legal, e.target, e.z);
    loss.policy += l.policy / N;
    loss.value += l.value / N;
    const std::vector<double> sm = masked_softmax(tr.policy_logits, e.legal);
    for (std::size_t k = 0; k < e.legal.size(); ++k) {
      dlogits[static_cast<std::size_t>(n) * P + e.legal[k]] = static_cast<T>((sm[k] - e.target[k]) / N);
    }
    const double v = tr.value;
    dout[n] = static_cast<T>(2.0 * (v - e.z) / N * (1 - v * v));
  }
  loss.decay = weight_decay_term(*this, weight_decay);
  if (!grad) return loss;

  grad->assign(params_.size(), T(0));
  T* G = grad->data();
  const T* Pm = params_.data();

  // Value head.
  std::vector<T> dhidden, dva;
  dense_backward(Pm, arch.value_w2, arch.value_b2, t.hidden, dout, N, Hd, 1, G, &dhidden);
  relu_backward(t.hidden, dhidden);
  dense_backward(Pm, arch.value_w1, arch.value_b1, t.value_act, dhidden, N, HW, Hd, G, &dva);
  relu_backward(t.value_act, dva);
  std::vector<T> da_value;
  conv_bn_backward(arch.value_conv, Pm, t.value_conv, dva, N, H, W, G, &da_value);

  // Policy head.
  std::vector<T> dpflat;
  dense_backward(Pm, arch.policy_w, arch.policy_b, t.policy_act, dlogits, N, 2 * HW, P, G, &dpflat);
  relu_backward(t.policy_act, dpflat);
  std::vector<T> dpa = to_channel_major(dpflat, 2, N, HW);
  std::vector<T> da;
  conv_bn_backward(arch.policy_conv, Pm, t.policy_conv, dpa, N, H, W, G, &da);
  for (std::size_t i = 0; i < da.size(); ++i) da[i] = static_cast<T>(da[i] + da_value[i]);

  // Trunk.
  if (!spec_.residual) {
    for (int i = static_cast<int>(arch.trunk.size()) - 1; i >= 0; --i) {
      relu_backward(t.trunk_out[i], da);
      std::vector<T> dx;
      conv_bn_backward(arch.trunk[i], Pm, t.trunk[i], da, N, H, W, G, i > 0 ? &dx : nullptr);
      da = std::move(dx);
    }
  } else {
    for (int b = spec_.blocks - 1; b >= 0; --b) {
      const std::size_t i1 = 1 + 2 * b, i2 = 2 + 2 * b;
      relu_backward(t.trunk_out[i2], da);
      std::vector<T> dt, dx;
      conv_bn_backward(arch.trunk[i2], Pm, t.trunk[i2], da, N, H, W, G, &dt);
      relu_backward(t.trunk_out[i1], dt);
      conv_bn_backward(arch.trunk[i1], Pm, t.trunk[i1], dt, N, H, W, G, &dx);
      for (std::size_t j = 0; j < da.size(); ++j) da[j] = static_cast<T>(da[j] + dx[j]);
    }
    relu_backward(t.trunk_out[0], da);
    conv_bn_backward<T>(arch.trunk[0], Pm, t.trunk[0], da, N, H, W, G, nullptr);
  }

  if (weight_decay != 0) {
    for (const auto& s : layout_) {
      if (!s.decayed) continue;
      for (std::size_t j = s.offset; j < s.offset + s.size; ++j) G[j] = static_cast<T>(G[j] + weight_decay * Pm[j]);
    }
  }
  return loss;
}

template <class T>
std::vector<bool> BasicNetwork<T>::relu_pattern(const std::vector<const TrainingExample*>& batch) const {
  const Arch arch = build_arch(spec_);
  std::vector<const InputPlanes*> inputs;
  for (const auto* e : batch) inputs.push_back(&e->planes);
  Tape<T> t;
  std::vector<T> scratch = running_;
  run<T>(spec_, arch, params_.data(), scratch.data(), true, false, inputs, false, &t);
  std::vector<bool> bits;
  auto add = [&](const std::vector<T>& v) {
    for (T x : v) bits.push_back(x > T(0));
  };
  for (const auto& v : t.trunk_out) add(v);
  add(t.policy_act);
  add(t.value_act);
  add(t.hidden);
  return bits;
}

template <class T>
std::vector<double> masked_softmax(const std::vector<T>& logits, const std::vector<int>& indices) {
  std::vector<double> out(indices.size());
  if (indices.empty()) return out;
  double mx = -INFINITY;
  for (int i : indices) mx = std::max(mx, static_cast<double>(logits[i]));
  double sum = 0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out[k] = std::exp(static_cast<double>(logits[indices[k]]) - mx);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
  return out;
}

template <class T>
LossParts example_loss(const Trace<T>& trace, const std::vector<int>& legal, const std::vector<float>& target,
                       float z) {
  LossParts l;
  if (!legal.empty()) {
    double mx = -INFINITY;
    for (int i : legal) mx = std::max(mx, static_cast<double>(trace.policy_logits[i]));
    double sum = 0;
    for (int i : legal) sum += std::exp(static_cast<double>(trace.policy_logits[i]) - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t k = 0; k < legal.size(); ++k) {
      if (target[k] != 0) l.policy -= target[k] * (static_cast<double>(trace.policy_logits[legal[k]]) - lse);
    }
  }
  const double d = static_cast<double>(trace.value) - z;
  l.value = d * d;
  return l;
}

template <class T>
double weight_decay_term(const BasicNetwork<T>& net, double decay) {
  if (decay == 0) return 0;
  double s = 0;
  for (const auto& slot : net.layout()) {
    if (!slot.decayed) continue;
    for (std::size_t j = slot.offset; j < slot.offset + slot.size; ++j) {
      const double w = net.params()[j];
      s += w * w;
    }
  }
  return 0.5 * decay * s;
}

template <class T>
void sgd_step(std::vector<T>& params, std::vector<T>& velocity, const std::vector<T>& grad, double lr,
              double momentum) {
  if (params.size() != grad.size()) throw Error(ErrorCode::ShapeMismatch, "gradient size differs from parameters");
  velocity.resize(params.size(), T(0));
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = static_cast<T>(momentum * velocity[i] + grad[i]);
    params[i] = static_cast<T>(params[i] - lr * velocity[i]);
  }
}

template class BasicNetwork<float>;
template class BasicNetwork<double>;
template LossParts example_loss<float>(const Trace<float>&, const std::vector<int>&, const std::vector<float>&, float);
template LossParts example_loss<double>(const Trace<double>&, const std::vector<int>&, const std::vector<float>&, float);
template double weight_decay_term<float>(const BasicNetwork<float>&, double);
template double weight_decay_term<double>(const BasicNetwork<double>&, double);
template std::vector<double> masked_softmax<float>(const std::vector<float>&, const std::vector<int>&);
template std::vector<double> masked_softmax<double>(const std::vector<double>&, const std::vector<int>&);
template void sgd_step<float>(std::vector<float>&, std::vector<float>&, const std::vector<float>&, double, double);
template void sgd_step<double>(std::vector<double>&, std::vector<double>&, const std::vector<double>&, double, double);

}  // namespace mchess
