#include "mchess/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <vector>

namespace mchess::kernels {

namespace {

constexpr int kColumnBlock = 256;
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr long kParallelWork = 1L << 16;

template <class T>
inline T a_at(bool trans, const T* A, int M, int K, int i, int k) {
  return trans ? A[static_cast<long>(k) * M + i] : A[static_cast<long>(i) * K + k];
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }
void set_threads(int n) { omp_set_num_threads(std::max(1, n)); }

template <class T>
void gemm(bool trans_a, bool trans_b, int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
  const int col_blocks = (N + kColumnBlock - 1) / kColumnBlock;
  const long tiles = static_cast<long>(M) * col_blocks;
  const bool parallel = static_cast<long>(M) * N * K >= kParallelWork;

#pragma omp parallel if (parallel)
  {
    std::vector<double> acc(kColumnBlock);
    std::vector<double> a_row(K);
#pragma omp for schedule(static)
    for (long t = 0; t < tiles; ++t) {
      const int i = static_cast<int>(t / col_blocks);
      const int j0 = static_cast<int>(t % col_blocks) * kColumnBlock;
      const int j1 = std::min(N, j0 + kColumnBlock);
      const int width = j1 - j0;
      for (int k = 0; k < K; ++k) a_row[k] = static_cast<double>(a_at(trans_a, A, M, K, i, k));

      if (!trans_b) {
        std::fill(acc.begin(), acc.begin() + width, 0.0);
        for (int k = 0; k < K; ++k) {
          const double a = a_row[k];
          const T* b = B + static_cast<long>(k) * N + j0;
          for (int j = 0; j < width; ++j) acc[j] += a * static_cast<double>(b[j]);
        }
      } else {
        for (int j = 0; j < width; ++j) {
          const T* b = B + static_cast<long>(j0 + j) * K;
          double s = 0.0;
          for (int k = 0; k < K; ++k) s += a_row[k] * static_cast<double>(b[k]);
          acc[j] = s;
        }
      }
      T* c = C + static_cast<long>(i) * N + j0;
      for (int j = 0; j < width; ++j) {
        c[j] = accumulate ? static_cast<T>(acc[j] + static_cast<double>(c[j])) : static_cast<T>(acc[j]);
      }
    }
  }
}

template <class T>
void im2col3x3(const T* x, int C, int N, int H, int W, T* cols) {
  const int HW = H * W;
  const long row = static_cast<long>(N) * HW;
  const bool parallel = static_cast<long>(C) * 9 * row >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (int r = 0; r < C * 9; ++r) {
    const int c = r / 9, ky = r % 9 / 3, kx = r % 3;
    T* out = cols + r * row;
    for (int n = 0; n < N; ++n) {
      const T* src = x + (static_cast<long>(c) * N + n) * HW;
      for (int y = 0; y < H; ++y) {
        const int sy = y + ky - 1;
        for (int xx = 0; xx < W; ++xx) {
          const int sx = xx + kx - 1;
          out[n * HW + y * W + xx] = (sy >= 0 && sy < H && sx >= 0 && sx < W) ? src[sy * W + sx] : T(0);
        }
      }
    }
  }
}

template <class T>
void col2im3x3(const T* cols, int C, int N, int H, int W, T* dx) {
  const int HW = H * W;
  const long row = static_cast<long>(N) * HW;
  const bool parallel = static_cast<long>(C) * 9 * row >= kParallelWork;
  // Each input element gathers its (up to) nine patch entries in kernel order.
#pragma omp parallel for schedule(static) if (parallel)
  for (int c = 0; c < C; ++c) {
    for (int n = 0; n < N; ++n) {
      for (int sy = 0; sy < H; ++sy) {
        for (int sx = 0; sx < W; ++sx) {
          double s = 0.0;
          for (int k = 0; k < 9; ++k) {
            const int y = sy - (k / 3 - 1), xx = sx - (k % 3 - 1);
            if (y < 0 || y >= H || xx < 0 || xx >= W) continue;
            s += static_cast<double>(cols[(c * 9 + k) * row + n * HW + y * W + xx]);
          }
          dx[(static_cast<long>(c) * N + n) * HW + sy * W + sx] = static_cast<T>(s);
        }
      }
    }
  }
}

template <class T>
void conv3x3(const T* x, const T* w, int Cin, int Cout, int N, int H, int W, T* cols, T* y) {
  im2col3x3(x, Cin, N, H, W, cols);
  gemm(false, false, Cout, N * H * W, Cin * 9, w, cols, y);
}

namespace reference {

template <class T>
void gemm(bool trans_a, bool trans_b, int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      double s = 0.0;
      for (int k = 0; k < K; ++k) {
        const double a = trans_a ? A[static_cast<long>(k) * M + i] : A[static_cast<long>(i) * K + k];
        const double b = trans_b ? B[static_cast<long>(j) * K + k] : B[static_cast<long>(k) * N + j];
        s += a * b;
      }
      T& c = C[static_cast<long>(i) * N + j];
      c = accumulate ? static_cast<T>(s + static_cast<double>(c)) : static_cast<T>(s);
    }
  }
}

template <class T>
void conv3x3(const T* x, const T* w, int Cin, int Cout, int N, int H, int W, T* y) {
  const int HW = H * W;
  for (int co = 0; co < Cout; ++co) {
    for (int n = 0; n < N; ++n) {
      for (int oy = 0; oy < H; ++oy) {
        for (int ox = 0; ox < W; ++ox) {
          double s = 0.0;
          for (int ci = 0; ci < Cin; ++ci) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                const int iy = oy + ky - 1, ix = ox + kx - 1;
                const double v = (iy >= 0 && iy < H && ix >= 0 && ix < W)
                                     ? static_cast<double>(x[(static_cast<long>(ci) * N + n) * HW + iy * W + ix])
                                     : 0.0;
                s += static_cast<double>(w[(co * Cin + ci) * 9 + ky * 3 + kx]) * v;
              }
            }
          }
          y[static_cast<long>(co) * N * HW + n * HW + oy * W + ox] = static_cast<T>(s);
        }
      }
    }
  }
}

template void gemm<float>(bool, bool, int, int, int, const float*, const float*, float*, bool);
template void gemm<double>(bool, bool, int, int, int, const double*, const double*, double*, bool);
template void conv3x3<float>(const float*, const float*, int, int, int, int, int, float*);
template void conv3x3<double>(const double*, const double*, int, int, int, int, int, double*);

}  // namespace reference

template void gemm<float>(bool, bool, int, int, int, const float*, const float*, float*, bool);
template void gemm<double>(bool, bool, int, int, int, const double*, const double*, double*, bool);
template void im2col3x3<float>(const float*, int, int, int, int, float*);
template void im2col3x3<double>(const double*, int, int, int, int, double*);
template void col2im3x3<float>(const float*, int, int, int, int, float*);
template void col2im3x3<double>(const double*, int, int, int, int, double*);
template void conv3x3<float>(const float*, const float*, int, int, int, int, int, float*, float*);
template void conv3x3<double>(const double*, const double*, int, int, int, int, int, double*, double*);

}  // namespace mchess::kernels
