#pragma once

// Dense kernels behind the network. Every output element is a sum over k in
// ascending order, accumulated in double and written once, so results are
// bit-identical for any thread count and equal to the serial reference.
//
// Activation layout: channel-major [C][N][H][W], i.e. a C x (N*H*W) matrix.

namespace mchess::kernels {

// C[M][N] = op(A) * op(B), row-major. op(A) is M x K, op(B) is K x N.
// With accumulate, the old C is added after the product is formed.
template <class T>
void gemm(bool trans_a, bool trans_b, int M, int N, int K, const T* A, const T* B, T* C, bool accumulate = false);

// x: [C][N][H][W] -> cols: [C*9][N*H*W], zero padded 3x3 patches. Row
// c*9 + ky*3 + kx holds x shifted by (ky-1, kx-1).
template <class T>
void im2col3x3(const T* x, int C, int N, int H, int W, T* cols);

// Adjoint of im2col3x3: dx = sum of patch gradients. dx is overwritten.
template <class T>
void col2im3x3(const T* cols, int C, int N, int H, int W, T* dx);

// y: [Cout][N*H*W] = conv3x3(x, w), w: [Cout][Cin*9]. Uses im2col + gemm;
// cols must hold Cin*9*N*H*W elements.
template <class T>
void conv3x3(const T* x, const T* w, int Cin, int Cout, int N, int H, int W, T* cols, T* y);

// Number of OpenMP threads the parallel kernels will use.
int max_threads();
void set_threads(int n);

namespace reference {

// Triple loop, serial.
template <class T>
void gemm(bool trans_a, bool trans_b, int M, int N, int K, const T* A, const T* B, T* C, bool accumulate = false);

// Direct convolution, serial, same summation order as kernels::conv3x3.
template <class T>
void conv3x3(const T* x, const T* w, int Cin, int Cout, int N, int H, int W, T* y);

}  // namespace reference

}  // namespace mchess::kernels
