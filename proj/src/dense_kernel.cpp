// src/dense_kernel.cpp
// Copyright 2026 The mcenhance Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "mcenhance/dense_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#if defined(__AVX512F__) || defined(__FMA__)
#include <immintrin.h>
#endif

#include "mcenhance/error.hpp"

namespace mcenhance::nn {

namespace {

// Eight-lane fused multiply-add accumulator. Every lane is an exact fma, so
// the scalar, AVX2 and AVX-512 paths produce identical bits.
struct Lane8 {
#if defined(__AVX512F__)
  __m512d v;
  static Lane8 zero() { return {_mm512_setzero_pd()}; }
  static Lane8 load(const double* p) { return {_mm512_loadu_pd(p)}; }
  void fma(double x, const Lane8& w) { v = _mm512_fmadd_pd(_mm512_set1_pd(x), w.v, v); }
  void store(double* p) const { _mm512_storeu_pd(p, v); }
#elif defined(__FMA__)
  __m256d lo, hi;
  static Lane8 zero() { return {_mm256_setzero_pd(), _mm256_setzero_pd()}; }
  static Lane8 load(const double* p) { return {_mm256_loadu_pd(p), _mm256_loadu_pd(p + 4)}; }
  void fma(double x, const Lane8& w) {
    const __m256d b = _mm256_set1_pd(x);
    lo = _mm256_fmadd_pd(b, w.lo, lo);
    hi = _mm256_fmadd_pd(b, w.hi, hi);
  }
  void store(double* p) const {
    _mm256_storeu_pd(p, lo);
    _mm256_storeu_pd(p + 4, hi);
  }
#else
  double v[8];
  static Lane8 zero() { return Lane8{}; }
  static Lane8 load(const double* p) {
    Lane8 l;
    for (int j = 0; j < 8; ++j) l.v[j] = p[j];
    return l;
  }
  void fma(double x, const Lane8& w) {
    for (int j = 0; j < 8; ++j) v[j] = std::fma(x, w.v[j], v[j]);
  }
  void store(double* p) const {
    for (int j = 0; j < 8; ++j) p[j] = v[j];
  }
#endif
};

constexpr Eigen::Index kLanes = 8;
constexpr Eigen::Index kPanel = 2 * kLanes;

// acc_out[r][j] = sum_k x[r][k] * panel[k][j], accumulated in ascending k
// with one fma per term. The sequence for a row does not depend on R.
template <int R>
inline void panel_block(const double* __restrict x, Eigen::Index ldx, const double* __restrict panel,
                        Eigen::Index in, double* __restrict acc_out) {
  Lane8 a0[R], a1[R];
  for (int r = 0; r < R; ++r) {
    a0[r] = Lane8::zero();
    a1[r] = Lane8::zero();
  }
  for (Eigen::Index k = 0; k < in; ++k) {
    const Lane8 w0 = Lane8::load(panel + k * kPanel);
    const Lane8 w1 = Lane8::load(panel + k * kPanel + kLanes);
    for (int r = 0; r < R; ++r) {
      const double xv = x[r * ldx + k];
      a0[r].fma(xv, w0);
      a1[r].fma(xv, w1);
    }
  }
  for (int r = 0; r < R; ++r) {
    a0[r].store(acc_out + r * kPanel);
    a1[r].store(acc_out + r * kPanel + kLanes);
  }
}

template <int R>
void emit_block(const double* x, Eigen::Index in, const double* panel, const double* bias, Eigen::Index width,
                Matrix& Y, Eigen::Index row0, Eigen::Index col0) {
  double acc[R * kPanel];
  panel_block<R>(x, in, panel, in, acc);
  for (int rr = 0; rr < R; ++rr)
    for (Eigen::Index j = 0; j < width; ++j) Y(row0 + rr, col0 + j) = acc[rr * kPanel + j] + bias[j];
}

}  // namespace

PackedLayer pack_layer(const Matrix& W, const Vector& b) {
  if (b.size() != W.rows()) fail(ErrorCode::DimensionMismatch, "dense layer bias size");
  PackedLayer p;
  p.in = W.cols();
  p.out = W.rows();
  p.bias = b;
  const Eigen::Index n_panels = (p.out + kPanel - 1) / kPanel;
  p.panels.assign(static_cast<std::size_t>(n_panels * p.in * kPanel), 0.0);
  for (Eigen::Index q = 0; q < n_panels; ++q) {
    double* dst = p.panels.data() + q * p.in * kPanel;
    for (Eigen::Index j = 0; j < kPanel && q * kPanel + j < p.out; ++j) {
      const double* src = W.data() + (q * kPanel + j) * p.in;
      for (Eigen::Index k = 0; k < p.in; ++k) dst[k * kPanel + j] = src[k];
    }
  }
  return p;
}

void dense_forward(const Matrix& X, const PackedLayer& layer, Matrix& Y) {
  const Eigen::Index rows = X.rows();
  const Eigen::Index in = layer.in;
  const Eigen::Index out = layer.out;
  if (X.cols() != in) fail(ErrorCode::DimensionMismatch, "dense layer input width");

  Y.resize(rows, out);
  constexpr int kRows = 6;
  const Eigen::Index n_panels = (out + kPanel - 1) / kPanel;
  for (Eigen::Index q = 0; q < n_panels; ++q) {
    const double* panel = layer.panels.data() + q * in * kPanel;
    const double* bias = layer.bias.data() + q * kPanel;
    const Eigen::Index col0 = q * kPanel;
    const Eigen::Index width = std::min(kPanel, out - col0);
    Eigen::Index r = 0;
    for (; r + kRows <= rows; r += kRows) emit_block<kRows>(X.data() + r * in, in, panel, bias, width, Y, r, col0);
    const double* x = X.data() + r * in;
    switch (rows - r) {
      case 5: emit_block<5>(x, in, panel, bias, width, Y, r, col0); break;
      case 4: emit_block<4>(x, in, panel, bias, width, Y, r, col0); break;
      case 3: emit_block<3>(x, in, panel, bias, width, Y, r, col0); break;
      case 2: emit_block<2>(x, in, panel, bias, width, Y, r, col0); break;
      case 1: emit_block<1>(x, in, panel, bias, width, Y, r, col0); break;
      default: break;
    }
  }
}

void dense_forward(const Matrix& X, const Matrix& W, const Vector& b, Matrix& Y) {
  if (W.cols() != X.cols() || b.size() != W.rows()) fail(ErrorCode::DimensionMismatch, "dense layer shapes");
  dense_forward(X, pack_layer(W, b), Y);
}

}  // namespace mcenhance::nn
