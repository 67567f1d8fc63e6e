// src/fft.cpp
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

#include "mcenhance/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "mcenhance/error.hpp"

namespace mcenhance::dsp {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft::Impl {
  int n = 0;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  explicit Impl(int size) : n(size) {
    const int bins = n / 2 + 1;
    std::lock_guard<std::mutex> lock(planner_mutex());
    real = fftw_alloc_real(static_cast<std::size_t>(n));
    spec = fftw_alloc_complex(static_cast<std::size_t>(bins));
    fwd = fftw_plan_dft_r2c_1d(n, real, spec, FFTW_ESTIMATE);
    // c2r destroys its input; the spectrum buffer is refilled before each use.
    inv = fftw_plan_dft_c2r_1d(n, spec, real, FFTW_ESTIMATE);
  }

  ~Impl() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
    fftw_free(real);
    fftw_free(spec);
  }
};

RealFft::RealFft(int n) {
  if (n <= 0) fail(ErrorCode::InvalidParams, "FFT size must be positive");
  impl_ = std::make_unique<Impl>(n);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

int RealFft::size() const noexcept { return impl_->n; }

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  const int n = impl_->n;
  if (in.size() > static_cast<std::size_t>(n) || out.size() != static_cast<std::size_t>(n_bins())) {
    fail(ErrorCode::ShapeMismatch, "RealFft::forward buffer sizes");
  }
  std::copy(in.begin(), in.end(), impl_->real);
  std::fill(impl_->real + in.size(), impl_->real + n, 0.0);
  fftw_execute(impl_->fwd);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {impl_->spec[k][0], impl_->spec[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  const int n = impl_->n;
  if (in.size() != static_cast<std::size_t>(n_bins()) || out.size() != static_cast<std::size_t>(n)) {
    fail(ErrorCode::ShapeMismatch, "RealFft::inverse buffer sizes");
  }
  for (std::size_t k = 0; k < in.size(); ++k) {
    impl_->spec[k][0] = in[k].real();
    impl_->spec[k][1] = in[k].imag();
  }
  fftw_execute(impl_->inv);
  std::copy(impl_->real, impl_->real + n, out.begin());
}

}  // namespace mcenhance::dsp
