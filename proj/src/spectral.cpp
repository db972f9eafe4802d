// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "difom/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <sstream>

namespace difom {

namespace {

// FFTW's planner is not thread-safe; plan execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : ptr(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!ptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* ptr;
};

class Plan2d {
 public:
  Plan2d(std::size_t h, std::size_t w, fftw_complex* buf, int sign) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), buf, buf, sign, FFTW_ESTIMATE);
    if (!plan_) throw std::runtime_error("fftw planning failed");
  }
  ~Plan2d() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  Plan2d(const Plan2d&) = delete;
  Plan2d& operator=(const Plan2d&) = delete;
  void run() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_ = nullptr;
};

void check_grid(std::size_t h, std::size_t w) {
  if (h < 2) throw DimensionError("height", "spectral transforms need height >= 2");
  if (w < 2) throw DimensionError("width", "spectral transforms need width >= 2");
}

}  // namespace

SpectralMap fft2d(const FeatureMap64& map) {
  check_grid(map.height(), map.width());
  SpectralMap out{map.channels(), map.height(), map.width(), {}};
  out.bins.resize(map.size());
  const std::size_t n = map.plane();
  FftwBuffer buf(n);
  Plan2d plan(map.height(), map.width(), buf.ptr, FFTW_FORWARD);
  for (std::size_t c = 0; c < map.channels(); ++c) {
    auto src = map.channel(c);
    for (std::size_t i = 0; i < n; ++i) {
      buf.ptr[i][0] = src[i];
      buf.ptr[i][1] = 0.0;
    }
    plan.run();
    for (std::size_t i = 0; i < n; ++i) out.bins[c * n + i] = {buf.ptr[i][0], buf.ptr[i][1]};
  }
  return out;
}

SpectralMap fft2d(const FeatureMap& map) { return fft2d(map.cast<double>()); }

FeatureMap64 ifft2d(const SpectralMap& spectrum, double tolerance) {
  check_grid(spectrum.height, spectrum.width);
  const std::size_t n = spectrum.height * spectrum.width;
  if (spectrum.bins.size() != spectrum.channels * n) {
    throw DimensionError("bins", "spectrum holds " + std::to_string(spectrum.bins.size()) + " bins, shape declares " +
                                     std::to_string(spectrum.channels * n));
  }
  FeatureMap64 out(spectrum.channels, spectrum.height, spectrum.width);
  FftwBuffer buf(n);
  Plan2d plan(spectrum.height, spectrum.width, buf.ptr, FFTW_BACKWARD);
  const double norm = 1.0 / static_cast<double>(n);
  double max_imag = 0.0, max_real = 0.0;
  for (std::size_t c = 0; c < spectrum.channels; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      buf.ptr[i][0] = spectrum.bins[c * n + i].real();
      buf.ptr[i][1] = spectrum.bins[c * n + i].imag();
    }
    plan.run();
    auto dst = out.channel(c);
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = buf.ptr[i][0] * norm;
      max_real = std::max(max_real, std::abs(dst[i]));
      max_imag = std::max(max_imag, std::abs(buf.ptr[i][1] * norm));
    }
  }
  if (max_imag > tolerance * std::max(1.0, max_real)) {
    std::ostringstream os;
    os << "inverse transform left an imaginary residue of " << max_imag
       << "; spectrum is not conjugate-symmetric";
    throw SymmetryError(max_imag, os.str());
  }
  return out;
}

RadialMaskPair make_radial_masks(std::size_t height, std::size_t width, double cutoff_fraction) {
  if (!(cutoff_fraction > 0.0 && cutoff_fraction < 1.0)) {
    throw std::invalid_argument("cutoff fraction must lie in (0, 1)");
  }
  check_grid(height, width);
  RadialMaskPair m{height, width, cutoff_fraction, std::vector<std::uint8_t>(height * width),
                   std::vector<std::uint8_t>(height * width)};
  const double hh = static_cast<double>(height / 2), hw = static_cast<double>(width / 2);
  const double r_max = std::sqrt(hh * hh + hw * hw);
  const double radius = cutoff_fraction * r_max;
  for (std::size_t p = 0; p < height; ++p) {
    const double dp = static_cast<double>(std::min(p, height - p));
    for (std::size_t q = 0; q < width; ++q) {
      const double dq = static_cast<double>(std::min(q, width - q));
      const bool low = std::sqrt(dp * dp + dq * dq) <= radius;
      m.lfc[p * width + q] = low ? 1 : 0;
      m.hfc[p * width + q] = low ? 0 : 1;
    }
  }
  return m;
}

FrequencyComponents decompose(const FeatureMap& fused, const RadialMaskPair& masks) {
  if (masks.height != fused.height() || masks.width != fused.width()) {
    throw DimensionError(masks.height != fused.height() ? "height" : "width",
                         "mask grid does not match the fused map");
  }
  const SpectralMap full = fft2d(fused);
  SpectralMap low = full, high = full;
  const std::size_t n = fused.plane();
  for (std::size_t c = 0; c < fused.channels(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      if (masks.lfc[i]) {
        high.bins[c * n + i] = 0.0;
      } else {
        low.bins[c * n + i] = 0.0;
      }
    }
  }
  return {ifft2d(low).cast<float>(), ifft2d(high).cast<float>()};
}

FrequencyComponents decompose(const FeatureMap& fused, double cutoff_fraction) {
  return decompose(fused, make_radial_masks(fused.height(), fused.width(), cutoff_fraction));
}

}  // namespace difom
