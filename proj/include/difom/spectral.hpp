// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "difom/feature_map.hpp"

namespace difom {

/// Per-channel 2-D spectrum, channel-major like FeatureMap.
struct SpectralMap {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::complex<double>> bins;

  std::complex<double>& at(std::size_t c, std::size_t p, std::size_t q) { return bins[(c * height + p) * width + q]; }
  const std::complex<double>& at(std::size_t c, std::size_t p, std::size_t q) const {
    return bins[(c * height + p) * width + q];
  }
};

/// The inverse transform produced an imaginary part too large to discard;
/// the spectrum was not conjugate-symmetric (usually a broken mask).
class SymmetryError : public std::runtime_error {
 public:
  SymmetryError(double residue, const std::string& what) : std::runtime_error(what), residue_(residue) {}
  double residue() const noexcept { return residue_; }

 private:
  double residue_;
};

/// Complementary binary masks over the unshifted (wrapped) frequency grid.
struct RadialMaskPair {
  std::size_t height = 0;
  std::size_t width = 0;
  double cutoff_fraction = 0.0;
  std::vector<std::uint8_t> lfc;
  std::vector<std::uint8_t> hfc;

  bool low(std::size_t p, std::size_t q) const { return lfc[p * width + q] != 0; }
};

struct FrequencyComponents {
  FeatureMap lfc;
  FeatureMap hfc;
};

inline constexpr double kDefaultCutoff = 0.25;
inline constexpr double kImagResidueTolerance = 1e-6;

/// Unnormalised forward DFT of every channel: X[p,q] = Σ_a Σ_b x[a,b] e^{-j2π(pa/H + qb/W)}.
SpectralMap fft2d(const FeatureMap64& map);
SpectralMap fft2d(const FeatureMap& map);

/// Inverse DFT with 1/(HW) scaling. Returns the real part; throws SymmetryError
/// when max |imag| exceeds tolerance * max(1, max |real|).
FeatureMap64 ifft2d(const SpectralMap& spectrum, double tolerance = kImagResidueTolerance);

/// Wrapped radial distance normalised by sqrt(⌊H/2⌋² + ⌊W/2⌋²); bins with
/// r <= cutoff go to the low-frequency mask, the rest to the high-frequency mask.
RadialMaskPair make_radial_masks(std::size_t height, std::size_t width, double cutoff_fraction);

/// Splits a fused map into low/high-frequency spatial components that sum to it.
FrequencyComponents decompose(const FeatureMap& fused, double cutoff_fraction = kDefaultCutoff);
FrequencyComponents decompose(const FeatureMap& fused, const RadialMaskPair& masks);

}  // namespace difom
