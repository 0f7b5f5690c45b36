// Discretized pitch-class spectra and the cosine spectral distance.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "consonance/pcset.hpp"

namespace consonance {

struct SpectrumParams {
  double rho = 0.75;      // harmonic roll-off
  double sigma = 0.0683;  // Gaussian smoothing SD, in semitones
  int n_harmonics = 12;
  int n_bins = 1200;

  /// Throws std::invalid_argument unless rho, sigma > 0, n_harmonics >= 1
  /// and n_bins is a positive multiple of 12.
  void validate() const;
  int bins_per_semitone() const { return n_bins / kPitchClasses; }
  std::uint64_t hash() const;

  friend bool operator==(const SpectrumParams&, const SpectrumParams&) = default;
};

/// Perceptual weight sampled at the left endpoint of each integration
/// subinterval: bin k holds the weight at pitch class 12k / n_bins.
using Spectrum = std::vector<double>;

Spectrum harmonic_tone_spectrum(PitchClass x, const SpectrumParams& params = {});
Spectrum pcset_spectrum(PitchClassSet x, const SpectrumParams& params = {});

/// 1 - cosine similarity. Throws std::domain_error on a zero-norm input and
/// std::invalid_argument on mismatched lengths.
double spectral_distance(std::span<const double> a, std::span<const double> b);

/// Rotates a spectrum so that out[(k + shift) mod n] = in[k].
Spectrum circular_shift(std::span<const double> in, int shift);

/// Spectra of every alphabet chord under one parameter set, row-major by
/// chord id. Rows are assembled from integer shifts of a single tone
/// spectrum, so transposition is an exact bin rotation.
class SpectrumCache {
 public:
  explicit SpectrumCache(const SpectrumParams& params);

  const SpectrumParams& params() const { return params_; }
  int n_bins() const { return params_.n_bins; }
  std::span<const double> row(int chord_id) const {
    return {data_.data() + static_cast<std::size_t>(chord_id) * static_cast<std::size_t>(params_.n_bins),
            static_cast<std::size_t>(params_.n_bins)};
  }
  std::span<const double> tone(int pc) const;
  /// Euclidean norm of each row.
  double norm(int chord_id) const { return norms_[static_cast<std::size_t>(chord_id)]; }

  /// Binary layout: "PCSPEC01", uint32 endianness marker 0x01020304 in host
  /// order, rho, sigma (float64), n_harmonics, n_bins (int32), chord count
  /// (int32), alphabet ordering hash (uint64), then the 12 single-tone rows
  /// and the chord-major float64 rows.
  void save(const std::filesystem::path& path) const;
  /// Throws InputError when the header does not match params or the alphabet.
  static SpectrumCache load(const std::filesystem::path& path, const SpectrumParams& params);

 private:
  SpectrumCache() = default;
  void compute_norms();

  SpectrumParams params_;
  std::vector<double> tones_;
  std::vector<double> data_;
  std::vector<double> norms_;
};

}  // namespace consonance
