// The four transition features, their caches, and standardization.

#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "consonance/pcset.hpp"
#include "consonance/spectrum.hpp"
#include "consonance/voice_leading.hpp"

namespace consonance {

enum class Feature : int { kChordSize = 0, kHarmonicity = 1, kSpectralDistance = 2, kVoiceLeading = 3 };
inline constexpr int kNumFeatures = 4;

std::string_view feature_name(int feature);
/// Accepts the names printed by feature_name(); throws InputError otherwise.
int feature_index(std::string_view name);

/// How the virtual pitch-class spectrum is read off the template match.
/// kSimilarity uses 1 - D (peaks at good template matches); kLiteralDistance
/// uses D itself, as the formula is printed.
enum class VirtualPitchMode { kSimilarity, kLiteralDistance };

std::string_view to_string(VirtualPitchMode mode);
VirtualPitchMode parse_virtual_pitch_mode(std::string_view text);

/// Q' sampled on the spectrum grid, normalized to unit rectangle-rule mass.
Spectrum virtual_pitch_spectrum(PitchClassSet x, const SpectrumParams& params = {},
                                VirtualPitchMode mode = VirtualPitchMode::kSimilarity);

/// KL divergence (bits) of a unit-mass density on [0, 12) from uniform.
double kl_from_uniform(std::span<const double> density);

double harmonicity_raw(PitchClassSet x, const SpectrumParams& params = {},
                       VirtualPitchMode mode = VirtualPitchMode::kSimilarity);

struct HarmonicityTable {
  std::vector<double> raw;         // by chord id
  std::vector<double> normalized;  // z-scored within each chord size
};

/// Z-scores raw values within chord-size groups using the population SD.
/// Groups with zero spread map to exactly 0.
HarmonicityTable normalize_harmonicity(std::vector<double> raw);

using FeatureArray = std::array<double, kNumFeatures>;

struct FeatureVector {
  FeatureArray values{};

  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
};

struct TransitionFeatureStats {
  FeatureArray mean{};
  FeatureArray sd{};

  FeatureVector standardize(const FeatureVector& raw) const;
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Population moments of value(cls, chord) over every ordered pair (a, b)
/// of a transposition-closed universe, summing once per class and weighting
/// by orbit size. value(cls, chord) must equal the feature of the pair
/// (representative of cls, chord).
Moments orbit_weighted_moments(std::span<const int> orbit_sizes, int n_chords,
                               const std::function<double(int cls, int chord)>& value);

struct FeatureSetOptions {
  SpectrumParams spectrum;
  VirtualPitchMode mode = VirtualPitchMode::kSimilarity;
  bool parallel = true;
  /// When set, spectra and pair tables are loaded from / saved to this
  /// directory, keyed by a hash of the parameters.
  std::optional<std::filesystem::path> cache_dir;

  std::uint64_t hash() const;
};

/// Feature caches for the whole alphabet: spectra, harmonicity, distance
/// tables between each transposition-class representative and every chord,
/// the transition-population statistics, and the standardized feature
/// matrix of every context (start symbol first, then one per class).
class FeatureSet {
 public:
  explicit FeatureSet(FeatureSetOptions options);

  /// Builds all caches; a no-op if already built.
  void build();
  bool built() const { return built_; }

  static std::shared_ptr<const FeatureSet> create(FeatureSetOptions options);

  const FeatureSetOptions& options() const { return options_; }
  const SpectrumCache& spectra() const;
  const HarmonicityTable& harmonicity() const;
  const TransitionFeatureStats& stats() const;

  /// Raw features of cur after prev (imputing the population means of the
  /// sequential features when prev is absent).
  FeatureVector raw_transition_features(std::optional<PitchClassSet> prev, PitchClassSet cur) const;
  FeatureVector transition_features(std::optional<PitchClassSet> prev, PitchClassSet cur) const;

  double spectral_distance(int cls, int chord_id) const;
  double voice_leading(int cls, int chord_id) const;

  /// Context 0 is the start symbol; context 1 + c is transposition class c.
  int n_contexts() const { return 1 + ChordAlphabet::instance().num_classes(); }
  struct ContextRef {
    int context;
    int shift;  // transpose(relative continuation, shift) == actual continuation
  };
  static ContextRef context_of(std::optional<PitchClassSet> prev);
  /// Standardized features of every alphabet chord after this context,
  /// row-major [chord id][feature].
  std::span<const double> context_features(int context) const;
  std::shared_ptr<const std::vector<double>> context_bank() const;

 private:
  void require_built() const;
  bool try_load_tables(const std::filesystem::path& path);
  void save_tables(const std::filesystem::path& path) const;

  FeatureSetOptions options_;
  bool built_ = false;
  std::unique_ptr<SpectrumCache> spectra_;
  HarmonicityTable harmonicity_;
  std::vector<double> spectral_table_;  // [class][chord]
  std::vector<double> voice_table_;     // [class][chord]
  TransitionFeatureStats stats_;
  std::shared_ptr<std::vector<double>> bank_;
};

}  // namespace consonance
