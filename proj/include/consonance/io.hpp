// Run configuration and the CSV / JSON artifacts written by the CLI.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "consonance/corpus.hpp"
#include "consonance/features.hpp"
#include "consonance/importance.hpp"
#include "consonance/model.hpp"

namespace consonance {

struct RunConfig {
  SpectrumParams spectrum;
  VirtualPitchMode mode = VirtualPitchMode::kSimilarity;
  FeatureMask mask = FeatureMask::all(kNumFeatures);
  double ridge = 0.0;
  double composition_ridge = kCompositionRidge;
  int bootstrap = 1000;
  std::uint64_t seed = 0;
  double level = 0.99;
  bool keep_repeats = false;
  int threads = 0;  // 0: OpenMP default
  std::optional<std::filesystem::path> cache_dir;

  /// Everything that affects results. Threads and paths are left out.
  nlohmann::json to_json() const;
  /// FNV-1a of to_json().dump(), as 16 hex digits.
  std::string hash() const;
  FeatureSetOptions feature_options() const;
};

std::string format_double(double v);
std::string mask_to_string(FeatureMask mask);
/// Comma-separated feature names, or "none"/"all".
FeatureMask parse_mask(std::string_view text);

nlohmann::json fit_result_json(const FitResult& fit, const RunConfig& config);

struct WeightsFile {
  FeatureArray weights{};
  FeatureMask mask = FeatureMask::all(kNumFeatures);
};

/// Accepts a fit result ({"weights": {...}, ...}) or a bare
/// {"chord_size": w, ...} object. Missing features get weight 0 and are
/// masked out. Throws InputError on anything else.
WeightsFile read_weights(const std::filesystem::path& path);

/// Columns: piece_id, position, prev, cur, then the four raw features,
/// then the four standardized features with a "_std" suffix.
void write_features_csv(std::ostream& out, std::span<const Piece> pieces, const FeatureSet& features,
                        const RunConfig& config);

/// Columns: feature, measure, estimate, lower, upper, display_estimate,
/// display_lower, display_upper. The display columns reverse the weight
/// sign of spectral and voice-leading distance.
void write_importance_csv(std::ostream& out, const BootstrapResult& result, const RunConfig& config);
/// Columns: piece_id, feature, measure, value, display_value.
void write_composition_csv(std::ostream& out, const CompositionImportance& result, const RunConfig& config);

nlohmann::json importance_json(const BootstrapResult& result, const RunConfig& config);
nlohmann::json composition_json(const CompositionImportance& result, const RunConfig& config);

}  // namespace consonance
