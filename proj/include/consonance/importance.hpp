// Feature importance (weight, explained entropy, unique explained entropy)
// with piece-level nonparametric bootstrap intervals.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "consonance/corpus.hpp"
#include "consonance/model.hpp"

namespace consonance {

enum class Measure { kWeight = 0, kExplainedEntropy = 1, kUniqueExplainedEntropy = 2 };
inline constexpr int kNumMeasures = 3;
std::string_view measure_name(Measure m);

/// Spectral and voice-leading distance weights are conventionally shown
/// with reversed sign, so that larger means "more consonant".
bool display_sign_reversed(std::string_view feature_name);

struct FeatureImportance {
  double weight = 0.0;
  double explained_entropy = 0.0;
  double unique_explained_entropy = 0.0;

  double get(Measure m) const;
};

struct ImportanceReport {
  std::vector<std::string> feature_names;
  std::vector<FeatureImportance> features;
  double null_cross_entropy = 0.0;
  double full_cross_entropy = 0.0;
  FitResult full_fit;
  std::vector<FitResult> single_fits;         // one feature each
  std::vector<FitResult> leave_one_out_fits;  // all but one feature
  int non_converged = 0;
  std::string level = "corpus";
  std::string piece_id;

  double value(int feature, Measure m) const { return features[static_cast<std::size_t>(feature)].get(m); }
};

/// Fits the full, null, single-feature and leave-one-out models. Entropies
/// are unpenalized cross entropies in nats per chord. When `warm_start` is
/// given, each fit starts from the matching fit of that report.
ImportanceReport feature_importance(const Design& design, std::span<const std::string> feature_names,
                                    const FitOptions& options = {},
                                    const ImportanceReport* warm_start = nullptr);
ImportanceReport feature_importance(const CollapsedCorpus& corpus, std::shared_ptr<const FeatureSet> features,
                                    const FitOptions& options = {});

std::vector<std::string> default_feature_names();

struct Interval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct BootstrapOptions {
  int replicates = 1000;
  std::uint64_t seed = 0;
  double level = 0.99;
  FitOptions fit;
  /// Start each replicate fit from the full-corpus estimate.
  bool warm_start = true;
  /// Run replicates on OpenMP threads (each replicate evaluates serially).
  bool parallel = true;
};

struct BootstrapResult {
  ImportanceReport estimate;  // on the full corpus
  std::vector<std::array<Interval, kNumMeasures>> intervals;  // [feature][measure]
  int replicates = 0;
  double level = 0.99;
  int failed_replicates = 0;  // replicates with at least one non-converged fit
  bool flagged = false;       // more than 1% of replicates failed

  const Interval& interval(int feature, Measure m) const {
    return intervals[static_cast<std::size_t>(feature)][static_cast<std::size_t>(m)];
  }
};

/// Linear-interpolation sample quantile of sorted values.
double quantile_sorted(std::span<const double> sorted, double p);

using DesignBuilder = std::function<Design(const CollapsedCorpus&)>;

/// Resamples whole pieces with replacement. Replicate r draws from its own
/// stream seeded by (seed, r), so results do not depend on scheduling.
/// Throws InputError for fewer than two pieces or replicates < 1.
BootstrapResult bootstrap(std::span<const CollapsedCorpus> pieces, const DesignBuilder& build,
                          std::span<const std::string> feature_names, const BootstrapOptions& options);
BootstrapResult bootstrap(std::span<const Piece> pieces, std::shared_ptr<const FeatureSet> features,
                          const BootstrapOptions& options);

struct CompositionImportance {
  std::vector<ImportanceReport> reports;
  std::vector<std::string> skipped;  // pieces with fewer than two chords
};

inline constexpr double kCompositionRidge = 1e-3;

/// One report per piece with at least two chords.
CompositionImportance per_composition_importance(std::span<const Piece> pieces,
                                                 std::shared_ptr<const FeatureSet> features,
                                                 const FitOptions& options);

}  // namespace consonance
