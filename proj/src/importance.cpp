#include "consonance/importance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "consonance/random.hpp"

namespace consonance {

std::string_view measure_name(Measure m) {
  switch (m) {
    case Measure::kWeight:
      return "weight";
    case Measure::kExplainedEntropy:
      return "explained_entropy";
    case Measure::kUniqueExplainedEntropy:
      return "unique_explained_entropy";
  }
  return "";
}

bool display_sign_reversed(std::string_view feature_name) {
  return feature_name == "spectral_distance" || feature_name == "voice_leading_distance";
}

double FeatureImportance::get(Measure m) const {
  switch (m) {
    case Measure::kWeight:
      return weight;
    case Measure::kExplainedEntropy:
      return explained_entropy;
    case Measure::kUniqueExplainedEntropy:
      return unique_explained_entropy;
  }
  return 0.0;
}

std::vector<std::string> default_feature_names() {
  std::vector<std::string> names;
  for (int j = 0; j < kNumFeatures; ++j) names.emplace_back(feature_name(j));
  return names;
}

ImportanceReport feature_importance(const Design& design, std::span<const std::string> feature_names,
                                    const FitOptions& options, const ImportanceReport* warm_start) {
  if (static_cast<int>(feature_names.size()) != design.n_features) {
    throw std::invalid_argument("feature name count does not match the design");
  }
  const int k = design.n_features;
  const FeatureMask all = FeatureMask::all(k);

  auto run = [&](FeatureMask mask, const FitResult* start) {
    FitOptions o = options;
    if (start) o.initial = start->weights;
    return fit(design, mask, o);
  };

  ImportanceReport report;
  report.feature_names.assign(feature_names.begin(), feature_names.end());
  report.full_fit = run(all, warm_start ? &warm_start->full_fit : nullptr);
  report.null_cross_entropy = run(FeatureMask::none(), nullptr).cross_entropy;
  report.full_cross_entropy = report.full_fit.cross_entropy;
  report.non_converged += !report.full_fit.converged;
  report.features.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    report.single_fits.push_back(run(FeatureMask::only(j), warm_start ? &warm_start->single_fits[ju] : nullptr));
    report.leave_one_out_fits.push_back(
        run(all.without(j), warm_start ? &warm_start->leave_one_out_fits[ju] : nullptr));
    report.non_converged += !report.single_fits.back().converged;
    report.non_converged += !report.leave_one_out_fits.back().converged;

    FeatureImportance& fi = report.features[ju];
    fi.weight = report.full_fit.weights[ju];
    fi.explained_entropy = report.null_cross_entropy - report.single_fits.back().cross_entropy;
    fi.unique_explained_entropy = report.leave_one_out_fits.back().cross_entropy - report.full_cross_entropy;
  }
  return report;
}

ImportanceReport feature_importance(const CollapsedCorpus& corpus, std::shared_ptr<const FeatureSet> features,
                                    const FitOptions& options) {
  const std::vector<std::string> names = default_feature_names();
  return feature_importance(make_design(corpus, std::move(features)), names, options);
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BootstrapResult bootstrap(std::span<const CollapsedCorpus> pieces, const DesignBuilder& build,
                          std::span<const std::string> feature_names, const BootstrapOptions& options) {
  if (pieces.size() < 2) throw InputError("bootstrap needs at least two pieces");
  if (options.replicates < 1) throw InputError("bootstrap needs at least one replicate");
  if (!(options.level > 0.0 && options.level < 1.0)) throw InputError("confidence level must lie in (0, 1)");

  CollapsedCorpus whole;
  for (const CollapsedCorpus& p : pieces) whole.merge(p);

  BootstrapResult result;
  result.replicates = options.replicates;
  result.level = options.level;
  result.estimate = feature_importance(build(whole), feature_names, options.fit);

  const auto n_features = feature_names.size();
  const auto n_reps = static_cast<std::size_t>(options.replicates);
  // samples[feature][measure][replicate]
  std::vector<std::array<std::vector<double>, kNumMeasures>> samples(n_features);
  for (auto& per_feature : samples) {
    for (auto& v : per_feature) v.assign(n_reps, 0.0);
  }
  std::vector<int> failed(n_reps, 0);

  FitOptions replicate_fit = options.fit;
  if (options.parallel) replicate_fit.execution = kernels::Execution::kSerial;
  const ImportanceReport* warm = options.warm_start ? &result.estimate : nullptr;

  const int n = options.replicates;
  auto replicate = [&](int r) {
    Rng rng(stream_seed(options.seed, static_cast<std::uint64_t>(r)));
    std::vector<std::int64_t> multiplicity(pieces.size(), 0);
    for (std::size_t i = 0; i < pieces.size(); ++i) ++multiplicity[uniform_index(rng, pieces.size())];
    CollapsedCorpus resampled;
    for (std::size_t i = 0; i < pieces.size(); ++i) resampled.merge(pieces[i], multiplicity[i]);
    const ImportanceReport rep = feature_importance(build(resampled), feature_names, replicate_fit, warm);
    failed[static_cast<std::size_t>(r)] = rep.non_converged > 0;
    for (std::size_t j = 0; j < n_features; ++j) {
      for (int m = 0; m < kNumMeasures; ++m) {
        samples[j][static_cast<std::size_t>(m)][static_cast<std::size_t>(r)] =
            rep.value(static_cast<int>(j), static_cast<Measure>(m));
      }
    }
  };
  if (options.parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < n; ++r) replicate(r);
  } else {
    for (int r = 0; r < n; ++r) replicate(r);
  }

  const double alpha = 1.0 - options.level;
  result.intervals.resize(n_features);
  for (std::size_t j = 0; j < n_features; ++j) {
    for (int m = 0; m < kNumMeasures; ++m) {
      std::vector<double>& v = samples[j][static_cast<std::size_t>(m)];
      std::sort(v.begin(), v.end());
      Interval& iv = result.intervals[j][static_cast<std::size_t>(m)];
      iv.estimate = result.estimate.value(static_cast<int>(j), static_cast<Measure>(m));
      iv.lower = quantile_sorted(v, alpha / 2.0);
      iv.upper = quantile_sorted(v, 1.0 - alpha / 2.0);
    }
  }
  for (int f : failed) result.failed_replicates += f;
  result.flagged = result.failed_replicates > 0.01 * options.replicates;
  return result;
}

BootstrapResult bootstrap(std::span<const Piece> pieces, std::shared_ptr<const FeatureSet> features,
                          const BootstrapOptions& options) {
  std::vector<CollapsedCorpus> collapsed;
  collapsed.reserve(pieces.size());
  for (const Piece& p : pieces) collapsed.push_back(collapse(std::span<const Piece>(&p, 1)));
  const std::vector<std::string> names = default_feature_names();
  const DesignBuilder build = [&features](const CollapsedCorpus& c) { return make_design(c, features); };
  return bootstrap(collapsed, build, names, options);
}

CompositionImportance per_composition_importance(std::span<const Piece> pieces,
                                                 std::shared_ptr<const FeatureSet> features,
                                                 const FitOptions& options) {
  CompositionImportance out;
  for (const Piece& piece : pieces) {
    if (piece.events.size() < 2) {
      out.skipped.push_back(piece.id);
      continue;
    }
    ImportanceReport report = feature_importance(collapse(std::span<const Piece>(&piece, 1)), features, options);
    report.level = "composition";
    report.piece_id = piece.id;
    out.reports.push_back(std::move(report));
  }
  return out;
}

}  // namespace consonance
