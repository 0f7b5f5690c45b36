// Exponential-family energy model of chord sequences: conditional
// probabilities, corpus likelihood and its gradient, maximum-likelihood
// fitting and ancestral sampling.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "consonance/corpus.hpp"
#include "consonance/design.hpp"
#include "consonance/features.hpp"
#include "consonance/kernels.hpp"
#include "consonance/optimizer.hpp"

namespace consonance {

/// Groups a collapsed corpus by context, pointing each block at the
/// feature set's standardized context features.
Design make_design(const CollapsedCorpus& corpus, std::shared_ptr<const FeatureSet> features);

class EnergyModel {
 public:
  EnergyModel(std::shared_ptr<const FeatureSet> features, FeatureArray weights,
              FeatureMask mask = FeatureMask::all(kNumFeatures));

  const FeatureSet& features() const { return *features_; }
  std::shared_ptr<const FeatureSet> feature_set() const { return features_; }
  const FeatureArray& weights() const { return weights_; }
  FeatureMask mask() const { return mask_; }

  /// -sum_j w_j f_j(ctx, x) over active features.
  double energy(std::optional<PitchClassSet> ctx, PitchClassSet x) const;

  /// P(x | ctx) for every alphabet chord, indexed by chord id.
  std::vector<double> conditional_distribution(std::optional<PitchClassSet> ctx) const;

 private:
  std::shared_ptr<const FeatureSet> features_;
  FeatureArray weights_;
  FeatureMask mask_;
};

/// Total negative log-likelihood in nats, evaluated once per collapsed
/// class and weighted by its count.
double corpus_cost(const CollapsedCorpus& corpus, const EnergyModel& model,
                   kernels::Execution exec = kernels::Execution::kParallel);
std::vector<double> corpus_gradient(const CollapsedCorpus& corpus, const EnergyModel& model,
                                    kernels::Execution exec = kernels::Execution::kParallel);

/// Event-by-event evaluation that recomputes every candidate's features
/// from the pair lookups; used to check the collapsed path.
kernels::Evaluation naive_corpus_evaluation(std::span<const Piece> pieces, const EnergyModel& model);

struct FitOptions {
  double ridge = 0.0;
  BfgsOptions bfgs;
  /// Starting weights (all features); zeros when empty.
  std::vector<double> initial;
  kernels::Execution execution = kernels::Execution::kParallel;
};

struct FitResult {
  std::vector<double> weights;  // one per design feature; inactive ones are 0
  FeatureMask mask;
  double ridge = 0.0;
  double cost = 0.0;           // unpenalized negative log-likelihood, nats
  double cross_entropy = 0.0;  // nats per chord
  std::int64_t n_events = 0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;  // max-norm of the penalized gradient
};

/// Minimizes cost + ridge * |w|^2 / 2 over the active features by BFGS.
/// Throws InputError for a design without events.
FitResult fit(const Design& design, FeatureMask mask, const FitOptions& options = {});

/// Ancestral sampling of `length` chords, reproducible from the seed.
std::vector<PitchClassSet> sample_sequence(const EnergyModel& model, int length, std::uint64_t seed);

}  // namespace consonance
