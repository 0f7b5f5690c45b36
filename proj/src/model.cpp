#include "consonance/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "consonance/random.hpp"

namespace consonance {

Design make_design(const CollapsedCorpus& corpus, std::shared_ptr<const FeatureSet> features) {
  Design design;
  design.n_symbols = kAlphabetSize;
  design.n_features = kNumFeatures;
  design.total_events = corpus.total_events();
  for (const CollapsedCorpus::Entry& e : corpus.entries()) {
    if (design.contexts.empty() || design.contexts.back().features.data() != features->context_features(e.context).data()) {
      design.contexts.push_back({features->context_features(e.context), {}, 0});
    }
    ContextBlock& block = design.contexts.back();
    block.observations.push_back({e.continuation, e.count});
    block.events += e.count;
  }
  // Holds the feature set itself as well, so the bank outlives the design.
  design.storage = std::shared_ptr<const void>(features, features.get());
  return design;
}

EnergyModel::EnergyModel(std::shared_ptr<const FeatureSet> features, FeatureArray weights, FeatureMask mask)
    : features_(std::move(features)), weights_(weights), mask_(mask) {
  if (!features_ || !features_->built()) throw StateError("energy model needs built feature caches");
  for (double w : weights_) {
    if (!std::isfinite(w)) throw std::invalid_argument("weights must be finite");
  }
}

double EnergyModel::energy(std::optional<PitchClassSet> ctx, PitchClassSet x) const {
  const FeatureVector f = features_->transition_features(ctx, x);
  double e = 0.0;
  for (int j = 0; j < kNumFeatures; ++j) {
    if (mask_.has(j)) e -= weights_[static_cast<std::size_t>(j)] * f.values[static_cast<std::size_t>(j)];
  }
  return e;
}

std::vector<double> EnergyModel::conditional_distribution(std::optional<PitchClassSet> ctx) const {
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  const FeatureSet::ContextRef ref = FeatureSet::context_of(ctx);
  std::vector<double> relative(static_cast<std::size_t>(alphabet.size()));
  kernels::conditional_probabilities(features_->context_features(ref.context), alphabet.size(), kNumFeatures,
                                     weights_, mask_, relative);
  if (ref.shift == 0) return relative;
  std::vector<double> out(relative.size());
  for (int y = 0; y < alphabet.size(); ++y) {
    out[static_cast<std::size_t>(alphabet.id(transpose(alphabet.chord(y), ref.shift)))] =
        relative[static_cast<std::size_t>(y)];
  }
  return out;
}

double corpus_cost(const CollapsedCorpus& corpus, const EnergyModel& model, kernels::Execution exec) {
  const Design design = make_design(corpus, model.feature_set());
  return kernels::evaluate(design, model.weights(), model.mask(), exec).cost;
}

std::vector<double> corpus_gradient(const CollapsedCorpus& corpus, const EnergyModel& model,
                                    kernels::Execution exec) {
  const Design design = make_design(corpus, model.feature_set());
  return kernels::evaluate(design, model.weights(), model.mask(), exec).gradient;
}

kernels::Evaluation naive_corpus_evaluation(std::span<const Piece> pieces, const EnergyModel& model) {
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  const FeatureSet& fs = model.features();
  const auto n = static_cast<std::size_t>(alphabet.size());
  std::vector<double> matrix(n * kNumFeatures);
  long double cost = 0.0L;
  std::array<long double, kNumFeatures> grad{};
  for (const Piece& piece : pieces) {
    std::optional<PitchClassSet> prev;
    for (const ChordEvent& event : piece.events) {
      for (std::size_t y = 0; y < n; ++y) {
        const FeatureVector f = fs.transition_features(prev, alphabet.chord(static_cast<int>(y)));
        std::copy(f.values.begin(), f.values.end(), matrix.begin() + static_cast<std::ptrdiff_t>(y * kNumFeatures));
      }
      ContextBlock block{matrix, {{alphabet.id(event.chord), 1}}, 1};
      const kernels::ContextPartial p =
          kernels::evaluate_context(block, alphabet.size(), kNumFeatures, model.weights(), model.mask());
      cost += p.cost;
      for (std::size_t j = 0; j < kNumFeatures; ++j) grad[j] += p.gradient[j];
      prev = event.chord;
    }
  }
  kernels::Evaluation out;
  out.cost = static_cast<double>(cost);
  for (long double g : grad) out.gradient.push_back(static_cast<double>(g));
  return out;
}

FitResult fit(const Design& design, FeatureMask mask, const FitOptions& options) {
  if (design.total_events <= 0) throw InputError("cannot fit an empty corpus");
  const auto k = static_cast<std::size_t>(design.n_features);
  std::vector<int> active;
  for (int j = 0; j < design.n_features; ++j) {
    if (mask.has(j)) active.push_back(j);
  }

  std::vector<double> full(k, 0.0);
  auto expand = [&](std::span<const double> x) {
    std::fill(full.begin(), full.end(), 0.0);
    for (std::size_t a = 0; a < active.size(); ++a) full[static_cast<std::size_t>(active[a])] = x[a];
  };
  double last_data_cost = 0.0;
  const Objective objective = [&](std::span<const double> x, std::span<double> grad) {
    expand(x);
    const kernels::Evaluation e = kernels::evaluate(design, full, mask, options.execution);
    last_data_cost = e.cost;
    double penalty = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      penalty += 0.5 * options.ridge * x[a] * x[a];
      grad[a] = e.gradient[static_cast<std::size_t>(active[a])] + options.ridge * x[a];
    }
    return e.cost + penalty;
  };

  std::vector<double> x0(active.size(), 0.0);
  if (!options.initial.empty()) {
    if (options.initial.size() != k) throw std::invalid_argument("initial weights have the wrong length");
    for (std::size_t a = 0; a < active.size(); ++a) x0[a] = options.initial[static_cast<std::size_t>(active[a])];
  }

  const BfgsResult r = minimize_bfgs(objective, x0, options.bfgs);
  // Re-evaluate at the returned point so the reported data cost matches it.
  std::vector<double> grad(active.size());
  objective(r.x, grad);

  FitResult result;
  expand(r.x);
  result.weights = full;
  result.mask = mask;
  result.ridge = options.ridge;
  result.cost = last_data_cost;
  result.n_events = design.total_events;
  result.cross_entropy = last_data_cost / static_cast<double>(design.total_events);
  result.converged = r.converged;
  result.iterations = r.iterations;
  for (double g : grad) result.gradient_norm = std::max(result.gradient_norm, std::abs(g));
  return result;
}

std::vector<PitchClassSet> sample_sequence(const EnergyModel& model, int length, std::uint64_t seed) {
  if (length < 1) throw std::invalid_argument("sequence length must be at least 1");
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  Rng rng(seed);
  std::vector<double> probabilities(static_cast<std::size_t>(alphabet.size()));
  std::vector<PitchClassSet> out;
  out.reserve(static_cast<std::size_t>(length));
  std::optional<PitchClassSet> prev;
  for (int i = 0; i < length; ++i) {
    const FeatureSet::ContextRef ref = FeatureSet::context_of(prev);
    kernels::conditional_probabilities(model.features().context_features(ref.context), alphabet.size(),
                                       kNumFeatures, model.weights(), model.mask(), probabilities);
    const int relative = sample_categorical(rng, probabilities);
    const PitchClassSet next = transpose(alphabet.chord(relative), ref.shift);
    out.push_back(next);
    prev = next;
  }
  return out;
}

}  // namespace consonance
