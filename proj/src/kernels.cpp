#include "consonance/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "consonance/voice_leading.hpp"

namespace consonance::kernels {

namespace {

template <typename Body>
void for_each_index(int n, Execution exec, Body&& body) {
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) body(i);
  } else {
    for (int i = 0; i < n; ++i) body(i);
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

void spectral_distance_table(const SpectrumCache& spectra, std::span<const int> class_reps,
                             std::span<double> out, Execution exec) {
  const int n_chords = ChordAlphabet::instance().size();
  const auto n_bins = static_cast<std::size_t>(spectra.n_bins());
  for_each_index(static_cast<int>(class_reps.size()), exec, [&](int c) {
    const int rep = class_reps[static_cast<std::size_t>(c)];
    const double* a = spectra.row(rep).data();
    const double na = spectra.norm(rep);
    double* dst = out.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(n_chords);
    for (int y = 0; y < n_chords; ++y) {
      const double sim = dot(a, spectra.row(y).data(), n_bins) / (na * spectra.norm(y));
      dst[y] = std::clamp(1.0 - sim, 0.0, 1.0);
    }
  });
}

void voice_leading_table(std::span<const int> class_reps, std::span<double> out, Execution exec) {
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  const int n_chords = alphabet.size();
  for_each_index(static_cast<int>(class_reps.size()), exec, [&](int c) {
    const PitchClassSet rep = alphabet.chord(class_reps[static_cast<std::size_t>(c)]);
    double* dst = out.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(n_chords);
    for (int y = 0; y < n_chords; ++y) dst[y] = min_voice_leading(rep, alphabet.chord(y));
  });
}

void virtual_pitch_row(std::span<const double> tone0, std::span<const double> row,
                       VirtualPitchMode mode, std::span<double> out) {
  const std::size_t n = row.size();
  std::vector<double> doubled(2 * n);
  std::copy(row.begin(), row.end(), doubled.begin());
  std::copy(row.begin(), row.end(), doubled.begin() + static_cast<std::ptrdiff_t>(n));
  const double norms = std::sqrt(dot(tone0.data(), tone0.data(), n)) * std::sqrt(dot(row.data(), row.data(), n));
  for (std::size_t k = 0; k < n; ++k) {
    // The template rotated to bin k, dotted with the row.
    const double sim = std::clamp(dot(tone0.data(), doubled.data() + k, n) / norms, 0.0, 1.0);
    out[k] = mode == VirtualPitchMode::kSimilarity ? sim : 1.0 - sim;
  }
}

void harmonicity_values(const SpectrumCache& spectra, std::span<const int> chord_ids,
                        VirtualPitchMode mode, std::span<double> out, Execution exec) {
  const auto n_bins = static_cast<std::size_t>(spectra.n_bins());
  const double width = static_cast<double>(kPitchClasses) / static_cast<double>(n_bins);
  for_each_index(static_cast<int>(chord_ids.size()), exec, [&](int i) {
    std::vector<double> q(n_bins);
    virtual_pitch_row(spectra.tone(0), spectra.row(chord_ids[static_cast<std::size_t>(i)]), mode, q);
    const double mass = width * std::accumulate(q.begin(), q.end(), 0.0);
    for (double& v : q) v /= mass;
    out[static_cast<std::size_t>(i)] = kl_from_uniform(q);
  });
}

ContextPartial evaluate_context(const ContextBlock& block, int n_symbols, int n_features,
                                std::span<const double> weights, FeatureMask mask) {
  const auto k = static_cast<std::size_t>(n_features);
  std::vector<double> w(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    if (mask.has(static_cast<int>(j))) w[j] = weights[j];
  }

  std::vector<double> score(static_cast<std::size_t>(n_symbols));
  double max_score = -std::numeric_limits<double>::infinity();
  for (int x = 0; x < n_symbols; ++x) {
    const double* f = block.features.data() + static_cast<std::size_t>(x) * k;
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += w[j] * f[j];
    score[static_cast<std::size_t>(x)] = s;
    max_score = std::max(max_score, s);
  }

  long double z = 0.0L;
  std::vector<long double> moment(k, 0.0L);
  for (int x = 0; x < n_symbols; ++x) {
    const double e = std::exp(score[static_cast<std::size_t>(x)] - max_score);
    z += e;
    const double* f = block.features.data() + static_cast<std::size_t>(x) * k;
    for (std::size_t j = 0; j < k; ++j) moment[j] += static_cast<long double>(e * f[j]);
  }
  const long double log_z = static_cast<long double>(max_score) + std::log(z);

  ContextPartial partial;
  partial.gradient.assign(k, 0.0);
  long double cost = 0.0L;
  std::vector<long double> observed(k, 0.0L);
  for (const Observation& obs : block.observations) {
    const auto count = static_cast<long double>(obs.count);
    cost += count * (log_z - static_cast<long double>(score[static_cast<std::size_t>(obs.symbol)]));
    const double* f = block.features.data() + static_cast<std::size_t>(obs.symbol) * k;
    for (std::size_t j = 0; j < k; ++j) observed[j] += count * static_cast<long double>(f[j]);
  }
  partial.cost = static_cast<double>(cost);
  for (std::size_t j = 0; j < k; ++j) {
    if (!mask.has(static_cast<int>(j))) continue;
    const long double expected = moment[j] / z;
    partial.gradient[j] = static_cast<double>(static_cast<long double>(block.events) * expected - observed[j]);
  }
  return partial;
}

Evaluation evaluate(const Design& design, std::span<const double> weights, FeatureMask mask,
                    Execution exec) {
  const int n = static_cast<int>(design.contexts.size());
  std::vector<ContextPartial> partials(static_cast<std::size_t>(n));
  for_each_index(n, exec, [&](int c) {
    partials[static_cast<std::size_t>(c)] = evaluate_context(design.contexts[static_cast<std::size_t>(c)],
                                                             design.n_symbols, design.n_features, weights, mask);
  });
  Evaluation result;
  result.gradient.assign(static_cast<std::size_t>(design.n_features), 0.0);
  long double cost = 0.0L;
  std::vector<long double> grad(static_cast<std::size_t>(design.n_features), 0.0L);
  for (const ContextPartial& p : partials) {
    cost += p.cost;
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += p.gradient[j];
  }
  result.cost = static_cast<double>(cost);
  for (std::size_t j = 0; j < grad.size(); ++j) result.gradient[j] = static_cast<double>(grad[j]);
  return result;
}

void conditional_probabilities(std::span<const double> features, int n_symbols, int n_features,
                               std::span<const double> weights, FeatureMask mask,
                               std::span<double> out) {
  const auto k = static_cast<std::size_t>(n_features);
  double max_score = -std::numeric_limits<double>::infinity();
  for (int x = 0; x < n_symbols; ++x) {
    const double* f = features.data() + static_cast<std::size_t>(x) * k;
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (mask.has(static_cast<int>(j))) s += weights[j] * f[j];
    }
    out[static_cast<std::size_t>(x)] = s;
    max_score = std::max(max_score, s);
  }
  long double z = 0.0L;
  for (int x = 0; x < n_symbols; ++x) {
    double& v = out[static_cast<std::size_t>(x)];
    v = std::exp(v - max_score);
    z += v;
  }
  const double inv = static_cast<double>(1.0L / z);
  for (int x = 0; x < n_symbols; ++x) out[static_cast<std::size_t>(x)] *= inv;
}

}  // namespace consonance::kernels
