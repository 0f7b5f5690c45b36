// Data-parallel kernels. Each has an OpenMP path and a serial reference
// path that performs the same arithmetic in the same order, so the two
// agree bit for bit.

#pragma once

#include <span>
#include <vector>

#include "consonance/design.hpp"
#include "consonance/features.hpp"
#include "consonance/spectrum.hpp"

namespace consonance::kernels {

enum class Execution { kSerial, kParallel };

/// out[c * n_chords + y] = D(spectrum of rep c, spectrum of chord y).
void spectral_distance_table(const SpectrumCache& spectra, std::span<const int> class_reps,
                             std::span<double> out, Execution exec);

/// out[c * n_chords + y] = min_voice_leading(rep c, chord y).
void voice_leading_table(std::span<const int> class_reps, std::span<double> out, Execution exec);

/// Raw harmonicity of each listed chord.
void harmonicity_values(const SpectrumCache& spectra, std::span<const int> chord_ids,
                        VirtualPitchMode mode, std::span<double> out, Execution exec);

/// Unnormalized virtual pitch-class spectrum: the template match of a
/// chord spectrum against the harmonic tone on pitch class 0 rotated to
/// every bin.
void virtual_pitch_row(std::span<const double> tone0, std::span<const double> row,
                       VirtualPitchMode mode, std::span<double> out);

struct ContextPartial {
  double cost = 0.0;
  std::vector<double> gradient;
};

/// Negative log-likelihood and its gradient contributed by one context.
/// Inactive features carry zero weight and zero gradient.
ContextPartial evaluate_context(const ContextBlock& block, int n_symbols, int n_features,
                                std::span<const double> weights, FeatureMask mask);

struct Evaluation {
  double cost = 0.0;
  std::vector<double> gradient;
};

/// Sums evaluate_context over all contexts. Partials are reduced in context
/// order regardless of execution mode.
Evaluation evaluate(const Design& design, std::span<const double> weights, FeatureMask mask,
                    Execution exec);

/// Softmax of the scores sum_j w_j f_j over the symbols of one feature
/// matrix, with max subtraction.
void conditional_probabilities(std::span<const double> features, int n_symbols, int n_features,
                               std::span<const double> weights, FeatureMask mask,
                               std::span<double> out);

}  // namespace consonance::kernels
