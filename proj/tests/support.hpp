// Shared fixtures for the test executables: one feature set per process,
// synthetic corpora and brute-force oracles.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include "consonance/corpus.hpp"
#include "consonance/design.hpp"
#include "consonance/features.hpp"
#include "consonance/model.hpp"
#include "consonance/pcset.hpp"
#include "consonance/random.hpp"

namespace testing {

using namespace consonance;

inline std::shared_ptr<const FeatureSet> default_features() {
  static const std::shared_ptr<const FeatureSet> fs = FeatureSet::create({});
  return fs;
}

inline PitchClassSet random_chord(Rng& rng, int max_size = 12) {
  std::uint16_t mask = 0;
  const auto size = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_size)));
  while (std::popcount(mask) < size) mask |= static_cast<std::uint16_t>(1u << uniform_index(rng, 12));
  return PitchClassSet::from_mask(mask);
}

inline PitchClassSet random_alphabet_chord(Rng& rng) {
  return ChordAlphabet::instance().chord(static_cast<int>(uniform_index(rng, kAlphabetSize)));
}

inline Piece make_piece(std::string id, const std::vector<PitchClassSet>& chords) {
  Piece p{std::move(id), {}};
  for (PitchClassSet c : chords) p.events.push_back({c, std::nullopt});
  return p;
}

/// n pieces of `length` chords sampled from the model. Sampled repeats are
/// kept: removing them would bias the data away from the model.
inline std::vector<Piece> sample_pieces(const EnergyModel& model, int n, int length, std::uint64_t seed) {
  std::vector<Piece> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(make_piece("s" + std::to_string(i),
                             sample_sequence(model, length, stream_seed(seed, static_cast<std::uint64_t>(i)))));
  }
  return out;
}

inline std::vector<Piece> uniform_pieces(int n, int length, std::uint64_t seed) {
  std::vector<Piece> out;
  for (int i = 0; i < n; ++i) {
    Rng rng(stream_seed(seed, static_cast<std::uint64_t>(i)));
    std::vector<PitchClassSet> chords;
    for (int k = 0; k < length; ++k) chords.push_back(random_alphabet_chord(rng));
    out.push_back(make_piece("u" + std::to_string(i), chords));
  }
  return out;
}

inline const FeatureArray kTrueWeights{0.5, 1.0, -1.0, -0.5};

/// Minimum-cost edge cover of the complete bipartite graph between x and y,
/// by trying every edge subset. Feasible up to about 3 x 4 members.
inline int brute_force_voice_leading_edges(PitchClassSet x, PitchClassSet y) {
  const std::vector<int> a = x.members(), b = y.members();
  const std::size_t n_edges = a.size() * b.size();
  int best = std::numeric_limits<int>::max();
  for (std::uint32_t subset = 1; subset < (1u << n_edges); ++subset) {
    std::uint32_t covered_a = 0, covered_b = 0;
    int cost = 0;
    for (std::size_t e = 0; e < n_edges; ++e) {
      if (!((subset >> e) & 1u)) continue;
      const std::size_t i = e / b.size(), j = e % b.size();
      covered_a |= 1u << i;
      covered_b |= 1u << j;
      cost += pc_distance(a[i], b[j]);
    }
    if (covered_a == (1u << a.size()) - 1 && covered_b == (1u << b.size()) - 1) best = std::min(best, cost);
  }
  return best;
}

/// Same quantity, enumerating for each member of x every non-empty set of
/// partners in y and tracking which members of y are covered.
inline int brute_force_voice_leading_rows(PitchClassSet x, PitchClassSet y) {
  const std::vector<int> a = x.members(), b = y.members();
  const std::uint32_t full = (1u << b.size()) - 1;
  constexpr int inf = std::numeric_limits<int>::max() / 2;
  std::vector<int> best(full + 1, inf);
  best[0] = 0;
  for (int pa : a) {
    std::vector<int> next(full + 1, inf);
    for (std::uint32_t covered = 0; covered <= full; ++covered) {
      if (best[covered] >= inf) continue;
      for (std::uint32_t partners = 1; partners <= full; ++partners) {
        int cost = best[covered];
        for (std::size_t j = 0; j < b.size(); ++j) {
          if ((partners >> j) & 1u) cost += pc_distance(pa, b[j]);
        }
        next[covered | partners] = std::min(next[covered | partners], cost);
      }
    }
    best = std::move(next);
  }
  return best[full];
}

/// A design with its own feature storage, for tests that need feature
/// matrices other than the chord features.
struct OwnedDesign {
  Design design;
  std::shared_ptr<std::vector<double>> storage;
};

/// Copies a chord design and appends a duplicate of column `source`.
inline OwnedDesign with_duplicated_feature(const Design& in, int source) {
  OwnedDesign out;
  const int k = in.n_features + 1;
  out.storage = std::make_shared<std::vector<double>>();
  out.storage->reserve(in.contexts.size() * static_cast<std::size_t>(in.n_symbols * k));
  for (const ContextBlock& block : in.contexts) {
    for (int s = 0; s < in.n_symbols; ++s) {
      for (int j = 0; j < in.n_features; ++j) {
        out.storage->push_back(block.features[static_cast<std::size_t>(s * in.n_features + j)]);
      }
      out.storage->push_back(block.features[static_cast<std::size_t>(s * in.n_features + source)]);
    }
  }
  out.design.n_symbols = in.n_symbols;
  out.design.n_features = k;
  out.design.total_events = in.total_events;
  std::size_t offset = 0;
  const auto stride = static_cast<std::size_t>(in.n_symbols * k);
  for (const ContextBlock& block : in.contexts) {
    out.design.contexts.push_back({std::span<const double>(out.storage->data() + offset, stride),
                                   block.observations, block.events});
    offset += stride;
  }
  out.design.storage = out.storage;
  return out;
}

}  // namespace testing
