#pragma once

#include <bit>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace consonance {

struct Observation {
  int symbol;
  std::int64_t count;
};

/// One conditioning context: the feature matrix of every candidate symbol
/// (row-major [symbol][feature]) and the observed continuations.
struct ContextBlock {
  std::span<const double> features;
  std::vector<Observation> observations;
  std::int64_t events = 0;
};

/// The data an energy-model fit sees: a symbol alphabet, a feature count,
/// and the observed continuations grouped by context. Feature storage is
/// owned elsewhere and kept alive through `storage`.
struct Design {
  int n_symbols = 0;
  int n_features = 0;
  std::vector<ContextBlock> contexts;
  std::int64_t total_events = 0;
  std::shared_ptr<const void> storage;
};

/// Active-feature bitmask over a design's feature columns.
class FeatureMask {
 public:
  constexpr FeatureMask() = default;
  constexpr explicit FeatureMask(std::uint32_t bits) : bits_(bits) {}

  static constexpr FeatureMask all(int n_features) { return FeatureMask((1u << n_features) - 1u); }
  static constexpr FeatureMask none() { return FeatureMask(0u); }
  static constexpr FeatureMask only(int feature) { return FeatureMask(1u << feature); }

  constexpr bool has(int feature) const { return (bits_ >> feature) & 1u; }
  constexpr FeatureMask with(int feature) const { return FeatureMask(bits_ | (1u << feature)); }
  constexpr FeatureMask without(int feature) const { return FeatureMask(bits_ & ~(1u << feature)); }
  constexpr std::uint32_t bits() const { return bits_; }
  int count() const { return std::popcount(bits_); }
  bool empty() const { return bits_ == 0; }

  friend constexpr bool operator==(FeatureMask, FeatureMask) = default;

 private:
  std::uint32_t bits_ = 0;
};

}  // namespace consonance
