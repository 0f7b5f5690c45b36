#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <map>
#include <numeric>

#include "consonance/features.hpp"
#include "consonance/voice_leading.hpp"
#include "support.hpp"

using namespace consonance;
using testing::default_features;

namespace {

int id_of(PitchClassSet x) { return ChordAlphabet::instance().id(x); }

std::size_t argmax(const Spectrum& s) {
  return static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
}

}  // namespace

TEST_CASE("virtual pitch spectrum") {
  const Spectrum single = virtual_pitch_spectrum({0});
  CHECK(argmax(single) == 0);
  CHECK(0.01 * std::accumulate(single.begin(), single.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));

  const Spectrum triad = virtual_pitch_spectrum({0, 4, 7});
  CHECK(std::abs(0.01 * std::accumulate(triad.begin(), triad.end(), 0.0) - 1.0) < 1e-9);
  CHECK(triad[0] > triad[600]);
  CHECK(argmax(triad) == 0);

  const Spectrum literal = virtual_pitch_spectrum({0}, {}, VirtualPitchMode::kLiteralDistance);
  CHECK(std::abs(0.01 * std::accumulate(literal.begin(), literal.end(), 0.0) - 1.0) < 1e-9);
  // the literal reading puts its minimum where the similarity reading peaks
  CHECK(std::min_element(literal.begin(), literal.end()) - literal.begin() == 0);
}

TEST_CASE("kl_from_uniform") {
  CHECK(kl_from_uniform(std::vector<double>(1200, 1.0 / 12.0)) == doctest::Approx(0.0));
  // density 1/6 on half the circle: KL = log2 2 = 1 bit
  std::vector<double> half(1200, 0.0);
  std::fill(half.begin(), half.begin() + 600, 1.0 / 6.0);
  CHECK(kl_from_uniform(half) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("harmonicity matches the numpy oracle") {
  // values frozen from an independent numpy evaluation of the same grid
  CHECK(harmonicity_raw({0, 4, 7}) == doctest::Approx(0.94148356653300).epsilon(1e-9));
  CHECK(harmonicity_raw({0, 6}) == doctest::Approx(0.91845359544789).epsilon(1e-9));
  CHECK(harmonicity_raw({0, 1, 2}) == doctest::Approx(0.74452655388307).epsilon(1e-9));
  CHECK(harmonicity_raw({0}) == doctest::Approx(1.560257014444606).epsilon(1e-9));
  CHECK(harmonicity_raw({0, 6}, {}, VirtualPitchMode::kLiteralDistance) ==
        doctest::Approx(0.014634685719747).epsilon(1e-8));
  CHECK(harmonicity_raw({0, 4, 7}, {}, VirtualPitchMode::kLiteralDistance) ==
        doctest::Approx(0.017603465651612).epsilon(1e-8));
}

TEST_CASE("harmonicity is non-negative and transposition invariant") {
  const auto fs = default_features();
  const HarmonicityTable& table = fs->harmonicity();
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  CHECK(std::abs(harmonicity_raw({0, 4, 7}) - harmonicity_raw({2, 6, 9})) < 1e-9);
  for (int id = 0; id < alphabet.size(); ++id) {
    CHECK(table.raw[static_cast<std::size_t>(id)] >= 0.0);
    const int rep = alphabet.class_representatives()[static_cast<std::size_t>(alphabet.class_of(id))];
    CHECK(std::abs(table.raw[static_cast<std::size_t>(id)] - table.raw[static_cast<std::size_t>(rep)]) < 1e-9);
  }
  // table values computed the same way as the standalone function
  for (PitchClassSet x : {PitchClassSet{0, 4, 7}, PitchClassSet{1, 2, 3, 9}, PitchClassSet{5}}) {
    CHECK(table.raw[static_cast<std::size_t>(id_of(x))] == doctest::Approx(harmonicity_raw(x)).epsilon(1e-12));
  }
}

TEST_CASE("harmonicity normalization per chord size") {
  const HarmonicityTable& table = default_features()->harmonicity();
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  std::map<int, std::vector<double>> groups;
  for (int id = 0; id < alphabet.size(); ++id) {
    groups[alphabet.chord(id).size()].push_back(table.normalized[static_cast<std::size_t>(id)]);
  }
  for (const auto& [size, values] : groups) {
    // sizes 1, 11 and 12 are single transposition classes
    if (size == 1 || size == 11 || size == 12) {
      for (double v : values) CHECK(v == 0.0);
      continue;
    }
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= n;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-9);
  }
  CHECK(table.normalized[static_cast<std::size_t>(id_of({0, 4, 7}))] >
        table.normalized[static_cast<std::size_t>(id_of({0, 1, 2}))]);
}

TEST_CASE("normalize_harmonicity on a hand-made table") {
  std::vector<double> raw(kAlphabetSize, 0.0);
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  // size-2 group gets values 0 and 1 in alternation, everything else constant
  int flip = 0;
  for (int id = 0; id < alphabet.size(); ++id) {
    raw[static_cast<std::size_t>(id)] = alphabet.chord(id).size() == 2 ? (flip++ % 2) : 3.0;
  }
  const HarmonicityTable t = normalize_harmonicity(raw);
  for (int id = 0; id < alphabet.size(); ++id) {
    const double v = t.normalized[static_cast<std::size_t>(id)];
    if (alphabet.chord(id).size() != 2) {
      CHECK(v == 0.0);
    } else {
      // 66 dyads: 33 zeros and 33 ones, mean 0.5, population SD 0.5
      CHECK(std::abs(std::abs(v) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("orbit-weighted moments on a 4-pitch-class universe") {
  // chords are the 15 non-empty subsets of Z4; transposition is rotation
  auto rotate = [](int mask, int t) { return ((mask << t) | (mask >> (4 - t))) & 0xF; };
  auto rep_of = [&](int mask) {
    int best = mask;
    for (int t = 1; t < 4; ++t) best = std::min(best, rotate(mask, t));
    return best;
  };
  // a transposition-invariant pair feature
  auto feature = [&](int a, int b) {
    int d = 0;
    for (int t = 0; t < 4; ++t) d += std::popcount(static_cast<unsigned>(rotate(a, t) & b)) * (t + 1);
    return static_cast<double>(d + std::popcount(static_cast<unsigned>(a)) * std::popcount(static_cast<unsigned>(b)));
  };
  std::vector<int> reps, orbits;
  for (int m = 1; m < 16; ++m) {
    if (rep_of(m) != m) continue;
    reps.push_back(m);
    int orbit = 0;
    for (int x = 1; x < 16; ++x) orbit += rep_of(x) == m;
    orbits.push_back(orbit);
  }
  REQUIRE(std::accumulate(orbits.begin(), orbits.end(), 0) == 15);

  const Moments weighted = orbit_weighted_moments(orbits, 15, [&](int cls, int chord) {
    return feature(reps[static_cast<std::size_t>(cls)], chord + 1);
  });
  double sum = 0.0, sum_sq = 0.0;
  for (int a = 1; a < 16; ++a) {
    for (int b = 1; b < 16; ++b) {
      sum += feature(a, b);
      sum_sq += feature(a, b) * feature(a, b);
    }
  }
  const double mean = sum / 225.0;
  CHECK(weighted.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(weighted.variance == doctest::Approx(sum_sq / 225.0 - mean * mean).epsilon(1e-12));
}

TEST_CASE("transition stats equal direct enumeration of all ordered pairs") {
  const auto fs = default_features();
  const TransitionFeatureStats& stats = fs->stats();
  CHECK(stats.mean[0] == doctest::Approx(12.0 * 2048.0 / 4095.0).epsilon(1e-12));
  CHECK(stats.mean[0] == doctest::Approx(6.0015).epsilon(1e-4));
  CHECK(stats.sd[2] > 0.0);

  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  std::array<long double, 4> sum{}, sum_sq{};
  std::array<long double, 4> zsum{}, zsum_sq{};
  for (int a = 0; a < alphabet.size(); ++a) {
    const int cls = alphabet.class_of(a);
    const int shift = alphabet.shift_of(a);
    for (int b = 0; b < alphabet.size(); ++b) {
      // the tables are indexed by (class, chord relative to the representative)
      const int rel = alphabet.id(transpose(alphabet.chord(b), -shift));
      const std::array<double, 4> raw{static_cast<double>(alphabet.chord(b).size()),
                                      fs->harmonicity().normalized[static_cast<std::size_t>(b)],
                                      fs->spectral_distance(cls, rel), fs->voice_leading(cls, rel)};
      for (std::size_t j = 0; j < 4; ++j) {
        sum[j] += raw[j];
        sum_sq[j] += static_cast<long double>(raw[j]) * raw[j];
        const double z = (raw[j] - stats.mean[j]) / stats.sd[j];
        zsum[j] += z;
        zsum_sq[j] += static_cast<long double>(z) * z;
      }
    }
  }
  const long double n = 4095.0L * 4095.0L;
  for (std::size_t j = 0; j < 4; ++j) {
    const long double mean = sum[j] / n;
    const long double var = sum_sq[j] / n - mean * mean;
    CHECK(std::abs(static_cast<double>(mean) - stats.mean[j]) < 1e-9);
    CHECK(std::abs(std::sqrt(static_cast<double>(var)) - stats.sd[j]) < 1e-9);
    const long double zmean = zsum[j] / n;
    CHECK(std::abs(static_cast<double>(zmean)) < 1e-9);
    CHECK(std::abs(static_cast<double>(zsum_sq[j] / n - zmean * zmean) - 1.0) < 1e-6);
  }
}

TEST_CASE("transition features") {
  const auto fs = default_features();
  const TransitionFeatureStats& stats = fs->stats();

  const FeatureVector start = fs->transition_features(std::nullopt, {0, 4, 7});
  CHECK(start[Feature::kSpectralDistance] == 0.0);
  CHECK(start[Feature::kVoiceLeading] == 0.0);

  const FeatureVector same = fs->raw_transition_features(PitchClassSet{2, 5, 9}, {2, 5, 9});
  CHECK(std::abs(same[Feature::kSpectralDistance]) < 1e-12);
  CHECK(same[Feature::kVoiceLeading] == 0.0);

  // compose from the individual operations
  const PitchClassSet prev{0, 4, 7}, cur{5, 9, 0};
  const FeatureVector raw = fs->raw_transition_features(prev, cur);
  CHECK(raw[Feature::kChordSize] == 3.0);
  CHECK(raw[Feature::kHarmonicity] == fs->harmonicity().normalized[static_cast<std::size_t>(id_of(cur))]);
  CHECK(raw[Feature::kSpectralDistance] ==
        doctest::Approx(spectral_distance(pcset_spectrum(prev), pcset_spectrum(cur))).epsilon(1e-12));
  CHECK(raw[Feature::kSpectralDistance] == doctest::Approx(0.4152635590105468).epsilon(1e-9));
  CHECK(raw[Feature::kVoiceLeading] == 3.0);
  const FeatureVector z = fs->transition_features(prev, cur);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(z.values[j] == doctest::Approx((raw.values[j] - stats.mean[j]) / stats.sd[j]).epsilon(1e-12));
  }
}

TEST_CASE("raw features are invariant under joint transposition") {
  const auto fs = default_features();
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const PitchClassSet a = testing::random_alphabet_chord(rng);
    const PitchClassSet b = testing::random_alphabet_chord(rng);
    const FeatureVector base = fs->raw_transition_features(a, b);
    for (int t = 1; t < 12; ++t) {
      const FeatureVector moved = fs->raw_transition_features(transpose(a, t), transpose(b, t));
      for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(moved.values[j] - base.values[j]) < 1e-9);
    }
    CHECK(base[Feature::kVoiceLeading] == min_voice_leading(a, b));
  }
}

TEST_CASE("context feature bank matches transition_features") {
  const auto fs = default_features();
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const PitchClassSet prev = testing::random_alphabet_chord(rng);
    const auto ref = FeatureSet::context_of(prev);
    const auto block = fs->context_features(ref.context);
    for (int k = 0; k < 20; ++k) {
      const int rel = static_cast<int>(uniform_index(rng, kAlphabetSize));
      const PitchClassSet cur = transpose(alphabet.chord(rel), ref.shift);
      const FeatureVector z = fs->transition_features(prev, cur);
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(block[static_cast<std::size_t>(rel) * 4 + j] == doctest::Approx(z.values[j]).epsilon(1e-12));
      }
    }
  }
  const auto start = fs->context_features(0);
  const FeatureVector z = fs->transition_features(std::nullopt, {1, 6});
  CHECK(start[static_cast<std::size_t>(id_of({1, 6})) * 4 + 1] == z.values[1]);
}

TEST_CASE("feature names") {
  CHECK(feature_name(0) == "chord_size");
  CHECK(feature_name(3) == "voice_leading_distance");
  CHECK(feature_index("spectral_distance") == 2);
  CHECK_THROWS_AS(feature_index("roughness"), InputError);
  CHECK(parse_virtual_pitch_mode("literal") == VirtualPitchMode::kLiteralDistance);
  CHECK_THROWS_AS(parse_virtual_pitch_mode("other"), InputError);
}

TEST_CASE("unbuilt feature set raises StateError") {
  FeatureSet fs{FeatureSetOptions{}};
  CHECK_FALSE(fs.built());
  CHECK_THROWS_AS(fs.stats(), StateError);
  CHECK_THROWS_AS(fs.harmonicity(), StateError);
  CHECK_THROWS_AS(fs.transition_features(std::nullopt, {0}), StateError);
}

TEST_CASE("serial and parallel builds agree bit for bit, and the disk cache round trips") {
  const auto dir = std::filesystem::temp_directory_path() / "consonance_features_test";
  std::filesystem::remove_all(dir);
  FeatureSetOptions serial;
  serial.parallel = false;
  serial.cache_dir = dir;
  FeatureSet a{serial};
  a.build();
  const auto reference = default_features();
  const auto bank_a = a.context_bank();
  const auto bank_ref = reference->context_bank();
  REQUIRE(bank_a->size() == bank_ref->size());
  CHECK(std::memcmp(bank_a->data(), bank_ref->data(), bank_a->size() * sizeof(double)) == 0);
  CHECK(!std::filesystem::is_empty(dir));

  FeatureSet b{serial};
  b.build();  // loads from the cache
  CHECK(std::memcmp(b.context_bank()->data(), bank_ref->data(), bank_ref->size() * sizeof(double)) == 0);
  std::filesystem::remove_all(dir);
}
