// Acceptance suite. Prints one line per criterion:
//   acceptance            run all
//   acceptance 4 9        run the listed criteria
// Exit status is non-zero when a gating criterion fails. Criterion 12 needs
// a user corpus in CONSONANCE_CORPUS (plain or JSONL) and never gates.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "consonance/importance.hpp"
#include "consonance/kernels.hpp"
#include "consonance/voice_leading.hpp"
#include "support.hpp"

using namespace consonance;
using testing::default_features;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome verdict(bool ok, const std::string& detail) { return {ok ? Status::kPass : Status::kFail, detail}; }

template <typename... Args>
std::string fmt(Args&&... args) {
  std::ostringstream out;
  out << std::setprecision(10);
  (out << ... << args);
  return out.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome spectral_self_distance() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1);
  double worst_self = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Spectrum s = pcset_spectrum(testing::random_alphabet_chord(rng));
    worst_self = std::max(worst_self, std::abs(spectral_distance(s, s)));
  }
  const SpectrumCache cache{SpectrumParams{}};
  int asymmetric = 0, out_of_range = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = static_cast<int>(uniform_index(rng, kAlphabetSize));
    const auto b = static_cast<int>(uniform_index(rng, kAlphabetSize));
    const double d = spectral_distance(cache.row(a), cache.row(b));
    asymmetric += d != spectral_distance(cache.row(b), cache.row(a));
    out_of_range += !(d >= 0.0 && d <= 1.0);
  }
  const double t = seconds_since(t0);
  return verdict(worst_self <= 1e-9 && asymmetric == 0 && out_of_range == 0 && t < 10.0,
                 fmt("max |D(X,X)| ", worst_self, ", asymmetric ", asymmetric, ", out of range ", out_of_range,
                     ", ", std::setprecision(3), t, " s"));
}

Outcome transposition_invariance() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto fs = default_features();
  Rng rng(2);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const PitchClassSet a = testing::random_alphabet_chord(rng);
    const PitchClassSet b = testing::random_alphabet_chord(rng);
    const FeatureVector base = fs->raw_transition_features(a, b);
    for (int t = 0; t < 12; ++t) {
      const FeatureVector moved = fs->raw_transition_features(transpose(a, t), transpose(b, t));
      for (std::size_t j = 0; j < 4; ++j) worst = std::max(worst, std::abs(moved.values[j] - base.values[j]));
    }
  }
  const double t = seconds_since(t0);
  return verdict(worst <= 1e-9 && t < 60.0, fmt("max deviation ", worst, ", ", std::setprecision(3), t, " s"));
}

Outcome voice_leading_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<PitchClassSet> small;
  for (PitchClassSet c : ChordAlphabet::instance().chords()) {
    if (c.size() <= 3) small.push_back(c);
  }
  long pairs = 0, mismatches = 0;
  for (PitchClassSet x : small) {
    for (PitchClassSet y : small) {
      ++pairs;
      mismatches += min_voice_leading(x, y) != testing::brute_force_voice_leading_edges(x, y);
    }
  }
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const PitchClassSet x = testing::random_chord(rng, 5), y = testing::random_chord(rng, 5);
    ++pairs;
    mismatches += min_voice_leading(x, y) != testing::brute_force_voice_leading_rows(x, y);
  }
  const double t = seconds_since(t0);
  return verdict(mismatches == 0 && t < 120.0,
                 fmt(pairs, " pairs, ", mismatches, " mismatches, ", std::setprecision(3), t, " s"));
}

Outcome harmonicity_ordering() {
  const double tritone = harmonicity_raw({0, 6});
  const double major = harmonicity_raw({0, 4, 7});
  return verdict(tritone > major, fmt("H({0,6}) = ", tritone, ", H({0,4,7}) = ", major));
}

Outcome harmonicity_normalization() {
  const auto fs = default_features();
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  std::map<int, std::vector<double>> groups, raw;
  for (int id = 0; id < alphabet.size(); ++id) {
    const int size = alphabet.chord(id).size();
    groups[size].push_back(fs->harmonicity().normalized[static_cast<std::size_t>(id)]);
    raw[size].push_back(fs->harmonicity().raw[static_cast<std::size_t>(id)]);
  }
  double worst_mean = 0.0, worst_var = 0.0;
  bool edges_zero = true;
  std::string bad_sizes;
  for (const auto& [size, v] : groups) {
    if (size == 1 || size == 12) {
      for (double x : v) edges_zero = edges_zero && x == 0.0;
      continue;
    }
    const double n = static_cast<double>(v.size());
    double mean = 0.0, var = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= n;
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_var = std::max(worst_var, std::abs(var - 1.0));
    if (std::abs(mean) > 1e-9 || std::abs(var - 1.0) > 1e-9) {
      const auto [lo, hi] = std::minmax_element(raw[size].begin(), raw[size].end());
      bad_sizes += fmt(" size ", size, " (", v.size(), " chords, raw spread ", *hi - *lo, ")");
    }
  }
  return verdict(worst_mean <= 1e-9 && worst_var <= 1e-9 && edges_zero,
                 fmt("max |mean| ", worst_mean, ", max |var-1| ", worst_var, ", sizes 1/12 zero: ", edges_zero,
                     bad_sizes.empty() ? "" : ", off target:" + bad_sizes));
}

Outcome null_entropy() {
  const auto fs = default_features();
  const EnergyModel generator(fs, testing::kTrueWeights);
  const Design design = make_design(collapse(testing::sample_pieces(generator, 20, 20, 6)), fs);
  const FitResult r = fit(design, FeatureMask::none());
  const double err = std::abs(r.cross_entropy - std::log(4095.0));
  return verdict(err <= 1e-9, fmt("cross entropy ", std::setprecision(15), r.cross_entropy, ", |error| ", err));
}

Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto fs = default_features();
  const EnergyModel generator(fs, testing::kTrueWeights);
  const Design design = make_design(collapse(testing::sample_pieces(generator, 20, 20, 7)), fs);
  const FeatureMask all = FeatureMask::all(4);
  auto cost = [&](const std::vector<double>& w) {
    return kernels::evaluate(design, w, all, kernels::Execution::kParallel).cost;
  };
  Rng rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> w(4);
    for (double& v : w) v = 3.0 * uniform01(rng) - 1.5;
    const std::vector<double> g = kernels::evaluate(design, w, all, kernels::Execution::kParallel).gradient;
    for (std::size_t j = 0; j < 4; ++j) {
      const double h = 1e-5;
      std::vector<double> up = w, down = w;
      up[j] += h;
      down[j] -= h;
      const double fd = (cost(up) - cost(down)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g[j]) / std::max(std::abs(fd), 1e-8));
    }
  }
  const double t = seconds_since(t0);
  return verdict(worst < 1e-5 && t < 300.0,
                 fmt("max relative error ", worst, ", ", std::setprecision(3), t, " s"));
}

Outcome collapse_equivalence() {
  const auto fs = default_features();
  const EnergyModel generator(fs, testing::kTrueWeights);
  double worst = 0.0;
  double ratio = 0.0;
  for (std::uint64_t seed : {11, 12, 13}) {
    std::vector<Piece> pieces = testing::sample_pieces(generator, 15, 15, seed);
    for (int i = 0; i < 15; ++i) {
      Piece moved = pieces[static_cast<std::size_t>(i)];
      moved.id += "t";
      for (ChordEvent& e : moved.events) e.chord = transpose(e.chord, i % 11 + 1);
      pieces.push_back(moved);
    }
    const CollapsedCorpus corpus = collapse(pieces);
    ratio = static_cast<double>(corpus.total_events()) / static_cast<double>(corpus.n_classes());
    Rng rng(seed);
    for (int trial = 0; trial < 3; ++trial) {
      FeatureArray w{};
      for (double& v : w) v = 2.0 * uniform01(rng) - 1.0;
      const EnergyModel model(fs, w);
      const kernels::Evaluation naive = naive_corpus_evaluation(pieces, model);
      worst = std::max(worst, std::abs(corpus_cost(corpus, model) - naive.cost));
      const std::vector<double> g = corpus_gradient(corpus, model);
      for (std::size_t j = 0; j < 4; ++j) worst = std::max(worst, std::abs(g[j] - naive.gradient[j]));
    }
  }
  return verdict(worst <= 1e-9, fmt("max |collapsed - naive| ", worst, ", collapse ratio ", std::setprecision(3),
                                    ratio, "x on the last corpus"));
}

Outcome parameter_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto fs = default_features();
  const EnergyModel generator(fs, testing::kTrueWeights);
  bool ok = true;
  double worst = 0.0;
  std::ostringstream fitted;
  for (std::uint64_t seed : {101, 102, 103}) {
    const FitResult r = fit(make_design(collapse(testing::sample_pieces(generator, 200, 20, seed)), fs),
                            FeatureMask::all(4));
    fitted << " (";
    for (std::size_t j = 0; j < 4; ++j) {
      const double err = std::abs(r.weights[j] - testing::kTrueWeights[j]);
      worst = std::max(worst, err);
      ok = ok && err <= 0.1 && std::signbit(r.weights[j]) == std::signbit(testing::kTrueWeights[j]);
      fitted << std::setprecision(3) << r.weights[j] << (j < 3 ? ", " : ")");
    }
    ok = ok && r.converged;
  }
  const double t = seconds_since(t0);
  return verdict(ok && t < 1800.0, fmt("max |w - w*| ", std::setprecision(3), worst, ", fits", fitted.str(), ", ",
                                       t, " s"));
}

Outcome nested_monotonicity() {
  const auto fs = default_features();
  const std::vector<std::pair<std::string, std::vector<Piece>>> corpora{
      {"model", testing::sample_pieces(EnergyModel(fs, testing::kTrueWeights), 60, 20, 21)},
      {"uniform", testing::uniform_pieces(60, 20, 22)},
      {"voice-leading", testing::sample_pieces(EnergyModel(fs, FeatureArray{0, 0, 0, -1}), 60, 20, 23)}};
  double worst_violation = 0.0;
  double min_explained = 1e9;
  for (const auto& [name, pieces] : corpora) {
    const Design design = make_design(collapse(pieces), fs);
    std::array<double, 16> ce{};
    for (std::uint32_t bits = 0; bits < 16; ++bits) ce[bits] = fit(design, FeatureMask(bits)).cross_entropy;
    for (std::uint32_t bits = 0; bits < 16; ++bits) {
      for (int j = 0; j < 4; ++j) {
        if ((bits >> j) & 1u) continue;
        worst_violation = std::max(worst_violation, ce[bits | (1u << j)] - ce[bits]);
      }
    }
    for (int j = 0; j < 4; ++j) min_explained = std::min(min_explained, ce[0] - ce[1u << j]);
  }
  return verdict(worst_violation <= 1e-9 && min_explained >= -1e-9,
                 fmt("max CE increase when adding a feature ", worst_violation, ", min explained entropy ",
                     min_explained, " over 3 corpora x 16 masks"));
}

Outcome bootstrap_determinism() {
  const auto fs = default_features();
  const EnergyModel generator(fs, testing::kTrueWeights);
  const std::vector<Piece> pieces = testing::sample_pieces(generator, 8, 12, 31);
  BootstrapOptions options;
  options.replicates = 8;
  options.seed = 17;
  const BootstrapResult a = bootstrap(pieces, fs, options);
  const BootstrapResult b = bootstrap(pieces, fs, options);
  bool identical = true;
  for (int j = 0; j < 4; ++j) {
    for (int m = 0; m < kNumMeasures; ++m) {
      const Interval& x = a.interval(j, static_cast<Measure>(m));
      const Interval& y = b.interval(j, static_cast<Measure>(m));
      identical = identical && std::memcmp(&x, &y, sizeof(Interval)) == 0;
    }
  }

  options.replicates = 1;
  const BootstrapResult single = bootstrap(pieces, fs, options);
  bool degenerate = true;
  for (int j = 0; j < 4; ++j) {
    for (int m = 0; m < kNumMeasures; ++m) {
      const Interval& iv = single.interval(j, static_cast<Measure>(m));
      degenerate = degenerate && iv.lower == iv.upper;
    }
  }

  const std::vector<Piece> copies(50, pieces[0]);
  options.replicates = 10;
  options.fit.ridge = kCompositionRidge;
  const BootstrapResult dup = bootstrap(copies, fs, options);
  double width = 0.0;
  for (int j = 0; j < 4; ++j) {
    for (int m = 0; m < kNumMeasures; ++m) {
      const Interval& iv = dup.interval(j, static_cast<Measure>(m));
      width = std::max(width, iv.upper - iv.lower);
    }
  }

  bool single_piece_rejected = false;
  try {
    bootstrap(std::span<const Piece>(pieces.data(), 1), fs, options);
  } catch (const InputError&) {
    single_piece_rejected = true;
  }
  return verdict(identical && degenerate && width < 1e-5 && single_piece_rejected,
                 fmt("repeat identical: ", identical, ", B=1 lower==upper: ", degenerate,
                     ", duplicated-piece width ", width, ", single piece rejected: ", single_piece_rejected));
}

Outcome corpus_signs() {
  const char* path = std::getenv("CONSONANCE_CORPUS");
  if (!path || !*path) return {Status::kSkip, "set CONSONANCE_CORPUS to a labelled corpus to run; not gating"};
  const std::filesystem::path p(path);
  std::vector<Piece> pieces;
  for (const Piece& piece : parse_corpus(p, guess_format(p)).pieces) pieces.push_back(preprocess(piece));
  const FitResult r = fit(make_design(collapse(pieces), default_features()), FeatureMask::all(4));
  const bool ok = r.weights[1] > 0 && r.weights[2] < 0 && r.weights[3] < 0;
  return {ok ? Status::kPass : Status::kFail,
          fmt("harmonicity ", r.weights[1], ", spectral distance ", r.weights[2], ", voice leading ", r.weights[3],
              " (not gating)")};
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
  bool gating;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "spectral self-distance, symmetry and range", spectral_self_distance, true},
      {2, "transposition invariance of raw features", transposition_invariance, true},
      {3, "voice-leading brute-force equivalence", voice_leading_oracle, true},
      {4, "harmonicity: tritone above major triad", harmonicity_ordering, true},
      {5, "harmonicity normalization per chord size", harmonicity_normalization, true},
      {6, "null-model cross entropy is ln 4095", null_entropy, true},
      {7, "analytic gradient vs finite differences", gradient_check, true},
      {8, "collapsed vs naive cost and gradient", collapse_equivalence, true},
      {9, "parameter recovery at w* = (0.5, 1, -1, -0.5)", parameter_recovery, true},
      {10, "nested-model monotonicity", nested_monotonicity, true},
      {11, "bootstrap determinism and degeneracy", bootstrap_determinism, true},
      {12, "fitted weight signs on a user corpus", corpus_signs, false},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "all") == 0) continue;
    selected.push_back(std::atoi(argv[i]));
  }
  int failures = 0, ran = 0;
  for (const Criterion& c : criteria()) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.number) == selected.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    std::cout << tag << " " << std::setw(2) << c.number << "  " << c.name << "  [" << o.detail << "]" << std::endl;
    failures += c.gating && o.status == Status::kFail;
    ran += o.status != Status::kSkip;
  }
  if (failures > 0) return 1;
  return ran == 0 ? 77 : 0;  // 77: ctest's skip code
}
