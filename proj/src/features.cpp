#include "consonance/features.hpp"

#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "consonance/kernels.hpp"

namespace consonance {

namespace {

constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "chord_size", "harmonicity", "spectral_distance", "voice_leading_distance"};

constexpr char kTableMagic[8] = {'P', 'C', 'F', 'E', 'A', 'T', '0', '1'};
constexpr std::uint32_t kEndianMarker = 0x01020304u;

std::string hex(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << v;
  return out.str();
}

kernels::Execution execution(const FeatureSetOptions& o) {
  return o.parallel ? kernels::Execution::kParallel : kernels::Execution::kSerial;
}

}  // namespace

std::string_view feature_name(int feature) {
  if (feature < 0 || feature >= kNumFeatures) throw std::out_of_range("feature index");
  return kFeatureNames[static_cast<std::size_t>(feature)];
}

int feature_index(std::string_view name) {
  for (int j = 0; j < kNumFeatures; ++j) {
    if (kFeatureNames[static_cast<std::size_t>(j)] == name) return j;
  }
  throw InputError("unknown feature '" + std::string(name) + "'");
}

std::string_view to_string(VirtualPitchMode mode) {
  return mode == VirtualPitchMode::kSimilarity ? "similarity" : "literal";
}

VirtualPitchMode parse_virtual_pitch_mode(std::string_view text) {
  if (text == "similarity") return VirtualPitchMode::kSimilarity;
  if (text == "literal") return VirtualPitchMode::kLiteralDistance;
  throw InputError("unknown virtual pitch mode '" + std::string(text) + "'");
}

Spectrum virtual_pitch_spectrum(PitchClassSet x, const SpectrumParams& params, VirtualPitchMode mode) {
  const Spectrum tone0 = harmonic_tone_spectrum(PitchClass(0.0), params);
  const Spectrum row = pcset_spectrum(x, params);
  Spectrum q(row.size());
  kernels::virtual_pitch_row(tone0, row, mode, q);
  const double width = static_cast<double>(kPitchClasses) / static_cast<double>(q.size());
  const double mass = width * std::accumulate(q.begin(), q.end(), 0.0);
  for (double& v : q) v /= mass;
  return q;
}

double kl_from_uniform(std::span<const double> density) {
  const double width = static_cast<double>(kPitchClasses) / static_cast<double>(density.size());
  double h = 0.0;
  for (double q : density) {
    if (q > 0.0) h += q * std::log2(kPitchClasses * q);
  }
  return width * h;
}

double harmonicity_raw(PitchClassSet x, const SpectrumParams& params, VirtualPitchMode mode) {
  return kl_from_uniform(virtual_pitch_spectrum(x, params, mode));
}

HarmonicityTable normalize_harmonicity(std::vector<double> raw) {
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  HarmonicityTable table;
  table.normalized.assign(raw.size(), 0.0);
  for (int size = 1; size <= kPitchClasses; ++size) {
    std::vector<int> group;
    for (int id = 0; id < alphabet.size(); ++id) {
      if (alphabet.chord(id).size() == size) group.push_back(id);
    }
    long double sum = 0.0L;
    for (int id : group) sum += raw[static_cast<std::size_t>(id)];
    const double mean = static_cast<double>(sum / static_cast<long double>(group.size()));
    long double ss = 0.0L;
    for (int id : group) {
      const double d = raw[static_cast<std::size_t>(id)] - mean;
      ss += static_cast<long double>(d) * d;
    }
    const double sd = std::sqrt(static_cast<double>(ss / static_cast<long double>(group.size())));
    // Transposition orbits share one value, so a group whose spread is only
    // rounding noise counts as constant.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) continue;
    for (int id : group) {
      table.normalized[static_cast<std::size_t>(id)] = (raw[static_cast<std::size_t>(id)] - mean) / sd;
    }
  }
  table.raw = std::move(raw);
  return table;
}

FeatureVector TransitionFeatureStats::standardize(const FeatureVector& raw) const {
  FeatureVector out;
  for (std::size_t j = 0; j < kNumFeatures; ++j) out.values[j] = (raw.values[j] - mean[j]) / sd[j];
  return out;
}

Moments orbit_weighted_moments(std::span<const int> orbit_sizes, int n_chords,
                               const std::function<double(int, int)>& value) {
  const long double pairs = static_cast<long double>(n_chords) * n_chords;
  long double sum = 0.0L;
  for (std::size_t c = 0; c < orbit_sizes.size(); ++c) {
    long double row = 0.0L;
    for (int y = 0; y < n_chords; ++y) row += value(static_cast<int>(c), y);
    sum += orbit_sizes[c] * row;
  }
  const long double mean = sum / pairs;
  long double ss = 0.0L;
  for (std::size_t c = 0; c < orbit_sizes.size(); ++c) {
    long double row = 0.0L;
    for (int y = 0; y < n_chords; ++y) {
      const long double d = value(static_cast<int>(c), y) - mean;
      row += d * d;
    }
    ss += orbit_sizes[c] * row;
  }
  return {static_cast<double>(mean), static_cast<double>(ss / pairs)};
}

std::uint64_t FeatureSetOptions::hash() const {
  std::uint64_t h = spectrum.hash();
  h ^= static_cast<std::uint64_t>(mode) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

FeatureSet::FeatureSet(FeatureSetOptions options) : options_(std::move(options)) {
  options_.spectrum.validate();
}

std::shared_ptr<const FeatureSet> FeatureSet::create(FeatureSetOptions options) {
  auto set = std::make_shared<FeatureSet>(std::move(options));
  set->build();
  return set;
}

void FeatureSet::require_built() const {
  if (!built_) throw StateError("feature caches have not been built");
}

const SpectrumCache& FeatureSet::spectra() const {
  require_built();
  return *spectra_;
}

const HarmonicityTable& FeatureSet::harmonicity() const {
  require_built();
  return harmonicity_;
}

const TransitionFeatureStats& FeatureSet::stats() const {
  require_built();
  return stats_;
}

void FeatureSet::build() {
  if (built_) return;
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  const auto n_chords = static_cast<std::size_t>(alphabet.size());
  const auto n_classes = static_cast<std::size_t>(alphabet.num_classes());
  const auto exec = execution(options_);

  std::optional<std::filesystem::path> spectra_path, tables_path;
  if (options_.cache_dir) {
    std::filesystem::create_directories(*options_.cache_dir);
    spectra_path = *options_.cache_dir / ("spectra-" + hex(options_.spectrum.hash()) + ".bin");
    tables_path = *options_.cache_dir / ("features-" + hex(options_.hash()) + ".bin");
  }

  if (spectra_path && std::filesystem::exists(*spectra_path)) {
    spectra_ = std::make_unique<SpectrumCache>(SpectrumCache::load(*spectra_path, options_.spectrum));
  } else {
    spectra_ = std::make_unique<SpectrumCache>(options_.spectrum);
    if (spectra_path) spectra_->save(*spectra_path);
  }

  if (!(tables_path && std::filesystem::exists(*tables_path) && try_load_tables(*tables_path))) {
    const std::span<const int> reps = alphabet.class_representatives();
    std::vector<double> class_harmonicity(n_classes);
    kernels::harmonicity_values(*spectra_, reps, options_.mode, class_harmonicity, exec);
    harmonicity_.raw.resize(n_chords);
    for (std::size_t id = 0; id < n_chords; ++id) {
      harmonicity_.raw[id] = class_harmonicity[static_cast<std::size_t>(alphabet.class_of(static_cast<int>(id)))];
    }
    spectral_table_.resize(n_classes * n_chords);
    voice_table_.resize(n_classes * n_chords);
    kernels::spectral_distance_table(*spectra_, reps, spectral_table_, exec);
    kernels::voice_leading_table(reps, voice_table_, exec);
    if (tables_path) save_tables(*tables_path);
  }
  harmonicity_ = normalize_harmonicity(harmonicity_.raw);

  const std::span<const int> orbits = alphabet.class_orbit_sizes();
  const int n = alphabet.size();
  const auto at = [n](const std::vector<double>& table, int c, int y) {
    return table[static_cast<std::size_t>(c) * static_cast<std::size_t>(n) + static_cast<std::size_t>(y)];
  };
  const std::array<std::function<double(int, int)>, kNumFeatures> values = {
      [&](int, int y) { return static_cast<double>(alphabet.chord(y).size()); },
      [&](int, int y) { return harmonicity_.normalized[static_cast<std::size_t>(y)]; },
      [&](int c, int y) { return at(spectral_table_, c, y); },
      [&](int c, int y) { return at(voice_table_, c, y); },
  };
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    const Moments m = orbit_weighted_moments(orbits, n, values[j]);
    stats_.mean[j] = m.mean;
    stats_.sd[j] = std::sqrt(m.variance);
  }

  bank_ = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n_contexts()) * n_chords * kNumFeatures);
  for (int context = 0; context < n_contexts(); ++context) {
    double* dst = bank_->data() + static_cast<std::size_t>(context) * n_chords * kNumFeatures;
    for (int y = 0; y < n; ++y) {
      FeatureVector raw;
      raw[Feature::kChordSize] = values[0](0, y);
      raw[Feature::kHarmonicity] = values[1](0, y);
      if (context == 0) {
        raw[Feature::kSpectralDistance] = stats_.mean[2];
        raw[Feature::kVoiceLeading] = stats_.mean[3];
      } else {
        raw[Feature::kSpectralDistance] = values[2](context - 1, y);
        raw[Feature::kVoiceLeading] = values[3](context - 1, y);
      }
      FeatureVector z = stats_.standardize(raw);
      if (context == 0) {
        // Imputed means standardize to exactly zero.
        z[Feature::kSpectralDistance] = 0.0;
        z[Feature::kVoiceLeading] = 0.0;
      }
      std::copy(z.values.begin(), z.values.end(), dst + static_cast<std::size_t>(y) * kNumFeatures);
    }
  }
  built_ = true;
}

bool FeatureSet::try_load_tables(const std::filesystem::path& path) {
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  std::ifstream in(path, std::ios::binary);
  char magic[8];
  std::uint32_t endian = 0;
  std::uint64_t options_hash = 0, ordering = 0;
  std::int32_t n_classes = 0, n_chords = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&endian), sizeof endian);
  in.read(reinterpret_cast<char*>(&options_hash), sizeof options_hash);
  in.read(reinterpret_cast<char*>(&ordering), sizeof ordering);
  in.read(reinterpret_cast<char*>(&n_classes), sizeof n_classes);
  in.read(reinterpret_cast<char*>(&n_chords), sizeof n_chords);
  if (!in || std::memcmp(magic, kTableMagic, sizeof magic) != 0 || endian != kEndianMarker ||
      options_hash != options_.hash() || ordering != alphabet.ordering_hash() ||
      n_classes != alphabet.num_classes() || n_chords != alphabet.size()) {
    return false;
  }
  const auto table_size = static_cast<std::size_t>(n_classes) * static_cast<std::size_t>(n_chords);
  harmonicity_.raw.resize(static_cast<std::size_t>(n_chords));
  spectral_table_.resize(table_size);
  voice_table_.resize(table_size);
  for (std::vector<double>* v : {&harmonicity_.raw, &spectral_table_, &voice_table_}) {
    in.read(reinterpret_cast<char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double)));
  }
  return static_cast<bool>(in);
}

void FeatureSet::save_tables(const std::filesystem::path& path) const {
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  const std::uint64_t options_hash = options_.hash();
  const std::uint64_t ordering = alphabet.ordering_hash();
  const std::int32_t n_classes = alphabet.num_classes();
  const std::int32_t n_chords = alphabet.size();
  out.write(kTableMagic, sizeof kTableMagic);
  out.write(reinterpret_cast<const char*>(&kEndianMarker), sizeof kEndianMarker);
  out.write(reinterpret_cast<const char*>(&options_hash), sizeof options_hash);
  out.write(reinterpret_cast<const char*>(&ordering), sizeof ordering);
  out.write(reinterpret_cast<const char*>(&n_classes), sizeof n_classes);
  out.write(reinterpret_cast<const char*>(&n_chords), sizeof n_chords);
  for (const std::vector<double>* v : {&harmonicity_.raw, &spectral_table_, &voice_table_}) {
    out.write(reinterpret_cast<const char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing feature cache " + path.string());
}

double FeatureSet::spectral_distance(int cls, int chord_id) const {
  require_built();
  return spectral_table_[static_cast<std::size_t>(cls) * static_cast<std::size_t>(kAlphabetSize) +
                         static_cast<std::size_t>(chord_id)];
}

double FeatureSet::voice_leading(int cls, int chord_id) const {
  require_built();
  return voice_table_[static_cast<std::size_t>(cls) * static_cast<std::size_t>(kAlphabetSize) +
                      static_cast<std::size_t>(chord_id)];
}

FeatureSet::ContextRef FeatureSet::context_of(std::optional<PitchClassSet> prev) {
  if (!prev) return {0, 0};
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  const int id = alphabet.id(*prev);
  return {1 + alphabet.class_of(id), alphabet.shift_of(id)};
}

FeatureVector FeatureSet::raw_transition_features(std::optional<PitchClassSet> prev, PitchClassSet cur) const {
  require_built();
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  FeatureVector raw;
  raw[Feature::kChordSize] = cur.size();
  raw[Feature::kHarmonicity] = harmonicity_.normalized[static_cast<std::size_t>(alphabet.id(cur))];
  if (!prev) {
    raw[Feature::kSpectralDistance] = stats_.mean[2];
    raw[Feature::kVoiceLeading] = stats_.mean[3];
    return raw;
  }
  const ContextRef ref = context_of(prev);
  const int relative = alphabet.id(transpose(cur, -ref.shift));
  raw[Feature::kSpectralDistance] = spectral_distance(ref.context - 1, relative);
  raw[Feature::kVoiceLeading] = voice_leading(ref.context - 1, relative);
  return raw;
}

FeatureVector FeatureSet::transition_features(std::optional<PitchClassSet> prev, PitchClassSet cur) const {
  FeatureVector z = stats().standardize(raw_transition_features(prev, cur));
  if (!prev) {
    z[Feature::kSpectralDistance] = 0.0;
    z[Feature::kVoiceLeading] = 0.0;
  }
  return z;
}

std::span<const double> FeatureSet::context_features(int context) const {
  require_built();
  const std::size_t stride = static_cast<std::size_t>(kAlphabetSize) * kNumFeatures;
  return {bank_->data() + static_cast<std::size_t>(context) * stride, stride};
}

std::shared_ptr<const std::vector<double>> FeatureSet::context_bank() const {
  require_built();
  return bank_;
}

}  // namespace consonance
