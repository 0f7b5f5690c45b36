#include "consonance/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace consonance {

void SpectrumParams::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (n_harmonics < 1) throw std::invalid_argument("n_harmonics must be at least 1");
  if (n_bins <= 0 || n_bins % kPitchClasses != 0) {
    throw std::invalid_argument("n_bins must be a positive multiple of 12");
  }
}

std::uint64_t SpectrumParams::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  mix(&rho, sizeof rho);
  mix(&sigma, sizeof sigma);
  mix(&n_harmonics, sizeof n_harmonics);
  mix(&n_bins, sizeof n_bins);
  return h;
}

Spectrum harmonic_tone_spectrum(PitchClass x, const SpectrumParams& params) {
  params.validate();
  const int n = params.n_bins;
  const double step = static_cast<double>(kPitchClasses) / n;
  const double norm = 1.0 / (params.sigma * std::sqrt(2.0 * std::numbers::pi));
  Spectrum out(static_cast<std::size_t>(n), 0.0);
  for (int j = 1; j <= params.n_harmonics; ++j) {
    const double level = std::pow(static_cast<double>(j), -params.rho);
    const PitchClass partial(x.value() + 12.0 * std::log2(static_cast<double>(j)));
    for (int k = 0; k < n; ++k) {
      const double z = pc_distance(PitchClass(k * step), partial) / params.sigma;
      out[static_cast<std::size_t>(k)] += level * norm * std::exp(-0.5 * z * z);
    }
  }
  return out;
}

Spectrum pcset_spectrum(PitchClassSet x, const SpectrumParams& params) {
  Spectrum out(static_cast<std::size_t>(params.n_bins), 0.0);
  for (int pc : x.members()) {
    const Spectrum tone = harmonic_tone_spectrum(PitchClass(pc), params);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += tone[k];
  }
  return out;
}

double spectral_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("spectra differ in bin count");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  if (!(aa > 0.0) || !(bb > 0.0)) throw std::domain_error("zero-norm spectrum");
  const double d = 1.0 - ab / (std::sqrt(aa) * std::sqrt(bb));
  return std::clamp(d, 0.0, 1.0);
}

Spectrum circular_shift(std::span<const double> in, int shift) {
  const int n = static_cast<int>(in.size());
  Spectrum out(in.size());
  if (n == 0) return out;
  shift = ((shift % n) + n) % n;
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>((k + shift) % n)] = in[static_cast<std::size_t>(k)];
  return out;
}

SpectrumCache::SpectrumCache(const SpectrumParams& params) : params_(params) {
  params_.validate();
  const auto n = static_cast<std::size_t>(params_.n_bins);
  const Spectrum base = harmonic_tone_spectrum(PitchClass(0.0), params_);
  tones_.resize(n * kPitchClasses);
  for (int pc = 0; pc < kPitchClasses; ++pc) {
    const Spectrum shifted = circular_shift(base, pc * params_.bins_per_semitone());
    std::copy(shifted.begin(), shifted.end(), tones_.begin() + static_cast<std::ptrdiff_t>(pc * n));
  }
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  data_.assign(n * static_cast<std::size_t>(alphabet.size()), 0.0);
  for (int id = 0; id < alphabet.size(); ++id) {
    double* row_ptr = data_.data() + static_cast<std::size_t>(id) * n;
    for (int pc : alphabet.chord(id).members()) {
      const std::span<const double> t = tone(pc);
      for (std::size_t k = 0; k < n; ++k) row_ptr[k] += t[k];
    }
  }
  compute_norms();
}

std::span<const double> SpectrumCache::tone(int pc) const {
  const auto n = static_cast<std::size_t>(params_.n_bins);
  return {tones_.data() + static_cast<std::size_t>(pc) * n, n};
}

void SpectrumCache::compute_norms() {
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  norms_.resize(static_cast<std::size_t>(alphabet.size()));
  for (int id = 0; id < alphabet.size(); ++id) {
    const auto r = row(id);
    norms_[static_cast<std::size_t>(id)] = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
  }
}

namespace {

constexpr char kMagic[8] = {'P', 'C', 'S', 'P', 'E', 'C', '0', '1'};
constexpr std::uint32_t kEndianMarker = 0x01020304u;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

void SpectrumCache::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write spectrum cache " + path.string());
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  out.write(kMagic, sizeof kMagic);
  write_pod(out, kEndianMarker);
  write_pod(out, params_.rho);
  write_pod(out, params_.sigma);
  write_pod(out, static_cast<std::int32_t>(params_.n_harmonics));
  write_pod(out, static_cast<std::int32_t>(params_.n_bins));
  write_pod(out, static_cast<std::int32_t>(alphabet.size()));
  write_pod(out, alphabet.ordering_hash());
  out.write(reinterpret_cast<const char*>(tones_.data()),
            static_cast<std::streamsize>(tones_.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(data_.data()),
            static_cast<std::streamsize>(data_.size() * sizeof(double)));
  if (!out) throw std::runtime_error("failed writing spectrum cache " + path.string());
}

SpectrumCache SpectrumCache::load(const std::filesystem::path& path, const SpectrumParams& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open spectrum cache " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw InputError("not a spectrum cache: " + path.string());
  }
  if (read_pod<std::uint32_t>(in) != kEndianMarker) {
    throw InputError("spectrum cache has foreign byte order: " + path.string());
  }
  SpectrumParams stored;
  stored.rho = read_pod<double>(in);
  stored.sigma = read_pod<double>(in);
  stored.n_harmonics = read_pod<std::int32_t>(in);
  stored.n_bins = read_pod<std::int32_t>(in);
  const auto count = read_pod<std::int32_t>(in);
  const auto ordering = read_pod<std::uint64_t>(in);
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  if (!in || !(stored == params) || count != alphabet.size() || ordering != alphabet.ordering_hash()) {
    throw InputError("spectrum cache does not match the requested parameters: " + path.string());
  }
  SpectrumCache cache;
  cache.params_ = params;
  const auto n = static_cast<std::size_t>(params.n_bins);
  cache.tones_.resize(n * kPitchClasses);
  cache.data_.resize(n * static_cast<std::size_t>(count));
  in.read(reinterpret_cast<char*>(cache.tones_.data()),
          static_cast<std::streamsize>(cache.tones_.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(cache.data_.data()),
          static_cast<std::streamsize>(cache.data_.size() * sizeof(double)));
  if (!in) throw InputError("truncated spectrum cache: " + path.string());
  cache.compute_norms();
  return cache;
}

}  // namespace consonance
