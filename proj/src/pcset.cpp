#include "consonance/pcset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <numeric>

namespace consonance {

namespace {

constexpr std::uint16_t kFullMask = (1u << kPitchClasses) - 1;

std::uint16_t rotate_mask(std::uint16_t mask, int t) {
  t = ((t % kPitchClasses) + kPitchClasses) % kPitchClasses;
  if (t == 0) return mask;
  const unsigned m = mask;
  return static_cast<std::uint16_t>(((m << t) | (m >> (kPitchClasses - t))) & kFullMask);
}

std::uint16_t mask_from_members(std::span<const int> members) {
  if (members.empty()) throw std::invalid_argument("pitch-class set must not be empty");
  std::uint16_t mask = 0;
  for (int pc : members) {
    if (pc < 0 || pc >= kPitchClasses) {
      throw std::invalid_argument("pitch class out of range: " + std::to_string(pc));
    }
    mask |= static_cast<std::uint16_t>(1u << pc);
  }
  return mask;
}

// Lexicographic comparison of ascending member lists of equal-size sets: the
// first pitch class where the sets differ belongs to the smaller one.
bool lex_less_same_size(std::uint16_t a, std::uint16_t b) {
  const unsigned diff = static_cast<unsigned>(a ^ b);
  if (diff == 0) return false;
  return (a >> std::countr_zero(diff)) & 1u;
}

}  // namespace

PitchClass::PitchClass(double value) {
  double r = std::fmod(value, static_cast<double>(kPitchClasses));
  if (r < 0.0) r += kPitchClasses;
  if (r >= kPitchClasses) r = 0.0;
  value_ = r;
}

double pc_distance(PitchClass a, PitchClass b) {
  const double diff = std::abs(a.value() - b.value());
  return std::min(diff, kPitchClasses - diff);
}

int pc_distance(int a, int b) {
  const int diff = std::abs(a - b) % kPitchClasses;
  return std::min(diff, kPitchClasses - diff);
}

PitchClass freq_to_pc(double frequency_hz) {
  if (!(frequency_hz > 0.0)) throw std::domain_error("frequency must be positive");
  return PitchClass(9.0 + 12.0 * std::log2(frequency_hz / 440.0));
}

PitchClassSet::PitchClassSet(std::initializer_list<int> members)
    : mask_(mask_from_members(std::span<const int>(members.begin(), members.size()))) {}

PitchClassSet::PitchClassSet(std::span<const int> members) : mask_(mask_from_members(members)) {}

PitchClassSet PitchClassSet::from_mask(std::uint16_t mask) {
  if (mask == 0 || mask > kFullMask) throw std::invalid_argument("invalid pitch-class mask");
  PitchClassSet x;
  x.mask_ = mask;
  return x;
}

int PitchClassSet::size() const { return std::popcount(static_cast<unsigned>(mask_)); }

std::vector<int> PitchClassSet::members() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (int pc = 0; pc < kPitchClasses; ++pc) {
    if (contains(pc)) out.push_back(pc);
  }
  return out;
}

PitchClassSet transpose(PitchClassSet x, int t) {
  return PitchClassSet::from_mask(rotate_mask(x.mask(), t));
}

std::string format_chord(PitchClassSet x) {
  std::string out;
  for (int pc : x.members()) {
    if (!out.empty()) out += ',';
    out += std::to_string(pc);
  }
  return out;
}

PitchClassSet parse_chord(std::string_view text) {
  std::vector<int> members;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view token =
        text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    int value = 0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || end != token.data() + token.size()) {
      throw InputError("invalid pitch class '" + std::string(token) + "' in chord '" +
                       std::string(text) + "'");
    }
    if (value < 0 || value >= kPitchClasses) {
      throw InputError("pitch class '" + std::string(token) + "' out of range 0..11 in chord '" +
                       std::string(text) + "'");
    }
    members.push_back(value);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (members.empty()) throw InputError("empty chord");
  return PitchClassSet(members);
}

NormalForm normal_form(PitchClassSet x) {
  std::uint16_t best = x.mask();
  int best_t = 0;
  int stabilizer = 0;
  for (int t = 0; t < kPitchClasses; ++t) {
    const std::uint16_t m = rotate_mask(x.mask(), -t);
    if (m == x.mask()) ++stabilizer;
    if (m < best) {
      best = m;
      best_t = t;
    }
  }
  return {{PitchClassSet::from_mask(best), kPitchClasses / stabilizer}, best_t};
}

const ChordAlphabet& ChordAlphabet::instance() {
  static const ChordAlphabet alphabet;
  return alphabet;
}

ChordAlphabet::ChordAlphabet() {
  std::vector<std::uint16_t> masks(kAlphabetSize);
  std::iota(masks.begin(), masks.end(), std::uint16_t{1});
  std::sort(masks.begin(), masks.end(), [](std::uint16_t a, std::uint16_t b) {
    const int sa = std::popcount(static_cast<unsigned>(a));
    const int sb = std::popcount(static_cast<unsigned>(b));
    if (sa != sb) return sa < sb;
    return lex_less_same_size(a, b);
  });

  id_of_mask_.fill(-1);
  chords_.reserve(masks.size());
  ordering_hash_ = 1469598103934665603ull;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    chords_.push_back(PitchClassSet::from_mask(masks[i]));
    id_of_mask_[masks[i]] = static_cast<int>(i);
    for (int byte = 0; byte < 2; ++byte) {
      ordering_hash_ ^= (masks[i] >> (8 * byte)) & 0xffu;
      ordering_hash_ *= 1099511628211ull;
    }
  }

  class_of_.assign(chords_.size(), -1);
  shift_of_.assign(chords_.size(), 0);
  std::array<int, 1 << kPitchClasses> class_of_rep_mask{};
  class_of_rep_mask.fill(-1);
  for (std::size_t i = 0; i < chords_.size(); ++i) {
    const NormalForm nf = normal_form(chords_[i]);
    int& cls = class_of_rep_mask[nf.cls.representative.mask()];
    if (cls < 0) {
      cls = static_cast<int>(class_reps_.size());
      class_reps_.push_back(id_of_mask_[nf.cls.representative.mask()]);
      class_orbits_.push_back(nf.cls.orbit_size);
    }
    class_of_[i] = cls;
    shift_of_[i] = nf.shift;
  }
}

}  // namespace consonance
