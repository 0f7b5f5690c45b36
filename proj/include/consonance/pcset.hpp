// Pitch-class arithmetic, the chord alphabet and transposition normal forms.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace consonance {

inline constexpr int kPitchClasses = 12;
inline constexpr int kAlphabetSize = (1 << kPitchClasses) - 1;

/// Raised for malformed user input (files, chord text, flags).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an object is used before its caches exist.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A real-valued pitch class, always reduced into [0, 12).
class PitchClass {
 public:
  constexpr PitchClass() = default;
  explicit PitchClass(double value);

  double value() const { return value_; }

 private:
  double value_ = 0.0;
};

/// Wrapped distance on the chromatic circle, in [0, 6].
double pc_distance(PitchClass a, PitchClass b);
int pc_distance(int a, int b);

/// Pitch class of a frequency in Hz (A440 maps to 9).
PitchClass freq_to_pc(double frequency_hz);

/// A non-empty set of integer pitch classes stored as a 12-bit mask
/// (bit i set when pitch class i is present).
class PitchClassSet {
 public:
  /// Throws std::invalid_argument on an empty list or a member outside 0..11.
  PitchClassSet(std::initializer_list<int> members);
  explicit PitchClassSet(std::span<const int> members);

  static PitchClassSet from_mask(std::uint16_t mask);

  std::uint16_t mask() const { return mask_; }
  int size() const;
  bool contains(int pc) const { return (mask_ >> pc) & 1u; }
  std::vector<int> members() const;

  friend bool operator==(PitchClassSet, PitchClassSet) = default;

 private:
  PitchClassSet() = default;
  std::uint16_t mask_ = 0;
};

PitchClassSet transpose(PitchClassSet x, int t);

/// "0,4,7" style text. Members are written in ascending order.
std::string format_chord(PitchClassSet x);
/// Parses "0,4,7". Duplicate members collapse; anything else malformed
/// throws InputError naming the offending token.
PitchClassSet parse_chord(std::string_view text);

struct TranspositionClass {
  PitchClassSet representative;
  int orbit_size;
};

struct NormalForm {
  TranspositionClass cls;
  /// transpose(cls.representative, shift) == the input set.
  int shift;
};

/// The representative is the transposition with the smallest mask, i.e. the
/// least set when members are compared from the top pitch class down.
NormalForm normal_form(PitchClassSet x);

/// All 4,095 non-empty pitch-class sets, ordered by size and then
/// lexicographically by their ascending member lists.
class ChordAlphabet {
 public:
  static const ChordAlphabet& instance();

  int size() const { return static_cast<int>(chords_.size()); }
  PitchClassSet chord(int id) const { return chords_[static_cast<std::size_t>(id)]; }
  int id(PitchClassSet x) const { return id_of_mask_[x.mask()]; }
  std::span<const PitchClassSet> chords() const { return chords_; }

  /// FNV-1a over the ordered masks; part of every cache file header.
  std::uint64_t ordering_hash() const { return ordering_hash_; }

  int num_classes() const { return static_cast<int>(class_reps_.size()); }
  /// Representative chord id of each transposition class, in alphabet order.
  std::span<const int> class_representatives() const { return class_reps_; }
  std::span<const int> class_orbit_sizes() const { return class_orbits_; }
  int class_of(int chord_id) const { return class_of_[static_cast<std::size_t>(chord_id)]; }
  int shift_of(int chord_id) const { return shift_of_[static_cast<std::size_t>(chord_id)]; }

 private:
  ChordAlphabet();

  std::vector<PitchClassSet> chords_;
  std::array<int, 1 << kPitchClasses> id_of_mask_{};
  std::vector<int> class_reps_;
  std::vector<int> class_orbits_;
  std::vector<int> class_of_;
  std::vector<int> shift_of_;
  std::uint64_t ordering_hash_ = 0;
};

inline const ChordAlphabet& enumerate_alphabet() { return ChordAlphabet::instance(); }

}  // namespace consonance
