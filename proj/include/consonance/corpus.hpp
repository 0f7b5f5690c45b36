// Chord-sequence corpora: parsing, repetition removal and the
// transposition-collapsed event counts the model is fitted on.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "consonance/pcset.hpp"

namespace consonance {

struct ChordEvent {
  PitchClassSet chord;
  std::optional<int> bass;

  friend bool operator==(const ChordEvent&, const ChordEvent&) = default;
};

struct Piece {
  std::string id;
  std::vector<ChordEvent> events;

  friend bool operator==(const Piece&, const Piece&) = default;
};

struct CorpusFile {
  std::string name;
  std::string source;
  std::uint64_t config_hash = 0;
  std::vector<Piece> pieces;
};

enum class CorpusFormat { kPlain, kJsonl };

/// Picks kJsonl for ".jsonl"/".json" extensions, kPlain otherwise.
CorpusFormat guess_format(const std::filesystem::path& path);
CorpusFormat parse_format(std::string_view text);

/// Plain: one piece per line, chords separated by whitespace ("0,4,7 5,9,0");
/// blank lines and lines starting with '#' are skipped; piece ids are
/// "piece-1", "piece-2", ... in file order.
/// JSONL: one object per line, {"id": str, "chords": [[int, ...], ...],
/// "bass": [int | null, ...]} with "bass" optional.
/// Errors carry "<source>:<line>:" and throw InputError, including "no
/// pieces" for a file without any.
CorpusFile parse_corpus(std::istream& in, CorpusFormat format, const std::string& source = "<input>");
CorpusFile parse_corpus(const std::filesystem::path& path, CorpusFormat format);

void write_corpus(std::ostream& out, const CorpusFile& corpus, CorpusFormat format);

/// Merges consecutive events with equal chord and equal bass (or both
/// without bass), then drops bass information.
Piece preprocess(const Piece& piece);

/// Event counts keyed by (context, continuation), where context 0 is the
/// start symbol and context 1 + c is transposition class c of the previous
/// chord. The continuation is the current chord transposed by the same
/// amount as the previous chord's representative (for the start symbol,
/// the representative of the current chord), reduced to the smallest
/// alphabet id over the context's own symmetries.
class CollapsedCorpus {
 public:
  struct Entry {
    int context;
    int continuation;
    std::int64_t count;
  };

  void add(std::optional<PitchClassSet> prev, PitchClassSet cur, std::int64_t count = 1);
  /// Adds to a raw key. Used for designs whose contexts are not chords.
  void add_key(int context, int continuation, std::int64_t count = 1);
  void add_sequence(std::span<const PitchClassSet> chords);
  void merge(const CollapsedCorpus& other, std::int64_t multiplicity = 1);

  /// Entries in (context, continuation) order.
  std::vector<Entry> entries() const;
  std::size_t n_classes() const { return counts_.size(); }
  std::int64_t total_events() const { return total_events_; }
  bool empty() const { return total_events_ == 0; }

  /// The (context, continuation) key an event falls into.
  static std::pair<int, int> key(std::optional<PitchClassSet> prev, PitchClassSet cur);

 private:
  std::map<std::pair<int, int>, std::int64_t> counts_;
  std::int64_t total_events_ = 0;
};

std::vector<PitchClassSet> chords_of(const Piece& piece);

/// Collapses pieces as given (callers normally preprocess first).
CollapsedCorpus collapse(std::span<const Piece> pieces);
CollapsedCorpus collapse(const CorpusFile& corpus);

}  // namespace consonance
