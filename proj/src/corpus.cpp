#include "consonance/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "consonance/features.hpp"

namespace consonance {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& message) {
  throw InputError(source + ":" + std::to_string(line) + ": " + message);
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

Piece parse_plain_line(const std::string& line, const std::string& id, const std::string& source,
                       std::size_t line_no) {
  Piece piece{id, {}};
  std::istringstream tokens(line);
  std::string token;
  while (tokens >> token) {
    try {
      piece.events.push_back({parse_chord(token), std::nullopt});
    } catch (const InputError& e) {
      fail(source, line_no, e.what());
    }
  }
  return piece;
}

Piece parse_json_line(const std::string& line, const std::string& source, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    fail(source, line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) fail(source, line_no, "expected a JSON object");
  if (!obj.contains("id") || !obj["id"].is_string()) fail(source, line_no, "missing string field 'id'");
  if (!obj.contains("chords") || !obj["chords"].is_array()) {
    fail(source, line_no, "missing array field 'chords'");
  }
  Piece piece{obj["id"].get<std::string>(), {}};
  for (const json& chord : obj["chords"]) {
    if (!chord.is_array()) fail(source, line_no, "chord must be an array of pitch classes");
    if (chord.empty()) fail(source, line_no, "empty chord");
    std::vector<int> members;
    for (const json& pc : chord) {
      if (!pc.is_number_integer()) fail(source, line_no, "non-integer pitch class " + pc.dump());
      const auto value = pc.get<std::int64_t>();
      if (value < 0 || value >= kPitchClasses) {
        fail(source, line_no, "pitch class '" + pc.dump() + "' out of range 0..11");
      }
      members.push_back(static_cast<int>(value));
    }
    piece.events.push_back({PitchClassSet(members), std::nullopt});
  }
  if (obj.contains("bass") && !obj["bass"].is_null()) {
    const json& bass = obj["bass"];
    if (!bass.is_array() || bass.size() != piece.events.size()) {
      fail(source, line_no, "'bass' must be an array with one entry per chord");
    }
    for (std::size_t i = 0; i < bass.size(); ++i) {
      if (bass[i].is_null()) continue;
      if (!bass[i].is_number_integer()) fail(source, line_no, "non-integer bass " + bass[i].dump());
      const auto value = bass[i].get<std::int64_t>();
      if (value < 0 || value >= kPitchClasses) {
        fail(source, line_no, "bass '" + bass[i].dump() + "' out of range 0..11");
      }
      if (!piece.events[i].chord.contains(static_cast<int>(value))) {
        fail(source, line_no, "bass " + bass[i].dump() + " is not a member of chord " +
                                  format_chord(piece.events[i].chord));
      }
      piece.events[i].bass = static_cast<int>(value);
    }
  }
  return piece;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

CorpusFormat guess_format(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  return (ext == ".jsonl" || ext == ".json") ? CorpusFormat::kJsonl : CorpusFormat::kPlain;
}

CorpusFormat parse_format(std::string_view text) {
  if (text == "plain") return CorpusFormat::kPlain;
  if (text == "jsonl") return CorpusFormat::kJsonl;
  throw InputError("unknown corpus format '" + std::string(text) + "'");
}

CorpusFile parse_corpus(std::istream& in, CorpusFormat format, const std::string& source) {
  CorpusFile corpus;
  corpus.source = source;
  corpus.name = std::filesystem::path(source).stem().string();
  corpus.config_hash = fnv1a(format == CorpusFormat::kPlain ? "plain" : "jsonl");

  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    Piece piece;
    if (format == CorpusFormat::kPlain) {
      const auto first = line.find_first_not_of(" \t");
      if (line[first] == '#') continue;
      piece = parse_plain_line(line, "piece-" + std::to_string(corpus.pieces.size() + 1), source, line_no);
    } else {
      piece = parse_json_line(line, source, line_no);
    }
    if (piece.events.empty()) fail(source, line_no, "piece has no chords");
    if (!ids.insert(piece.id).second) fail(source, line_no, "duplicate piece id '" + piece.id + "'");
    corpus.pieces.push_back(std::move(piece));
  }
  if (corpus.pieces.empty()) throw InputError(source + ": no pieces");
  return corpus;
}

CorpusFile parse_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_corpus(in, format, path.string());
}

void write_corpus(std::ostream& out, const CorpusFile& corpus, CorpusFormat format) {
  for (const Piece& piece : corpus.pieces) {
    if (format == CorpusFormat::kPlain) {
      for (std::size_t i = 0; i < piece.events.size(); ++i) {
        if (i) out << ' ';
        out << format_chord(piece.events[i].chord);
      }
      out << '\n';
      continue;
    }
    json obj;
    obj["id"] = piece.id;
    obj["chords"] = json::array();
    bool has_bass = false;
    for (const ChordEvent& e : piece.events) {
      obj["chords"].push_back(e.chord.members());
      has_bass |= e.bass.has_value();
    }
    if (has_bass) {
      obj["bass"] = json::array();
      for (const ChordEvent& e : piece.events) {
        obj["bass"].push_back(e.bass ? json(*e.bass) : json(nullptr));
      }
    }
    out << obj.dump() << '\n';
  }
}

Piece preprocess(const Piece& piece) {
  Piece out{piece.id, {}};
  const ChordEvent* last = nullptr;
  for (const ChordEvent& e : piece.events) {
    if (last && *last == e) continue;
    out.events.push_back({e.chord, std::nullopt});
    last = &e;
  }
  return out;
}

std::pair<int, int> CollapsedCorpus::key(std::optional<PitchClassSet> prev, PitchClassSet cur) {
  const ChordAlphabet& alphabet = ChordAlphabet::instance();
  if (!prev) return {0, alphabet.id(normal_form(cur).cls.representative)};
  const FeatureSet::ContextRef ref = FeatureSet::context_of(prev);
  const PitchClassSet rep = transpose(*prev, -ref.shift);
  const PitchClassSet relative = transpose(cur, -ref.shift);
  int best = alphabet.id(relative);
  for (int s = 1; s < kPitchClasses; ++s) {
    if (transpose(rep, s) == rep) best = std::min(best, alphabet.id(transpose(relative, s)));
  }
  return {ref.context, best};
}

void CollapsedCorpus::add(std::optional<PitchClassSet> prev, PitchClassSet cur, std::int64_t count) {
  counts_[key(prev, cur)] += count;
  total_events_ += count;
}

void CollapsedCorpus::add_key(int context, int continuation, std::int64_t count) {
  counts_[{context, continuation}] += count;
  total_events_ += count;
}

void CollapsedCorpus::add_sequence(std::span<const PitchClassSet> chords) {
  std::optional<PitchClassSet> prev;
  for (PitchClassSet cur : chords) {
    add(prev, cur);
    prev = cur;
  }
}

void CollapsedCorpus::merge(const CollapsedCorpus& other, std::int64_t multiplicity) {
  if (multiplicity == 0) return;
  for (const auto& [k, count] : other.counts_) counts_[k] += count * multiplicity;
  total_events_ += other.total_events_ * multiplicity;
}

std::vector<CollapsedCorpus::Entry> CollapsedCorpus::entries() const {
  std::vector<Entry> out;
  out.reserve(counts_.size());
  for (const auto& [k, count] : counts_) out.push_back({k.first, k.second, count});
  return out;
}

std::vector<PitchClassSet> chords_of(const Piece& piece) {
  std::vector<PitchClassSet> chords;
  chords.reserve(piece.events.size());
  for (const ChordEvent& e : piece.events) chords.push_back(e.chord);
  return chords;
}

CollapsedCorpus collapse(std::span<const Piece> pieces) {
  CollapsedCorpus out;
  for (const Piece& piece : pieces) out.add_sequence(chords_of(piece));
  return out;
}

CollapsedCorpus collapse(const CorpusFile& corpus) { return collapse(corpus.pieces); }

}  // namespace consonance
