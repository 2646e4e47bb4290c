#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgc/util.hpp"

namespace kgc {

struct AbstractRecord {
  std::string id;
  std::string title;
  std::string journal;
  std::string for_code;
  int year = 0;
  std::string text;
};

/// Half-open byte range into a UTF-8 string.
struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const TextSpan&) const = default;
};

/// Half-open range of token indices.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool overlaps(const TokenSpan& o) const { return begin < o.end && o.begin < end; }
  auto operator<=>(const TokenSpan&) const = default;
};

struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Token&) const = default;
};

struct SentenceRecord {
  std::string abstract_id;
  std::size_t index = 0;
  std::string text;
  std::vector<Token> tokens;
};

/// token -> positions, in the form abstracts are distributed by the
/// academic graph exports.
using InvertedIndex = std::vector<std::pair<std::string, std::vector<std::size_t>>>;

std::string reconstruct_abstract(std::size_t index_length, const InvertedIndex& index);

/// Inverse of reconstruct_abstract for whitespace-tokenized text.
std::pair<std::size_t, InvertedIndex> invert_text(std::string_view text);

std::string normalize_nfc(std::string_view text);

/// NFC, then: escape sequences and control characters become spaces, runs of
/// one repeated ASCII punctuation mark collapse to a single mark, whitespace
/// runs collapse to one space, and the result is trimmed. Idempotent.
std::string clean_text(std::string_view raw);

/// Case-insensitive stop-list of abbreviations that never end a sentence.
class AbbreviationList {
 public:
  static AbbreviationList defaults();
  /// One entry per line; blank lines and '#' comments ignored.
  static AbbreviationList load(const std::filesystem::path& path);

  void add(std::string_view entry);
  void merge(const AbbreviationList& other);
  /// True when text[0, end) ends with a listed abbreviation at a word start.
  bool ends_with_abbreviation(std::string_view text, std::size_t end) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::set<std::string> entries_;
};

/// Sentence boundaries: [.?!] followed by whitespace and then an uppercase
/// letter or digit, unless the word before is an abbreviation. The returned
/// spans and the whitespace gaps between them tile the text exactly.
std::vector<TextSpan> sentence_spans(std::string_view text, const AbbreviationList& abbreviations);
std::vector<std::string> split_sentences(std::string_view text,
                                         const AbbreviationList& abbreviations = AbbreviationList::defaults());

/// Whitespace tokenization with leading and trailing ASCII punctuation
/// detached one character per token. Offsets are byte offsets.
std::vector<Token> tokenize(std::string_view sentence);

std::vector<SentenceRecord> segment(const AbstractRecord& record, const AbbreviationList& abbreviations);

enum class CorpusFormat { Jsonl, Inverted };

struct IngestResult {
  std::vector<AbstractRecord> records;
  std::size_t dropped_empty = 0;
};

/// Reads records, cleans their text and validates id uniqueness and year
/// range. Records whose text is empty after cleaning are dropped and counted.
IngestResult ingest(const std::filesystem::path& path, CorpusFormat format);

/// Seeded uniform sample of min(n, size) records, kept in corpus order.
std::vector<AbstractRecord> sample_records(const std::vector<AbstractRecord>& records, std::size_t n, std::uint64_t seed);

std::vector<AbstractRecord> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path, const std::vector<AbstractRecord>& records);

json to_json(const AbstractRecord& record);
AbstractRecord abstract_from_json(const json& j);
json to_json(const SentenceRecord& sentence);

}  // namespace kgc
