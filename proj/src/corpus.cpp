#include "kgc/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <unordered_set>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "kgc/error.hpp"

namespace kgc {

namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 33 && u <= 47) || (u >= 58 && u <= 64) || (u >= 91 && u <= 96) || (u >= 123 && u <= 126);
}

bool is_control(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x20 || u == 0x7f;
}

bool is_escape_letter(char c) {
  switch (c) {
    case 'n': case 't': case 'r': case 'f': case 'v': case 'b': case '0':
    case '\\': case '"': case '\'': case '/':
      return true;
    default:
      return false;
  }
}

int current_year() {
  const auto now = std::chrono::system_clock::now();
  const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(now)};
  return static_cast<int>(ymd.year());
}

constexpr const char* kDefaultAbbreviations[] = {
    "et al.", "fig.", "figs.", "eq.", "eqs.", "e.g.", "i.e.", "etc.", "vs.", "cf.",
    "approx.", "ref.", "refs.", "sec.", "tab.", "vol.", "no.", "pp.", "ca.", "resp.",
    "dr.", "mr.", "ms.", "prof.", "st.", "jr.", "inc.", "ltd.", "co."};

}  // namespace

std::string reconstruct_abstract(std::size_t index_length, const InvertedIndex& index) {
  std::vector<const std::string*> slots(index_length, nullptr);
  for (const auto& [token, positions] : index) {
    for (std::size_t pos : positions) {
      if (pos >= index_length) {
        fail(ErrorCode::PositionOutOfRange,
             "position " + std::to_string(pos) + " of '" + token + "' >= length " +
                 std::to_string(index_length));
      }
      if (slots[pos] != nullptr) {
        fail(ErrorCode::DuplicatePosition, "position " + std::to_string(pos) + " used twice");
      }
      slots[pos] = &token;
    }
  }
  std::string out;
  for (std::size_t i = 0; i < index_length; ++i) {
    if (slots[i] == nullptr) fail(ErrorCode::MissingPosition, "no token at position " + std::to_string(i));
    if (i) out.push_back(' ');
    out += *slots[i];
  }
  return out;
}

std::pair<std::size_t, InvertedIndex> invert_text(std::string_view text) {
  InvertedIndex index;
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ascii_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_ascii_space(text[i])) ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  for (std::size_t pos = 0; pos < words.size(); ++pos) {
    auto it = std::find_if(index.begin(), index.end(), [&](const auto& e) { return e.first == words[pos]; });
    if (it == index.end()) {
      index.push_back({words[pos], {pos}});
    } else {
      it->second.push_back(pos);
    }
  }
  return {words.size(), index};
}

std::string normalize_nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) fail(ErrorCode::InvariantViolation, "ICU NFC normalizer unavailable");
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString normalized = nfc->normalize(source, status);
  if (U_FAILURE(status)) fail(ErrorCode::InvariantViolation, "NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::string clean_text(std::string_view raw) {
  const std::string text = normalize_nfc(raw);
  std::string out;
  out.reserve(text.size());
  auto emit_space = [&out] {
    if (!out.empty() && out.back() != ' ') out.push_back(' ');
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\\' && i + 1 < text.size() && is_escape_letter(text[i + 1])) {
      emit_space();
      ++i;
      continue;
    }
    if (is_control(c) || is_ascii_space(c)) {
      emit_space();
      continue;
    }
    if (is_ascii_punct(c) && !out.empty() && out.back() == c) continue;
    out.push_back(c);
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

AbbreviationList AbbreviationList::defaults() {
  AbbreviationList list;
  for (const char* entry : kDefaultAbbreviations) list.add(entry);
  return list;
}

AbbreviationList AbbreviationList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open abbreviation list " + path.string());
  AbbreviationList list;
  std::string line;
  while (std::getline(in, line)) {
    std::string entry = trim(line);
    if (entry.empty() || entry.front() == '#') continue;
    list.add(entry);
  }
  return list;
}

void AbbreviationList::add(std::string_view entry) {
  std::string e = to_lower_ascii(trim(entry));
  if (!e.empty()) entries_.insert(std::move(e));
}

void AbbreviationList::merge(const AbbreviationList& other) {
  entries_.insert(other.entries_.begin(), other.entries_.end());
}

bool AbbreviationList::ends_with_abbreviation(std::string_view text, std::size_t end) const {
  for (const auto& entry : entries_) {
    if (entry.size() > end) continue;
    const std::size_t start = end - entry.size();
    if (to_lower_ascii(text.substr(start, entry.size())) != entry) continue;
    if (start == 0 || is_ascii_space(text[start - 1]) || text[start - 1] == '(') return true;
  }
  return false;
}

std::vector<TextSpan> sentence_spans(std::string_view text, const AbbreviationList& abbreviations) {
  std::vector<TextSpan> spans;
  if (trim(text).empty()) return spans;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '?' && c != '!') continue;
    std::size_t j = i + 1;
    if (j >= text.size() || !is_ascii_space(text[j])) continue;
    while (j < text.size() && is_ascii_space(text[j])) ++j;
    if (j >= text.size()) break;
    const char next = text[j];
    const bool opens = (next >= 'A' && next <= 'Z') || (next >= '0' && next <= '9');
    if (!opens) continue;
    if (c == '.' && abbreviations.ends_with_abbreviation(text, i + 1)) continue;
    spans.push_back({start, i + 1});
    start = j;
    i = j - 1;
  }
  spans.push_back({start, text.size()});
  return spans;
}

std::vector<std::string> split_sentences(std::string_view text, const AbbreviationList& abbreviations) {
  std::vector<std::string> out;
  for (const auto& span : sentence_spans(text, abbreviations)) {
    out.emplace_back(text.substr(span.begin, span.end - span.begin));
  }
  return out;
}

std::vector<Token> tokenize(std::string_view sentence) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && is_ascii_space(sentence[i])) ++i;
    std::size_t b = i;
    while (i < sentence.size() && !is_ascii_space(sentence[i])) ++i;
    std::size_t e = i;
    if (b == e) continue;
    std::vector<Token> trailing;
    while (b < e && is_ascii_punct(sentence[b])) {
      tokens.push_back({std::string(1, sentence[b]), b, b + 1});
      ++b;
    }
    while (e > b && is_ascii_punct(sentence[e - 1])) {
      trailing.push_back({std::string(1, sentence[e - 1]), e - 1, e});
      --e;
    }
    if (e > b) tokens.push_back({std::string(sentence.substr(b, e - b)), b, e});
    tokens.insert(tokens.end(), trailing.rbegin(), trailing.rend());
  }
  return tokens;
}

std::vector<SentenceRecord> segment(const AbstractRecord& record, const AbbreviationList& abbreviations) {
  std::vector<SentenceRecord> out;
  const auto spans = sentence_spans(record.text, abbreviations);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    SentenceRecord s;
    s.abstract_id = record.id;
    s.index = i;
    s.text = record.text.substr(spans[i].begin, spans[i].end - spans[i].begin);
    s.tokens = tokenize(s.text);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<AbstractRecord> sample_records(const std::vector<AbstractRecord>& records, std::size_t n, std::uint64_t seed) {
  if (n >= records.size()) return records;
  Rng rng(seed);
  auto idx = rng.sample_indices(records.size(), n);
  std::sort(idx.begin(), idx.end());
  std::vector<AbstractRecord> out;
  out.reserve(n);
  for (std::size_t i : idx) out.push_back(records[i]);
  return out;
}

json to_json(const AbstractRecord& r) {
  return json{{"id", r.id}, {"title", r.title}, {"journal", r.journal},
              {"for_code", r.for_code}, {"year", r.year}, {"text", r.text}};
}

AbstractRecord abstract_from_json(const json& j) {
  AbstractRecord r;
  r.id = j.at("id").get<std::string>();
  r.title = j.value("title", "");
  r.journal = j.value("journal", "");
  if (j.contains("for_code")) {
    const auto& code = j.at("for_code");
    r.for_code = code.is_string() ? code.get<std::string>() : code.dump();
  }
  r.year = j.value("year", 0);
  r.text = j.value("text", "");
  return r;
}

json to_json(const SentenceRecord& s) {
  json tokens = json::array();
  for (const auto& t : s.tokens) tokens.push_back({t.text, t.begin, t.end});
  return json{{"abstract_id", s.abstract_id}, {"index", s.index}, {"text", s.text}, {"tokens", tokens}};
}

IngestResult ingest(const std::filesystem::path& path, CorpusFormat format) {
  IngestResult result;
  std::unordered_set<std::string> seen;
  const int max_year = current_year();
  for_each_jsonl(path, [&](std::size_t line_no, const json& row) {
    const std::string where = path.string() + ":" + std::to_string(line_no);
    AbstractRecord r;
    try {
      r = abstract_from_json(row);
      if (format == CorpusFormat::Inverted) {
        json indexed = row.at("IndexedAbstract");
        if (indexed.is_string()) indexed = json::parse(indexed.get<std::string>());
        InvertedIndex index;
        for (const auto& [token, positions] : indexed.at("InvertedIndex").items()) {
          index.push_back({token, positions.get<std::vector<std::size_t>>()});
        }
        r.text = reconstruct_abstract(indexed.at("IndexLength").get<std::size_t>(), index);
      }
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
    if (r.year < 1900 || r.year > max_year) {
      fail(ErrorCode::InvariantViolation, where + ": year " + std::to_string(r.year) + " outside [1900, " +
                                              std::to_string(max_year) + "]");
    }
    if (!seen.insert(r.id).second) fail(ErrorCode::InvariantViolation, where + ": duplicate id " + r.id);
    r.text = clean_text(r.text);
    if (r.text.empty()) {
      ++result.dropped_empty;
      return;
    }
    result.records.push_back(std::move(r));
  });
  return result;
}

std::vector<AbstractRecord> load_corpus(const std::filesystem::path& path) {
  std::vector<AbstractRecord> records;
  for_each_jsonl(path, [&](std::size_t line_no, const json& row) {
    try {
      records.push_back(abstract_from_json(row));
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  return records;
}

void save_corpus(const std::filesystem::path& path, const std::vector<AbstractRecord>& records) {
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_json(r));
  write_jsonl(path, rows);
}

}  // namespace kgc
