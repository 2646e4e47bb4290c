#pragma once

#include <compare>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgc/corpus.hpp"

namespace kgc {

struct SentenceRef {
  std::string abstract_id;
  std::size_t sentence_index = 0;
  auto operator<=>(const SentenceRef&) const = default;
};

struct CandidateTriple {
  SentenceRef sentence;
  TokenSpan head;
  TokenSpan relation;
  TokenSpan tail;
  std::string head_text;
  std::string relation_text;
  std::string tail_text;
  double confidence = 0.0;
};

enum class WordClass { Noun, Verb, Auxiliary, Adverb, Preposition, Determiner, Conjunction, Pronoun, Punctuation };

/// Closed-class word lists plus suffix heuristics. `previous` disambiguates
/// verb/plural-noun forms ("results" after a determiner is a noun).
WordClass classify_word(std::string_view word, std::optional<WordClass> previous = std::nullopt);

/// Confidence is implementation-defined: logistic(z) with
///   z = 1.5 - 0.4*|rel_len - 2| - 0.25*max(0, head_len - 3)
///           - 0.25*max(0, tail_len - 3) - 0.5*skipped_determiners.
double pattern_confidence(std::size_t head_len, std::size_t relation_len, std::size_t tail_len,
                          std::size_t skipped);

/// Shallow NP + verb-group(+preposition) + NP matcher.
std::vector<CandidateTriple> extract_candidates(const SentenceRecord& sentence);

/// Max-confidence candidate; ties go to the earliest head, then earliest tail.
/// Throws InvariantViolation if the candidates come from different sentences.
std::optional<CandidateTriple> select_best(const std::vector<CandidateTriple>& candidates);

struct ExternalImport {
  std::vector<CandidateTriple> candidates;
  std::vector<SentenceRecord> sentences;
  std::size_t unresolved = 0;
};

/// Tab-separated `confidence, head, relation, tail, sentence` lines as
/// produced by an external open extractor. Sentences are keyed
/// ("external", ordinal of first appearance).
ExternalImport import_external(const std::filesystem::path& path);
ExternalImport import_external_text(std::string_view content, std::string_view source_name = "<memory>");

/// Finds `phrase` in the sentence aligned to token boundaries and not
/// overlapping any span in `exclude`.
std::optional<TokenSpan> resolve_phrase(const SentenceRecord& sentence, std::string_view phrase,
                                        const std::vector<TokenSpan>& exclude = {});

std::string span_text(const SentenceRecord& sentence, TokenSpan span);

json to_json(const CandidateTriple& triple);
CandidateTriple candidate_from_json(const json& j);

}  // namespace kgc
