#include "kgc/oie.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <unordered_set>

#include "kgc/error.hpp"

namespace kgc {

namespace {

const std::unordered_set<std::string>& determiners() {
  static const std::unordered_set<std::string> words = {
      "the", "a", "an", "this", "that", "these", "those", "its", "their", "our", "his", "her",
      "some", "any", "each", "every", "all", "both", "such", "no", "another", "several", "many", "most"};
  return words;
}

const std::unordered_set<std::string>& prepositions() {
  static const std::unordered_set<std::string> words = {
      "to", "from", "of", "in", "on", "at", "by", "with", "for", "as", "into", "onto", "over",
      "under", "between", "through", "during", "without", "within", "among", "about", "against",
      "via", "upon", "than", "toward", "towards", "across", "after", "before", "up", "out"};
  return words;
}

const std::unordered_set<std::string>& conjunctions() {
  static const std::unordered_set<std::string> words = {
      "and", "or", "but", "nor", "so", "yet", "whereas", "while", "although", "though",
      "because", "if", "since", "unless", "whether"};
  return words;
}

const std::unordered_set<std::string>& pronouns() {
  static const std::unordered_set<std::string> words = {
      "it", "they", "we", "i", "you", "he", "she", "them", "us", "which", "who", "whom",
      "whose", "what", "there", "here"};
  return words;
}

const std::unordered_set<std::string>& auxiliaries() {
  static const std::unordered_set<std::string> words = {
      "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do",
      "does", "did", "can", "could", "may", "might", "must", "shall", "should", "will", "would"};
  return words;
}

const std::unordered_set<std::string>& adverbs() {
  static const std::unordered_set<std::string> words = {
      "not", "also", "then", "thus", "further", "often", "still", "only", "even", "well",
      "however", "therefore", "generally", "mainly", "largely"};
  return words;
}

const std::unordered_set<std::string>& verbs() {
  static const std::unordered_set<std::string> words = {
      "lead", "leads", "led", "make", "makes", "made", "show", "shows", "showed", "shown",
      "include", "includes", "included", "improve", "improves", "improved", "reduce", "reduces",
      "reduced", "increase", "increases", "increased", "affect", "affects", "affected",
      "require", "requires", "required", "provide", "provides", "provided", "produce",
      "produces", "produced", "reveal", "reveals", "revealed", "indicate", "indicates",
      "suggest", "suggests", "demonstrate", "demonstrates", "contain", "contains", "contained",
      "cause", "causes", "caused", "use", "uses", "used", "develop", "develops", "developed",
      "examine", "examines", "examined", "explore", "explores", "explored", "present",
      "presents", "presented", "propose", "proposes", "proposed", "identify", "identifies",
      "identified", "represent", "represents", "represented", "consider", "considers",
      "considered", "discuss", "discusses", "discussed", "describe", "describes", "described",
      "find", "finds", "found", "report", "reports", "reported", "offer", "offers", "offered",
      "collect", "collects", "collected", "calculate", "calculates", "calculated", "analyse",
      "analyses", "analysed", "analyze", "analyzes", "analyzed", "concern", "concerns",
      "focus", "focuses", "focused", "draw", "draws", "drew", "drawn", "enhance", "enhances",
      "enhanced", "yield", "yields", "yielded", "result", "results", "resulted", "become",
      "becomes", "became", "give", "gives", "gave", "given", "take", "takes", "took", "taken",
      "remain", "remains", "exhibit", "exhibits", "achieve", "achieves", "allow", "allows",
      "enable", "enables", "depend", "depends", "relate", "relates", "related", "consist",
      "consists", "comprise", "comprises", "form", "forms", "formed", "serve", "serves",
      "served", "compose", "composed", "contribute", "contributes", "determine", "determines"};
  return words;
}

bool is_punct_token(std::string_view w) {
  for (char c : w) {
    const auto u = static_cast<unsigned char>(c);
    const bool p = (u >= 33 && u <= 47) || (u >= 58 && u <= 64) || (u >= 91 && u <= 96) || (u >= 123 && u <= 126);
    if (!p) return false;
  }
  return !w.empty();
}

bool ends_with(std::string_view w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

bool noun_like(WordClass c) { return c == WordClass::Noun; }
bool verb_like(WordClass c) { return c == WordClass::Verb || c == WordClass::Auxiliary || c == WordClass::Adverb; }

}  // namespace

WordClass classify_word(std::string_view word, std::optional<WordClass> previous) {
  if (is_punct_token(word)) return WordClass::Punctuation;
  const std::string w = to_lower_ascii(word);
  if (determiners().count(w)) return WordClass::Determiner;
  if (prepositions().count(w)) return WordClass::Preposition;
  if (conjunctions().count(w)) return WordClass::Conjunction;
  if (pronouns().count(w)) return WordClass::Pronoun;
  if (auxiliaries().count(w)) return WordClass::Auxiliary;
  if (adverbs().count(w) || (w.size() > 4 && ends_with(w, "ly"))) return WordClass::Adverb;
  const bool after_determiner = previous && *previous == WordClass::Determiner;
  if (verbs().count(w)) return after_determiner ? WordClass::Noun : WordClass::Verb;
  if (!after_determiner && w.size() > 4 && (ends_with(w, "izes") || ends_with(w, "ises"))) return WordClass::Verb;
  return WordClass::Noun;
}

double pattern_confidence(std::size_t head_len, std::size_t relation_len, std::size_t tail_len,
                          std::size_t skipped) {
  auto excess = [](std::size_t n) { return n > 3 ? static_cast<double>(n - 3) : 0.0; };
  const double z = 1.5 - 0.4 * std::abs(static_cast<double>(relation_len) - 2.0) -
                   0.25 * excess(head_len) - 0.25 * excess(tail_len) - 0.5 * static_cast<double>(skipped);
  return 1.0 / (1.0 + std::exp(-z));
}

std::string span_text(const SentenceRecord& sentence, TokenSpan span) {
  if (span.empty()) return {};
  const std::size_t b = sentence.tokens[span.begin].begin;
  const std::size_t e = sentence.tokens[span.end - 1].end;
  return sentence.text.substr(b, e - b);
}

std::vector<CandidateTriple> extract_candidates(const SentenceRecord& sentence) {
  const auto& tokens = sentence.tokens;
  const std::size_t n = tokens.size();
  std::vector<WordClass> classes;
  classes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    classes.push_back(classify_word(tokens[i].text, i ? std::optional(classes[i - 1]) : std::nullopt));
  }

  std::vector<CandidateTriple> out;
  std::size_t i = 0;
  while (i < n) {
    if (!verb_like(classes[i])) {
      ++i;
      continue;
    }
    std::size_t vb = i;
    std::size_t ve = i;
    bool has_verb = false;
    while (ve < n && verb_like(classes[ve])) {
      has_verb = has_verb || classes[ve] != WordClass::Adverb;
      ++ve;
    }
    i = ve;
    if (!has_verb) continue;

    std::size_t hb = vb;
    while (hb > 0 && noun_like(classes[hb - 1])) --hb;
    if (hb == vb) continue;

    std::size_t re = ve;
    if (re < n && classes[re] == WordClass::Preposition) ++re;
    std::size_t tb = re;
    while (tb < n && classes[tb] == WordClass::Determiner) ++tb;
    std::size_t te = tb;
    while (te < n && noun_like(classes[te])) ++te;
    if (te == tb) continue;

    CandidateTriple c;
    c.sentence = {sentence.abstract_id, sentence.index};
    c.head = {hb, vb};
    c.relation = {vb, re};
    c.tail = {tb, te};
    c.head_text = span_text(sentence, c.head);
    c.relation_text = span_text(sentence, c.relation);
    c.tail_text = span_text(sentence, c.tail);
    c.confidence = pattern_confidence(c.head.size(), c.relation.size(), c.tail.size(), tb - re);
    out.push_back(std::move(c));
  }
  return out;
}

std::optional<CandidateTriple> select_best(const std::vector<CandidateTriple>& candidates) {
  if (candidates.empty()) return std::nullopt;
  const CandidateTriple* best = &candidates.front();
  for (const auto& c : candidates) {
    if (c.sentence != best->sentence) {
      fail(ErrorCode::InvariantViolation, "select_best: candidates span several sentences");
    }
    const bool better = c.confidence > best->confidence ||
                        (c.confidence == best->confidence &&
                         (c.head.begin < best->head.begin ||
                          (c.head.begin == best->head.begin && c.tail.begin < best->tail.begin)));
    if (better) best = &c;
  }
  return *best;
}

std::optional<TokenSpan> resolve_phrase(const SentenceRecord& sentence, std::string_view phrase,
                                        const std::vector<TokenSpan>& exclude) {
  const std::string needle = trim(phrase);
  if (needle.empty()) return std::nullopt;
  std::map<std::size_t, std::size_t> starts;
  std::map<std::size_t, std::size_t> ends;
  for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
    starts[sentence.tokens[t].begin] = t;
    ends[sentence.tokens[t].end] = t;
  }
  for (std::size_t pos = sentence.text.find(needle); pos != std::string::npos;
       pos = sentence.text.find(needle, pos + 1)) {
    auto s = starts.find(pos);
    auto e = ends.find(pos + needle.size());
    if (s == starts.end() || e == ends.end()) continue;
    TokenSpan span{s->second, e->second + 1};
    bool clash = false;
    for (const auto& x : exclude) clash = clash || span.overlaps(x);
    if (!clash) return span;
  }
  return std::nullopt;
}

ExternalImport import_external_text(std::string_view content, std::string_view source_name) {
  ExternalImport result;
  std::map<std::string, std::size_t> sentence_ids;
  std::size_t line_no = 0;
  for (const auto& raw_line : split(content, '\n')) {
    ++line_no;
    std::string line = raw_line;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::string where = std::string(source_name) + ":" + std::to_string(line_no);
    auto fields = split(line, '\t');
    if (fields.size() != 5) {
      fail(ErrorCode::ParseError, where + ": expected 5 tab-separated fields, got " + std::to_string(fields.size()));
    }
    const std::string conf_text = trim(fields[0]);
    double confidence = 0.0;
    auto [ptr, ec] = std::from_chars(conf_text.data(), conf_text.data() + conf_text.size(), confidence);
    if (ec != std::errc() || ptr != conf_text.data() + conf_text.size() || !(confidence >= 0.0 && confidence <= 1.0)) {
      fail(ErrorCode::ParseError, where + ": confidence '" + conf_text + "' is not a real in [0,1]");
    }
    const std::string text = trim(fields[4]);
    auto [it, inserted] = sentence_ids.try_emplace(text, result.sentences.size());
    if (inserted) {
      SentenceRecord s;
      s.abstract_id = "external";
      s.index = it->second;
      s.text = text;
      s.tokens = tokenize(text);
      result.sentences.push_back(std::move(s));
    }
    const SentenceRecord& sentence = result.sentences[it->second];
    auto head = resolve_phrase(sentence, fields[1]);
    auto tail = head ? resolve_phrase(sentence, fields[3], {*head}) : std::nullopt;
    auto rel = tail ? resolve_phrase(sentence, fields[2], {*head, *tail}) : std::nullopt;
    if (!rel) {
      ++result.unresolved;
      continue;
    }
    CandidateTriple c;
    c.sentence = {sentence.abstract_id, sentence.index};
    c.head = *head;
    c.relation = *rel;
    c.tail = *tail;
    c.head_text = span_text(sentence, c.head);
    c.relation_text = span_text(sentence, c.relation);
    c.tail_text = span_text(sentence, c.tail);
    c.confidence = confidence;
    result.candidates.push_back(std::move(c));
  }
  return result;
}

ExternalImport import_external(const std::filesystem::path& path) {
  return import_external_text(read_file(path), path.string());
}

json to_json(const CandidateTriple& t) {
  return json{{"abstract_id", t.sentence.abstract_id},
              {"sentence_index", t.sentence.sentence_index},
              {"head", {t.head.begin, t.head.end}},
              {"relation", {t.relation.begin, t.relation.end}},
              {"tail", {t.tail.begin, t.tail.end}},
              {"head_text", t.head_text},
              {"relation_text", t.relation_text},
              {"tail_text", t.tail_text},
              {"confidence", t.confidence}};
}

CandidateTriple candidate_from_json(const json& j) {
  CandidateTriple t;
  t.sentence.abstract_id = j.at("abstract_id").get<std::string>();
  t.sentence.sentence_index = j.at("sentence_index").get<std::size_t>();
  auto span = [&](const char* key) {
    const auto& a = j.at(key);
    return TokenSpan{a.at(0).get<std::size_t>(), a.at(1).get<std::size_t>()};
  };
  t.head = span("head");
  t.relation = span("relation");
  t.tail = span("tail");
  t.head_text = j.at("head_text").get<std::string>();
  t.relation_text = j.at("relation_text").get<std::string>();
  t.tail_text = j.at("tail_text").get<std::string>();
  t.confidence = j.at("confidence").get<double>();
  return t;
}

}  // namespace kgc
