#include "kgc/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "kgc/error.hpp"
#include "kgc/graph_store.hpp"
#include "kgc/schema.hpp"

namespace kgc {

std::string ExtractedTriple::id() const {
  return provenance.abstract_id + "#" + std::to_string(provenance.sentence_index) + "#" + std::to_string(pair_index);
}

std::string canonicalize_entity(std::string_view surface) {
  std::string out;
  out.reserve(surface.size());
  bool pending_space = false;
  for (char c : surface) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

PairMode pair_mode_from_string(std::string_view s) {
  if (s == "forward") return PairMode::Forward;
  if (s == "both") return PairMode::Both;
  fail(ErrorCode::InvalidArgument, "pair mode must be forward or both, got '" + std::string(s) + "'");
}

PairList enumerate_pairs(std::size_t n, PairMode mode, std::size_t cap) {
  PairList out;
  const auto add = [&](std::size_t i, std::size_t j) {
    if (out.pairs.size() < cap) out.pairs.emplace_back(i, j);
    else ++out.dropped;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (mode == PairMode::Forward && j < i) continue;
      add(i, j);
    }
  }
  return out;
}

SupportBank SupportBank::draw(const std::vector<std::string>& relations, const RelationPool& pool, std::size_t k,
                              std::uint64_t seed) {
  if (k == 0) fail(ErrorCode::InvalidArgument, "support size k must be positive");
  SupportBank bank;
  for (const auto& rel : relations) {
    const auto it = pool.find(rel);
    const std::size_t available = it == pool.end() ? 0 : it->second.size();
    if (available < k) {
      fail(ErrorCode::IncompleteSupport, "relation '" + rel + "' has " + std::to_string(available) +
                                             " annotated instances, need " + std::to_string(k));
    }
    Rng rng(derive_seed(seed, fnv1a64(rel)));
    std::vector<RcInstance> group;
    for (std::size_t i : rng.sample_indices(available, k)) group.push_back(it->second[i]);
    bank.relations.push_back(rel);
    bank.support.push_back(std::move(group));
  }
  return bank;
}

SentenceExtraction extract_sentence(const SentenceRecord& sentence, const CrfModel& model, const TokenEncoder& encoder,
                                    const PairScorer& scorer, const SupportBank& bank, const ExtractionConfig& config,
                                    const AbstractRecord* abstract) {
  SentenceExtraction out;
  if (sentence.tokens.empty()) return out;
  std::vector<std::string> words;
  words.reserve(sentence.tokens.size());
  for (const auto& t : sentence.tokens) words.push_back(t.text);
  const auto tags = predict(model, encoder, words);
  for (const auto& span : bio_entities(tags)) {
    const auto& first = sentence.tokens[span.begin];
    const auto& last = sentence.tokens[span.end - 1];
    out.entities.push_back({sentence.text.substr(first.begin, last.end - first.begin), span});
  }
  const PairList pairs = enumerate_pairs(out.entities.size(), config.mode, config.max_pairs_per_sentence);
  out.dropped_pairs = pairs.dropped;
  if (pairs.pairs.empty()) return out;

  Provenance prov;
  prov.abstract_id = sentence.abstract_id;
  prov.sentence_index = sentence.index;
  if (abstract) {
    prov.title = abstract->title;
    prov.journal = abstract->journal;
    prov.year = abstract->year;
  }
  RcInstance query;
  query.id = sentence.abstract_id + "#" + std::to_string(sentence.index);
  query.tokens = words;
  for (std::size_t p = 0; p < pairs.pairs.size(); ++p) {
    const auto& head = out.entities[pairs.pairs[p].first];
    const auto& tail = out.entities[pairs.pairs[p].second];
    query.head = head.span;
    query.tail = tail.span;
    const Prediction pred = predict(query, bank.relations, bank.support, scorer);
    out.truncated_pairs += pred.truncated_pairs;
    ExtractedTriple t;
    t.head = head;
    t.tail = tail;
    t.relation = pred.relation;
    t.score = pred.score;
    t.provenance = prov;
    t.pair_index = p;
    out.triples.push_back(std::move(t));
  }
  return out;
}

std::vector<ExtractedTriple> filter_threshold(const std::vector<ExtractedTriple>& triples, double theta) {
  std::vector<ExtractedTriple> out;
  std::copy_if(triples.begin(), triples.end(), std::back_inserter(out),
               [theta](const ExtractedTriple& t) { return t.score >= theta; });
  return out;
}

std::vector<HistogramPoint> score_histogram(const std::vector<double>& scores, double bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) fail(ErrorCode::InvalidArgument, "bin width must be positive");
  std::vector<HistogramPoint> out;
  if (scores.empty()) return out;
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const double lo = std::floor(sorted.front() / bin_width) * bin_width;
  for (std::size_t i = 0;; ++i) {
    const double thr = lo + static_cast<double>(i) * bin_width;
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), thr);
    const auto count = static_cast<std::size_t>(sorted.end() - first);
    out.push_back({thr, count});
    if (count == 0) break;
  }
  return out;
}

std::string histogram_csv(const std::vector<HistogramPoint>& points) {
  std::ostringstream os;
  os.precision(10);
  os << "threshold,count\n";
  for (const auto& p : points) os << p.threshold << ',' << p.count << '\n';
  return os.str();
}

std::optional<double> choose_threshold(const std::vector<std::pair<double, bool>>& labeled, double target_precision) {
  auto sorted = labeled;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<std::size_t> correct_from(n + 1, 0);
  for (std::size_t i = n; i-- > 0;) correct_from[i] = correct_from[i + 1] + (sorted[i].second ? 1 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && sorted[i].first == sorted[i - 1].first) continue;
    const double precision = static_cast<double>(correct_from[i]) / static_cast<double>(n - i);
    if (precision >= target_precision) return sorted[i].first;
  }
  return std::nullopt;
}

namespace {

struct AbstractOutcome {
  std::string abstract_id;
  std::size_t sentences = 0;
  std::vector<std::string> entities;  // canonical, one per mention
  std::size_t dropped_pairs = 0;
  std::size_t truncated_pairs = 0;
  std::vector<ExtractedTriple> candidates;
};

json outcome_json(const AbstractOutcome& o) {
  json c = json::array();
  for (const auto& t : o.candidates) c.push_back(to_json(t));
  return {{"abstract_id", o.abstract_id},
          {"sentences", o.sentences},
          {"entities", o.entities},
          {"dropped_pairs", o.dropped_pairs},
          {"truncated_pairs", o.truncated_pairs},
          {"candidates", std::move(c)}};
}

AbstractOutcome outcome_from_json(const json& j) {
  AbstractOutcome o;
  o.abstract_id = j.at("abstract_id").get<std::string>();
  o.sentences = j.at("sentences").get<std::size_t>();
  o.entities = j.at("entities").get<std::vector<std::string>>();
  o.dropped_pairs = j.at("dropped_pairs").get<std::size_t>();
  o.truncated_pairs = j.at("truncated_pairs").get<std::size_t>();
  for (const auto& t : j.at("candidates")) o.candidates.push_back(triple_from_json(t));
  return o;
}

AbstractOutcome process_abstract(const AbstractRecord& record, const PipelineModels& m, const PipelineConfig& config) {
  AbstractOutcome o;
  o.abstract_id = record.id;
  const auto sentences = segment(record, config.abbreviations);
  o.sentences = sentences.size();
  for (const auto& s : sentences) {
    auto ex = extract_sentence(s, *m.tagger, *m.encoder, *m.scorer, *m.bank, config.extraction, &record);
    for (const auto& e : ex.entities) o.entities.push_back(canonicalize_entity(e.text));
    o.dropped_pairs += ex.dropped_pairs;
    o.truncated_pairs += ex.truncated_pairs;
    for (auto& t : ex.triples) o.candidates.push_back(std::move(t));
  }
  return o;
}

std::vector<AbstractOutcome> read_checkpoint(const std::filesystem::path& path, const std::string& manifest_hash,
                                             const std::vector<AbstractRecord>& corpus) {
  std::vector<AbstractOutcome> done;
  if (!std::filesystem::exists(path)) {
    write_file(path, json{{"manifest_hash", manifest_hash}}.dump() + "\n");
    return done;
  }
  const std::string content = read_file(path);
  std::vector<std::string> lines = split(content, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) fail(ErrorCode::ParseError, path.string() + ": empty checkpoint");
  json header;
  try {
    header = json::parse(lines[0]);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, path.string() + ":1: " + e.what());
  }
  if (header.value("manifest_hash", "") != manifest_hash) {
    fail(ErrorCode::InvariantViolation, path.string() + ": checkpoint belongs to a different manifest");
  }
  std::string kept = lines[0] + "\n";
  for (std::size_t i = 1; i < lines.size(); ++i) {
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      // a torn final line from an interrupted write is dropped
      if (i + 1 == lines.size()) break;
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
    AbstractOutcome o = outcome_from_json(j);
    if (done.size() >= corpus.size() || corpus[done.size()].id != o.abstract_id) {
      fail(ErrorCode::InvariantViolation, path.string() + ": checkpoint does not follow the corpus order");
    }
    done.push_back(std::move(o));
    kept += lines[i] + "\n";
  }
  write_file(path, kept);
  return done;
}

void append_line(const std::filesystem::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << line << '\n';
  out.flush();
  if (!out) fail(ErrorCode::IoError, "cannot append to " + path.string());
}

std::string corpus_hash(const std::vector<AbstractRecord>& corpus) {
  std::string all;
  for (const auto& r : corpus) all += to_json(r).dump() + "\n";
  return hex64(fnv1a64(all));
}

}  // namespace

PipelineResult run_pipeline(const std::vector<AbstractRecord>& corpus, const PipelineModels& m,
                            const PipelineConfig& config, GraphStore* store) {
  if (!m.tagger || !m.encoder || !m.scorer || !m.bank) fail(ErrorCode::InvalidArgument, "pipeline models incomplete");
  if (!config.theta) fail(ErrorCode::InvalidArgument, "a score threshold theta is required");
  const double theta = *config.theta;

  PipelineResult result;
  result.manifest = {{"seed", config.extraction.seed},
                     {"k", config.extraction.k},
                     {"pair_mode", config.extraction.mode == PairMode::Forward ? "forward" : "both"},
                     {"max_pairs_per_sentence", config.extraction.max_pairs_per_sentence},
                     {"theta", theta},
                     {"tagger_encoder", m.tagger->encoder_id},
                     {"token_encoder", m.encoder->id()},
                     {"tagger_hash", hex64(fnv1a64(to_json(*m.tagger).dump()))},
                     {"scorer", m.scorer->id()},
                     {"schema_hash", schema_hash(m.bank->relations)},
                     {"relations", m.bank->relations.size()},
                     {"corpus_hash", corpus_hash(corpus)},
                     {"abstracts", corpus.size()}};
  json support = json::object();
  for (std::size_t r = 0; r < m.bank->relations.size(); ++r) {
    json ids = json::array();
    for (const auto& s : m.bank->support[r]) ids.push_back(s.id);
    support[m.bank->relations[r]] = std::move(ids);
  }
  result.manifest["support"] = std::move(support);
  const std::string manifest_hash = hex64(fnv1a64(result.manifest.dump()));
  result.manifest["manifest_hash"] = manifest_hash;

  std::vector<AbstractOutcome> outcomes;
  if (config.checkpoint) outcomes = read_checkpoint(*config.checkpoint, manifest_hash, corpus);
  for (std::size_t i = outcomes.size(); i < corpus.size(); ++i) {
    AbstractOutcome o = process_abstract(corpus[i], m, config);
    if (config.checkpoint) append_line(*config.checkpoint, outcome_json(o).dump());
    outcomes.push_back(std::move(o));
  }

  PipelineStats& st = result.stats;
  std::set<std::string> distinct;
  for (auto& o : outcomes) {
    ++st.abstracts;
    st.sentences += o.sentences;
    st.entity_mentions += o.entities.size();
    distinct.insert(o.entities.begin(), o.entities.end());
    st.candidate_pairs += o.candidates.size();
    st.dropped_pairs += o.dropped_pairs;
    st.truncated_pairs += o.truncated_pairs;
    for (auto& t : o.candidates) result.candidates.push_back(std::move(t));
  }
  st.distinct_entities = distinct.size();
  result.triples = filter_threshold(result.candidates, theta);
  st.high_quality = result.triples.size();
  std::set<std::string> hq_entities;
  std::map<std::string, std::set<std::string>> rel_entities;
  for (const auto& t : result.triples) {
    const std::string h = canonicalize_entity(t.head.text);
    const std::string tl = canonicalize_entity(t.tail.text);
    hq_entities.insert(h);
    hq_entities.insert(tl);
    ++st.per_relation[t.relation].triples;
    rel_entities[t.relation].insert(h);
    rel_entities[t.relation].insert(tl);
  }
  st.high_quality_entities = hq_entities.size();
  for (const auto& [rel, ents] : rel_entities) st.per_relation[rel].entities = ents.size();
  if (store) {
    for (const auto& t : result.triples) store->upsert(t);
  }
  return result;
}

json to_json(const ExtractedTriple& t) {
  return {{"head", {{"text", t.head.text}, {"span", {t.head.span.begin, t.head.span.end}}}},
          {"relation", t.relation},
          {"tail", {{"text", t.tail.text}, {"span", {t.tail.span.begin, t.tail.span.end}}}},
          {"score", t.score},
          {"provenance",
           {{"abstract_id", t.provenance.abstract_id},
            {"sentence_index", t.provenance.sentence_index},
            {"pair_index", t.pair_index},
            {"title", t.provenance.title},
            {"journal", t.provenance.journal},
            {"year", t.provenance.year}}}};
}

namespace {

EntityMention mention_from_json(const json& j) {
  EntityMention m;
  m.text = j.at("text").get<std::string>();
  const auto& span = j.at("span");
  m.span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
  return m;
}

}  // namespace

ExtractedTriple triple_from_json(const json& j) {
  try {
    ExtractedTriple t;
    t.head = mention_from_json(j.at("head"));
    t.relation = j.at("relation").get<std::string>();
    t.tail = mention_from_json(j.at("tail"));
    t.score = j.at("score").get<double>();
    const auto& p = j.at("provenance");
    t.provenance.abstract_id = p.at("abstract_id").get<std::string>();
    t.provenance.sentence_index = p.value("sentence_index", std::size_t{0});
    t.pair_index = p.value("pair_index", std::size_t{0});
    t.provenance.title = p.value("title", "");
    t.provenance.journal = p.value("journal", "");
    t.provenance.year = p.value("year", 0);
    return t;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad triple: ") + e.what());
  }
}

json to_json(const PipelineStats& s) {
  json per = json::object();
  for (const auto& [rel, r] : s.per_relation) per[rel] = {{"triples", r.triples}, {"entities", r.entities}};
  return {{"abstracts", s.abstracts},
          {"sentences", s.sentences},
          {"entity_mentions", s.entity_mentions},
          {"distinct_entities", s.distinct_entities},
          {"candidate_pairs", s.candidate_pairs},
          {"dropped_pairs", s.dropped_pairs},
          {"truncated_pairs", s.truncated_pairs},
          {"high_quality_triples", s.high_quality},
          {"high_quality_entities", s.high_quality_entities},
          {"per_relation", std::move(per)}};
}

std::string triples_jsonl(const std::vector<ExtractedTriple>& triples) {
  std::string out;
  for (const auto& t : triples) out += to_json(t).dump() + "\n";
  return out;
}

void save_triples(const std::filesystem::path& path, const std::vector<ExtractedTriple>& triples) {
  write_file(path, triples_jsonl(triples));
}

std::vector<ExtractedTriple> load_triples(const std::filesystem::path& path) {
  std::vector<ExtractedTriple> out;
  for_each_jsonl(path, [&](std::size_t line, const json& j) {
    try {
      out.push_back(triple_from_json(j));
    } catch (const Error& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace kgc
