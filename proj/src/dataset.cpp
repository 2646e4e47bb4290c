#include "kgc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kgc/error.hpp"

namespace kgc {

namespace {

struct BratEntity {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string surface;
};

struct BratRelation {
  std::string id;
  std::string type;
  std::string arg1;
  std::string arg2;
};

std::size_t parse_offset(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, where + ": bad offset '" + s + "'");
  }
}

json span_json(const TokenSpan& s) { return json::array({s.begin, s.end}); }

TokenSpan span_from(const json& j) { return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()}; }

}  // namespace

char tag_char(Tag tag) {
  switch (tag) {
    case Tag::B: return 'B';
    case Tag::I: return 'I';
    case Tag::O: return 'O';
  }
  return 'O';
}

Tag tag_from_string(std::string_view s) {
  if (s == "B") return Tag::B;
  if (s == "I") return Tag::I;
  if (s == "O") return Tag::O;
  fail(ErrorCode::ParseError, "unknown tag '" + std::string(s) + "'");
}

bool is_valid_bio(const std::vector<Tag>& tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == Tag::I && (i == 0 || tags[i - 1] == Tag::O)) return false;
  }
  return true;
}

std::vector<TokenSpan> bio_entities(const std::vector<Tag>& tags) {
  std::vector<TokenSpan> out;
  std::size_t i = 0;
  while (i < tags.size()) {
    if (tags[i] == Tag::O) {
      ++i;
      continue;
    }
    std::size_t b = i++;
    while (i < tags.size() && tags[i] == Tag::I) ++i;
    out.push_back({b, i});
  }
  return out;
}

std::vector<Tag> tags_from_spans(std::size_t length, const std::vector<TokenSpan>& spans) {
  std::vector<Tag> tags(length, Tag::O);
  for (const auto& s : spans) {
    if (s.empty() || s.end > length) fail(ErrorCode::InvariantViolation, "entity span outside the sentence");
    tags[s.begin] = Tag::B;
    for (std::size_t i = s.begin + 1; i < s.end; ++i) tags[i] = Tag::I;
  }
  return tags;
}

void validate(const NerInstance& x) {
  if (x.labels.size() != x.tokens.size()) fail(ErrorCode::InvariantViolation, x.id + ": labels/tokens length differ");
  if (!is_valid_bio(x.labels)) fail(ErrorCode::InvariantViolation, x.id + ": I tag after O or at start");
  const auto entities = bio_entities(x.labels);
  for (const auto* span : {&x.head, &x.tail}) {
    if (!*span) continue;
    if (std::find(entities.begin(), entities.end(), **span) == entities.end()) {
      fail(ErrorCode::InvariantViolation, x.id + ": head/tail span does not match a B/I run");
    }
  }
}

void validate(const RcInstance& x) {
  const std::size_t n = x.tokens.size();
  if (x.head.empty() || x.tail.empty() || x.head.end > n || x.tail.end > n) {
    fail(ErrorCode::InvariantViolation, x.id + ": head/tail span outside the tokens");
  }
  if (x.head.overlaps(x.tail)) fail(ErrorCode::InvariantViolation, x.id + ": head and tail overlap");
  if (x.relation.empty()) fail(ErrorCode::InvariantViolation, x.id + ": missing relation");
}

BratDocument import_brat(std::string_view text, std::string_view ann, std::string_view doc_id) {
  const std::string doc(doc_id);
  std::map<std::string, BratEntity> entities;
  std::vector<BratRelation> relations;
  std::size_t line_no = 0;
  for (auto line : split(ann, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::string where = doc + ".ann:" + std::to_string(line_no);
    const auto fields = split(line, '\t');
    if (line[0] == 'T') {
      if (fields.size() < 3) fail(ErrorCode::ParseError, where + ": entity line needs 3 fields");
      const auto head = split(fields[1], ' ');
      if (head.size() != 3 || fields[1].find(';') != std::string::npos) {
        fail(ErrorCode::ParseError, where + ": expected '<Type> <start> <end>' (discontinuous spans unsupported)");
      }
      BratEntity e{parse_offset(head[1], where), parse_offset(head[2], where), fields[2]};
      if (e.begin >= e.end || e.end > text.size()) {
        fail(ErrorCode::OffsetError, where + ": offsets [" + head[1] + "," + head[2] + ") outside text of length " +
                                         std::to_string(text.size()));
      }
      if (text.substr(e.begin, e.end - e.begin) != e.surface) {
        fail(ErrorCode::OffsetError, where + ": surface '" + e.surface + "' does not match text '" +
                                         std::string(text.substr(e.begin, e.end - e.begin)) + "'");
      }
      entities[fields[0]] = std::move(e);
    } else if (line[0] == 'R') {
      if (fields.size() < 2) fail(ErrorCode::ParseError, where + ": relation line needs 2 fields");
      const auto parts = split(trim(fields[1]), ' ');
      if (parts.size() != 3 || !parts[1].starts_with("Arg1:") || !parts[2].starts_with("Arg2:")) {
        fail(ErrorCode::ParseError, where + ": expected '<Rel> Arg1:T<a> Arg2:T<b>'");
      }
      relations.push_back({fields[0], parts[0], parts[1].substr(5), parts[2].substr(5)});
    }
  }

  const auto sentences = sentence_spans(text, AbbreviationList::defaults());
  struct SentenceData {
    std::vector<Token> tokens;
    std::vector<std::pair<std::string, TokenSpan>> entities;
  };
  std::vector<SentenceData> data(sentences.size());
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    data[s].tokens = tokenize(text.substr(sentences[s].begin, sentences[s].end - sentences[s].begin));
  }

  std::map<std::string, std::pair<std::size_t, TokenSpan>> located;
  for (const auto& [id, e] : entities) {
    std::size_t s = 0;
    while (s < sentences.size() && !(e.begin >= sentences[s].begin && e.begin < sentences[s].end)) ++s;
    if (s == sentences.size() || e.end > sentences[s].end) {
      fail(ErrorCode::OffsetError, doc + ": entity " + id + " crosses a sentence boundary");
    }
    const std::size_t lb = e.begin - sentences[s].begin;
    const std::size_t le = e.end - sentences[s].begin;
    TokenSpan span{data[s].tokens.size(), 0};
    for (std::size_t t = 0; t < data[s].tokens.size(); ++t) {
      const auto& tok = data[s].tokens[t];
      if (tok.begin < le && lb < tok.end) {
        span.begin = std::min(span.begin, t);
        span.end = t + 1;
      }
    }
    if (span.empty()) fail(ErrorCode::OffsetError, doc + ": entity " + id + " covers no token");
    located[id] = {s, span};
    data[s].entities.push_back({id, span});
  }

  BratDocument out;
  std::map<std::size_t, std::pair<TokenSpan, TokenSpan>> first_pair;
  for (const auto& r : relations) {
    auto a = located.find(r.arg1);
    auto b = located.find(r.arg2);
    if (a == located.end() || b == located.end()) {
      fail(ErrorCode::DanglingRef, doc + ": relation " + r.id + " references a missing entity");
    }
    if (a->second.first != b->second.first) {
      fail(ErrorCode::OffsetError, doc + ": relation " + r.id + " spans two sentences");
    }
    const std::size_t s = a->second.first;
    RcInstance x;
    x.id = doc + ":" + r.id;
    for (const auto& t : data[s].tokens) x.tokens.push_back(t.text);
    x.head = a->second.second;
    x.tail = b->second.second;
    x.relation = r.type;
    validate(x);
    out.rc.push_back(std::move(x));
    first_pair.try_emplace(s, a->second.second, b->second.second);
  }

  for (std::size_t s = 0; s < data.size(); ++s) {
    if (data[s].entities.empty()) continue;
    auto spans = data[s].entities;
    std::sort(spans.begin(), spans.end(), [](const auto& x, const auto& y) { return x.second < y.second; });
    std::vector<TokenSpan> kept;
    for (const auto& [id, span] : spans) {
      if (kept.empty() || !kept.back().overlaps(span)) kept.push_back(span);
    }
    NerInstance x;
    x.id = doc + ":s" + std::to_string(s);
    for (const auto& t : data[s].tokens) x.tokens.push_back(t.text);
    x.labels = tags_from_spans(x.tokens.size(), kept);
    if (auto it = first_pair.find(s); it != first_pair.end()) {
      const auto has = [&](const TokenSpan& sp) { return std::find(kept.begin(), kept.end(), sp) != kept.end(); };
      if (has(it->second.first) && has(it->second.second)) {
        x.head = it->second.first;
        x.tail = it->second.second;
      }
    }
    validate(x);
    out.ner.push_back(std::move(x));
  }
  return out;
}

BratDocument import_brat_files(const std::filesystem::path& txt, const std::filesystem::path& ann) {
  return import_brat(read_file(txt), read_file(ann), ann.stem().string());
}

BratDocument import_brat_dir(const std::filesystem::path& txt_dir, const std::filesystem::path& ann_dir) {
  std::vector<std::filesystem::path> anns;
  for (const auto& entry : std::filesystem::directory_iterator(ann_dir)) {
    if (entry.path().extension() == ".ann") anns.push_back(entry.path());
  }
  std::sort(anns.begin(), anns.end());
  BratDocument all;
  for (const auto& ann : anns) {
    auto txt = txt_dir / (ann.stem().string() + ".txt");
    auto doc = import_brat_files(txt, ann);
    all.ner.insert(all.ner.end(), doc.ner.begin(), doc.ner.end());
    all.rc.insert(all.rc.end(), doc.rc.begin(), doc.rc.end());
  }
  return all;
}

std::vector<LintWarning> lint_annotations(const std::vector<NerInstance>& ner, const std::vector<RcInstance>& rc,
                                          std::size_t max_entity_tokens) {
  static const std::set<std::string> coordinators = {"and", "or", "nor", "but", "&", ","};
  std::vector<LintWarning> out;
  std::set<std::tuple<std::string, TokenSpan, std::string>> seen;
  auto check = [&](const std::string& id, const std::vector<std::string>& tokens, TokenSpan span) {
    std::string surface;
    for (std::size_t i = span.begin; i < span.end && i < tokens.size(); ++i) {
      surface += (i > span.begin ? " " : "") + tokens[i];
    }
    for (std::size_t i = span.begin; i < span.end && i < tokens.size(); ++i) {
      if (coordinators.count(to_lower_ascii(tokens[i]))) {
        if (seen.insert({id, span, "coordinate-entity"}).second) {
          out.push_back({id, span, "coordinate-entity", "entity '" + surface + "' joins coordinate entities with '" + tokens[i] + "'"});
        }
        break;
      }
    }
    if (span.size() > max_entity_tokens && seen.insert({id, span, "entity-length"}).second) {
      out.push_back({id, span, "entity-length",
                     "entity '" + surface + "' has " + std::to_string(span.size()) + " tokens (cap " +
                         std::to_string(max_entity_tokens) + "), likely holds a clause"});
    }
  };
  for (const auto& x : ner) {
    for (const auto& span : bio_entities(x.labels)) check(x.id, x.tokens, span);
  }
  for (const auto& x : rc) {
    check(x.id, x.tokens, x.head);
    check(x.id, x.tokens, x.tail);
  }
  return out;
}

RelationPool group_by_relation(const std::vector<RcInstance>& instances) {
  RelationPool pool;
  for (const auto& x : instances) pool[x.relation].push_back(x);
  return pool;
}

namespace {

RelationSplit cut(const std::vector<std::string>& order, SplitCounts counts) {
  RelationSplit s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(counts.train));
  s.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(counts.train),
                      order.begin() + static_cast<std::ptrdiff_t>(counts.train + counts.validation));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(counts.train + counts.validation), order.end());
  return s;
}

}  // namespace

RcSplit split_rc(const std::vector<RcInstance>& instances, std::uint64_t seed, SplitCounts counts,
                 std::optional<std::size_t> per_relation) {
  const RelationPool pool = group_by_relation(instances);
  if (pool.size() != counts.total()) {
    fail(ErrorCode::SplitError, "expected " + std::to_string(counts.total()) + " relations, found " +
                                    std::to_string(pool.size()));
  }
  RcSplit out;
  for (const auto& [name, members] : pool) {
    if (per_relation && members.size() != *per_relation) {
      fail(ErrorCode::SplitError, "relation '" + name + "' has " + std::to_string(members.size()) +
                                      " instances, expected " + std::to_string(*per_relation));
    }
    out.order.push_back(name);
  }
  Rng rng(seed);
  rng.shuffle(out.order);
  out.relations = cut(out.order, counts);
  auto collect = [&](const std::vector<std::string>& names, std::vector<RcInstance>& dst) {
    for (const auto& name : names) {
      const auto& members = pool.at(name);
      dst.insert(dst.end(), members.begin(), members.end());
    }
  };
  collect(out.relations.train, out.train);
  collect(out.relations.validation, out.validation);
  collect(out.relations.test, out.test);
  return out;
}

NerSplit split_ner(const std::vector<NerInstance>& instances, std::uint64_t seed, double train_ratio,
                   std::optional<std::size_t> expected_size) {
  if (expected_size && instances.size() != *expected_size) {
    fail(ErrorCode::SplitError, "expected " + std::to_string(*expected_size) + " NER instances, found " +
                                    std::to_string(instances.size()));
  }
  if (!(train_ratio >= 0.0 && train_ratio <= 1.0)) fail(ErrorCode::SplitError, "train ratio outside [0,1]");
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(instances.size()) * train_ratio));
  Rng rng(seed);
  const auto order = rng.sample_indices(instances.size(), instances.size());
  NerSplit out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? out.train : out.validation).push_back(instances[order[i]]);
  }
  return out;
}

RelationSplit rotate_folds(const std::vector<std::string>& order, int fold, SplitCounts counts) {
  if (fold < 1 || fold > 5) fail(ErrorCode::InvalidFold, "fold " + std::to_string(fold) + " outside 1..5");
  if (order.size() != counts.total()) {
    fail(ErrorCode::SplitError, "rotation needs " + std::to_string(counts.total()) + " relations, got " +
                                    std::to_string(order.size()));
  }
  const std::size_t n = order.size();
  const std::size_t shift = (4 * static_cast<std::size_t>(fold - 1)) % n;
  std::vector<std::string> rotated(n);
  for (std::size_t i = 0; i < n; ++i) rotated[(i + shift) % n] = order[i];
  return cut(rotated, counts);
}

Episode sample_episode(const RelationPool& pool, std::size_t n_way, std::size_t k_shot, std::size_t q_query, Rng& rng) {
  if (n_way == 0 || k_shot == 0) fail(ErrorCode::EpisodeInfeasible, "N and K must be positive");
  std::vector<const std::pair<const std::string, std::vector<RcInstance>>*> eligible;
  for (const auto& entry : pool) {
    if (entry.second.size() >= k_shot + q_query) eligible.push_back(&entry);
  }
  if (eligible.size() < n_way) {
    fail(ErrorCode::EpisodeInfeasible, std::to_string(eligible.size()) + " relations hold >= " +
                                           std::to_string(k_shot + q_query) + " instances; " +
                                           std::to_string(n_way) + " needed");
  }
  Episode ep;
  ep.n_way = n_way;
  ep.k_shot = k_shot;
  ep.q_query = q_query;
  for (std::size_t r : rng.sample_indices(eligible.size(), n_way)) {
    const auto& [name, members] = *eligible[r];
    const auto picks = rng.sample_indices(members.size(), k_shot + q_query);
    std::vector<RcInstance> support;
    std::vector<RcInstance> queries;
    for (std::size_t i = 0; i < picks.size(); ++i) {
      (i < k_shot ? support : queries).push_back(members[picks[i]]);
    }
    ep.relations.push_back(name);
    ep.support.push_back(std::move(support));
    ep.queries.push_back(std::move(queries));
  }
  return ep;
}

Episode sample_episode(const RelationPool& pool, std::size_t n_way, std::size_t k_shot, std::size_t q_query,
                       std::uint64_t seed) {
  Rng rng(seed);
  return sample_episode(pool, n_way, k_shot, q_query, rng);
}

AnnotationDiff diff_annotations(const std::vector<RcInstance>& before, const std::vector<RcInstance>& after) {
  std::map<std::string, const RcInstance*> old_by_id;
  std::map<std::string, const RcInstance*> new_by_id;
  for (const auto& x : before) old_by_id[x.id] = &x;
  for (const auto& x : after) new_by_id[x.id] = &x;
  AnnotationDiff diff;
  for (const auto& [id, x] : new_by_id) {
    auto it = old_by_id.find(id);
    if (it == old_by_id.end()) {
      diff.added.push_back(id);
    } else if (it->second->tokens != x->tokens || it->second->head != x->head || it->second->tail != x->tail ||
               it->second->relation != x->relation) {
      diff.changed.push_back(id);
    }
  }
  for (const auto& [id, x] : old_by_id) {
    if (!new_by_id.count(id)) diff.removed.push_back(id);
  }
  return diff;
}

json to_json(const NerInstance& x) {
  json labels = json::array();
  for (Tag t : x.labels) labels.push_back(std::string(1, tag_char(t)));
  json j{{"id", x.id}, {"tokens", x.tokens}, {"labels", labels}};
  if (x.head) j["head"] = span_json(*x.head);
  if (x.tail) j["tail"] = span_json(*x.tail);
  return j;
}

NerInstance ner_from_json(const json& j) {
  NerInstance x;
  x.id = j.value("id", "");
  x.tokens = j.at("tokens").get<std::vector<std::string>>();
  for (const auto& l : j.at("labels")) x.labels.push_back(tag_from_string(l.get<std::string>()));
  if (j.contains("head")) x.head = span_from(j.at("head"));
  if (j.contains("tail")) x.tail = span_from(j.at("tail"));
  return x;
}

json to_json(const RcInstance& x) {
  return json{{"id", x.id}, {"tokens", x.tokens}, {"head", span_json(x.head)}, {"tail", span_json(x.tail)},
              {"relation", x.relation}};
}

RcInstance rc_from_json(const json& j) {
  RcInstance x;
  x.id = j.value("id", "");
  x.tokens = j.at("tokens").get<std::vector<std::string>>();
  x.head = span_from(j.at("head"));
  x.tail = span_from(j.at("tail"));
  x.relation = j.at("relation").get<std::string>();
  return x;
}

std::vector<NerInstance> load_ner(const std::filesystem::path& path) {
  std::vector<NerInstance> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& row) {
    try {
      out.push_back(ner_from_json(row));
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (out.back().id.empty()) out.back().id = "ner:" + std::to_string(line_no);
    validate(out.back());
  });
  return out;
}

std::vector<RcInstance> load_rc(const std::filesystem::path& path) {
  std::vector<RcInstance> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& row) {
    try {
      out.push_back(rc_from_json(row));
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (out.back().id.empty()) out.back().id = "rc:" + std::to_string(line_no);
    validate(out.back());
  });
  return out;
}

void save_ner(const std::filesystem::path& path, const std::vector<NerInstance>& instances) {
  std::vector<json> rows;
  for (const auto& x : instances) rows.push_back(to_json(x));
  write_jsonl(path, rows);
}

void save_rc(const std::filesystem::path& path, const std::vector<RcInstance>& instances) {
  std::vector<json> rows;
  for (const auto& x : instances) rows.push_back(to_json(x));
  write_jsonl(path, rows);
}

}  // namespace kgc
