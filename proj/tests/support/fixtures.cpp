#include "fixtures.hpp"

#include <array>

namespace fixture {

using kgc::Rng;

kgc::Matrix random_matrix(Rng& rng, long rows, long cols, double scale) {
  kgc::Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = (2.0 * rng.uniform01() - 1.0) * scale;
  return m;
}

GoldKey key_of(const kgc::ExtractedTriple& t) {
  return {t.provenance.abstract_id, t.provenance.sentence_index, t.head.text, t.relation, t.tail.text};
}

namespace {

const std::vector<std::string> kStarts = {"cement",   "clinker", "slag",     "alumina", "silica",  "gypsum",
                                          "limestone", "fly",    "steam",    "porosity", "strength", "shrinkage",
                                          "hydration", "binder", "mortar",   "concrete", "zeolite", "kaolin",
                                          "ettringite", "belite"};
const std::vector<std::string> kModifiers = {"ash", "fume", "paste", "content", "ratio", "phase", "curing", "grade"};

const std::vector<std::pair<std::string, std::array<std::string, 2>>> kRelations = {
    {"lead_to", {"led to", "results in"}},
    {"include", {"includes", "contains"}},
    {"made_from", {"made from", "produced from"}},
    {"part_of", {"is part of", "belongs to"}},
    {"improve", {"improves", "enhances"}},
    {"reduce", {"reduces", "decreases"}},
};

struct Builder {
  Rng rng;
  std::vector<std::string> words;
  std::vector<kgc::Tag> tags;

  std::string entity() {
    std::string e = kStarts[rng.uniform_index(kStarts.size())];
    if (rng.uniform01() < 0.4) e += " " + kModifiers[rng.uniform_index(kModifiers.size())];
    return e;
  }
  kgc::TokenSpan add_entity(const std::string& e) {
    const std::size_t begin = words.size();
    bool first = true;
    for (const auto& w : kgc::split(e, ' ')) {
      words.push_back(w);
      tags.push_back(first ? kgc::Tag::B : kgc::Tag::I);
      first = false;
    }
    return {begin, words.size()};
  }
  void add_words(const std::string& text) {
    for (const auto& w : kgc::split(text, ' ')) {
      words.push_back(w);
      tags.push_back(kgc::Tag::O);
    }
  }
  std::string finish() {
    std::string s = kgc::join(words, " ");
    words.clear();
    tags.clear();
    return s;
  }
};

}  // namespace

PlantedWorld make_planted_world(std::size_t abstracts, std::uint64_t seed) {
  PlantedWorld w;
  for (const auto& [rel, phrases] : kRelations) {
    w.relations.push_back(rel);
    for (const auto& p : phrases) w.phrase_to_relation[p] = rel;
  }
  for (const auto& s : kStarts) w.token_table[s] = (kgc::Vector(3) << 1, 0, 0).finished();
  for (const auto& m : kModifiers) w.token_table[m] = (kgc::Vector(3) << 0, 1, 0).finished();
  w.token_table["<unk>"] = (kgc::Vector(3) << 0, 0, 1).finished();

  Builder b{Rng(seed), {}, {}};
  auto distinct_pair = [&]() {
    std::string x = b.entity(), y = b.entity();
    while (y == x) y = b.entity();
    return std::pair{x, y};
  };

  for (std::size_t a = 0; a < abstracts; ++a) {
    kgc::AbstractRecord rec;
    rec.id = "A" + std::to_string(a);
    rec.title = "Planted study " + std::to_string(a);
    rec.journal = a % 2 ? "Journal of Building Materials" : "Cement Research";
    rec.for_code = "1202";
    rec.year = 2000 + static_cast<int>(a % 20);
    std::vector<std::string> sentences;
    const std::size_t n_sent = 3 + b.rng.uniform_index(3);
    for (std::size_t si = 0; si < n_sent; ++si) {
      const std::size_t kind = b.rng.uniform_index(5);
      const auto& [rel, phrases] = kRelations[b.rng.uniform_index(kRelations.size())];
      const std::string phrase = phrases[b.rng.uniform_index(2)];
      std::vector<std::string> ents;
      b.add_words("The");
      if (kind == 0) {
        auto [x, y] = distinct_pair();
        b.add_entity(x);
        b.add_words(phrase);
        b.add_entity(y);
        ents = {x, y};
        w.gold.emplace(rec.id, si, x, rel, y);
        ++w.gold_per_relation[rel];
      } else if (kind == 1) {
        auto [x, y] = distinct_pair();
        b.add_entity(x);
        b.add_words("and");
        b.add_entity(y);
        b.add_words("were measured");
        ents = {x, y};
      } else if (kind == 2) {
        auto [x, y] = distinct_pair();
        std::string z = b.entity();
        while (z == x || z == y) z = b.entity();
        b.add_entity(x);
        b.add_words("and");
        b.add_entity(y);
        b.add_words(phrase);
        b.add_entity(z);
        ents = {x, y, z};
        w.gold.emplace(rec.id, si, y, rel, z);
        ++w.gold_per_relation[rel];
      } else if (kind == 3) {
        const std::string x = b.entity();
        b.add_entity(x);
        b.add_words("was studied");
        ents = {x};
      } else {
        b.words.clear();
        b.tags.clear();
        b.add_words("This work is reported here");
      }
      b.add_words(".");
      kgc::NerInstance ner;
      ner.id = rec.id + ":s" + std::to_string(si);
      ner.tokens = b.words;
      ner.labels = b.tags;
      w.ner.push_back(ner);
      sentences.push_back(b.finish());
      ++w.sentences;
      w.entity_mentions += ents.size();
      w.candidate_pairs += ents.size() * (ents.size() - (ents.empty() ? 0 : 1)) / 2;
      for (const auto& e : ents) w.distinct_entities.insert(e);
    }
    rec.text = kgc::join(sentences, " ");
    w.corpus.push_back(std::move(rec));
  }

  std::size_t id = 0;
  for (const auto& [rel, phrases] : kRelations) {
    for (int i = 0; i < 3; ++i) {
      auto [x, y] = distinct_pair();
      b.add_words("The");
      kgc::RcInstance r;
      r.head = b.add_entity(x);
      b.add_words(phrases[static_cast<std::size_t>(i) % 2]);
      r.tail = b.add_entity(y);
      b.add_words(".");
      r.tokens = b.words;
      r.relation = rel;
      r.id = "S" + std::to_string(id++);
      b.finish();
      w.rc.push_back(std::move(r));
    }
  }
  return w;
}

kgc::CrfModel oracle_tagger(const kgc::TokenEncoder& encoder, double scale) {
  auto m = kgc::CrfModel::zeros(encoder.dimension(), encoder.id());
  m.weights = kgc::Matrix::Identity(3, 3) * scale;
  return m;
}

std::vector<kgc::ExtractedTriple> random_triples(std::size_t n, std::size_t entities, std::size_t relations,
                                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<kgc::ExtractedTriple> out;
  const auto surface = [&](std::size_t e) {
    std::string s = "entity " + std::to_string(e);
    switch (rng.uniform_index(3)) {
      case 0: return s;
      case 1: s[0] = 'E'; return s;
      default: return "  " + s + " ";
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    kgc::ExtractedTriple t;
    const std::size_t h = rng.uniform_index(entities);
    std::size_t tl = rng.uniform_index(entities);
    if (tl == h) tl = (tl + 1) % entities;
    t.head.text = surface(h);
    t.tail.text = surface(tl);
    t.relation = "rel_" + std::to_string(rng.uniform_index(relations));
    t.score = static_cast<double>(rng.uniform_index(1000)) / 100.0;
    t.provenance.abstract_id = "P" + std::to_string(rng.uniform_index(n / 4 + 1));
    t.provenance.sentence_index = rng.uniform_index(4);
    t.provenance.title = "Title of " + t.provenance.abstract_id;
    t.provenance.journal = "J";
    t.provenance.year = 2010;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace fixture
