#pragma once

// Synthetic data with known ground truth.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "kgc/corpus.hpp"
#include "kgc/dataset.hpp"
#include "kgc/encoder.hpp"
#include "kgc/graph_store.hpp"
#include "kgc/pipeline.hpp"
#include "kgc/tagger.hpp"

namespace fixture {

/// Uniform entries in [-scale, scale].
kgc::Matrix random_matrix(kgc::Rng& rng, long rows, long cols, double scale = 2.0);

using GoldKey = std::tuple<std::string, std::size_t, std::string, std::string, std::string>;
GoldKey key_of(const kgc::ExtractedTriple& t);

/// A corpus of planted sentences whose entities and relations are known.
/// Entities are one or two tokens: a head word optionally followed by a
/// modifier word. Relation phrases come in synonym pairs.
struct PlantedWorld {
  std::vector<std::string> relations;
  std::map<std::string, std::string> phrase_to_relation;
  std::vector<kgc::AbstractRecord> corpus;
  std::set<GoldKey> gold;
  std::size_t sentences = 0;
  std::size_t entity_mentions = 0;
  std::size_t candidate_pairs = 0;
  std::set<std::string> distinct_entities;
  std::map<std::string, std::size_t> gold_per_relation;
  std::vector<kgc::NerInstance> ner;
  std::vector<kgc::RcInstance> rc;
  /// token -> one-hot (entity start, entity continuation, other)
  std::map<std::string, kgc::Vector> token_table;
};

PlantedWorld make_planted_world(std::size_t abstracts, std::uint64_t seed);

/// Tagger whose emissions copy the one-hot token features, scaled.
kgc::CrfModel oracle_tagger(const kgc::TokenEncoder& encoder, double scale = 5.0);

/// Random ExtractedTriples over a vocabulary of `entities` surfaces.
std::vector<kgc::ExtractedTriple> random_triples(std::size_t n, std::size_t entities, std::size_t relations,
                                                 std::uint64_t seed);

}  // namespace fixture
