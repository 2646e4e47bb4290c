#include "kgc/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kgc/error.hpp"
#include "kgc/summary.hpp"

namespace kgc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr auto kB = static_cast<Eigen::Index>(Tag::B);
constexpr auto kI = static_cast<Eigen::Index>(Tag::I);
constexpr auto kO = static_cast<Eigen::Index>(Tag::O);

void check_dimension(const Matrix& features, const CrfModel& model) {
  if (static_cast<std::size_t>(features.cols()) != model.dimension()) {
    fail(ErrorCode::DimensionMismatch, "encoder dimension " + std::to_string(features.cols()) +
                                           " != model dimension " + std::to_string(model.dimension()));
  }
}

struct Adam {
  Matrix m, v;
  explicit Adam(const Matrix& like) : m(Matrix::Zero(like.rows(), like.cols())), v(Matrix::Zero(like.rows(), like.cols())) {}

  void step(Matrix& param, const Matrix& grad, const TrainConfig& c, std::size_t t) {
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
    for (Eigen::Index i = 0; i < param.rows(); ++i) {
      for (Eigen::Index j = 0; j < param.cols(); ++j) {
        if (!std::isfinite(param(i, j))) continue;
        const double g = grad(i, j);
        m(i, j) = c.beta1 * m(i, j) + (1 - c.beta1) * g;
        v(i, j) = c.beta2 * v(i, j) + (1 - c.beta2) * g * g;
        param(i, j) -= c.learning_rate * (m(i, j) / bc1) / (std::sqrt(v(i, j) / bc2) + c.epsilon);
      }
    }
  }
};

std::vector<TrainingExample> encode_all(const std::vector<NerInstance>& data, const TokenEncoder& encoder) {
  std::vector<TrainingExample> out;
  out.reserve(data.size());
  for (const auto& inst : data) {
    if (inst.tokens.empty()) continue;
    out.push_back({encoder.encode(inst.tokens), inst.labels});
  }
  return out;
}

double mean_loss(const CrfModel& model, const std::vector<TrainingExample>& data) {
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : data) total += nll_loss(emissions(ex.features, model), model.transitions, ex.gold);
  return total / static_cast<double>(data.size());
}

}  // namespace

CrfModel CrfModel::zeros(std::size_t dimension, std::string encoder_id, bool constrained, double dropout) {
  CrfModel m;
  m.encoder_id = std::move(encoder_id);
  m.weights = Matrix::Zero(static_cast<Eigen::Index>(dimension), kNumTags);
  m.transitions = Matrix::Zero(kNumTags + 2, kNumTags + 2);
  m.dropout = dropout;
  m.constrained = constrained;
  if (constrained) apply_bio_constraints(m.transitions);
  return m;
}

void apply_bio_constraints(Matrix& transitions) {
  transitions(kO, kI) = kNegInf;
  transitions(static_cast<Eigen::Index>(kStartState), kI) = kNegInf;
}

Matrix emissions(const Matrix& features, const CrfModel& model) {
  check_dimension(features, model);
  return features * model.weights;
}

Matrix emissions(const Matrix& features, const CrfModel& model, Rng& dropout_rng) {
  check_dimension(features, model);
  if (model.dropout <= 0.0) return features * model.weights;
  const double keep = 1.0 - model.dropout;
  Matrix dropped = features;
  for (Eigen::Index i = 0; i < dropped.rows(); ++i) {
    for (Eigen::Index j = 0; j < dropped.cols(); ++j) {
      dropped(i, j) = dropout_rng.uniform01() < model.dropout ? 0.0 : dropped(i, j) / keep;
    }
  }
  return dropped * model.weights;
}

std::vector<std::size_t> tag_indices(const std::vector<Tag>& tags) {
  std::vector<std::size_t> out;
  out.reserve(tags.size());
  for (Tag t : tags) out.push_back(static_cast<std::size_t>(t));
  return out;
}

std::vector<Tag> tags_of(const std::vector<std::size_t>& indices) {
  std::vector<Tag> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= kNumTags) fail(ErrorCode::InvalidArgument, "label index out of range");
    out.push_back(static_cast<Tag>(i));
  }
  return out;
}

double nll_loss(const Matrix& em, const Matrix& transitions, const std::vector<Tag>& gold) {
  if (!is_valid_bio(gold)) fail(ErrorCode::InvalidGold, "gold sequence is not BIO-valid");
  if (em.cols() != static_cast<Eigen::Index>(kNumTags)) fail(ErrorCode::DimensionMismatch, "emissions must have 3 columns");
  return crf::sequence_nll(em, transitions, tag_indices(gold));
}

double loss_and_gradient(const CrfModel& model, const std::vector<TrainingExample>& batch, CrfGradient& grad,
                         Rng* dropout_rng) {
  grad.weights = Matrix::Zero(model.weights.rows(), model.weights.cols());
  grad.transitions = Matrix::Zero(model.transitions.rows(), model.transitions.cols());
  if (batch.empty()) return 0.0;
  const auto S = static_cast<Eigen::Index>(kStartState);
  const auto E = static_cast<Eigen::Index>(kEndState);
  double total = 0.0;
  for (const auto& ex : batch) {
    if (!is_valid_bio(ex.gold)) fail(ErrorCode::InvalidGold, "gold sequence is not BIO-valid");
    if (ex.gold.size() != static_cast<std::size_t>(ex.features.rows())) {
      fail(ErrorCode::DimensionMismatch, "gold length differs from token count");
    }
    check_dimension(ex.features, model);
    Matrix feats = ex.features;
    if (dropout_rng && model.dropout > 0.0) {
      const double keep = 1.0 - model.dropout;
      for (Eigen::Index i = 0; i < feats.rows(); ++i)
        for (Eigen::Index j = 0; j < feats.cols(); ++j)
          feats(i, j) = dropout_rng->uniform01() < model.dropout ? 0.0 : feats(i, j) / keep;
    }
    const Matrix em = feats * model.weights;
    const auto gold = tag_indices(ex.gold);
    const auto marg = crf::marginals(em, model.transitions);
    total += std::max(0.0, marg.log_z - crf::path_score(em, model.transitions, gold));

    Matrix diff = marg.unary;
    Matrix counts = marg.pairwise;
    for (std::size_t t = 0; t < gold.size(); ++t) {
      diff(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(gold[t])) -= 1.0;
      if (t > 0) counts(static_cast<Eigen::Index>(gold[t - 1]), static_cast<Eigen::Index>(gold[t])) -= 1.0;
    }
    counts(S, static_cast<Eigen::Index>(gold.front())) -= 1.0;
    counts(static_cast<Eigen::Index>(gold.back()), E) -= 1.0;
    grad.weights.noalias() += feats.transpose() * diff;
    grad.transitions += counts;
  }
  const double n = static_cast<double>(batch.size());
  grad.weights /= n;
  grad.transitions /= n;
  for (Eigen::Index i = 0; i < grad.transitions.rows(); ++i)
    for (Eigen::Index j = 0; j < grad.transitions.cols(); ++j)
      if (!std::isfinite(model.transitions(i, j))) grad.transitions(i, j) = 0.0;
  return total / n;
}

CrfGradient gradient(const CrfModel& model, const std::vector<TrainingExample>& batch) {
  CrfGradient g;
  loss_and_gradient(model, batch, g);
  return g;
}

std::vector<Tag> predict(const CrfModel& model, const TokenEncoder& encoder, const std::vector<std::string>& tokens) {
  if (tokens.empty()) return {};
  return tags_of(crf::viterbi(emissions(encoder.encode(tokens), model), model.transitions).labels);
}

TrainConfig TrainConfig::practical() {
  TrainConfig c;
  c.learning_rate = 1e-3;
  return c;
}

TrainResult train(const std::vector<NerInstance>& training, const std::vector<NerInstance>& validation,
                  const TokenEncoder& encoder, const TrainConfig& config) {
  if (training.empty()) fail(ErrorCode::InvalidArgument, "training set is empty");
  if (config.batch_size == 0) fail(ErrorCode::InvalidArgument, "batch size must be positive");
  for (const auto& inst : training) validate(inst);
  for (const auto& inst : validation) validate(inst);
  const auto train_set = encode_all(training, encoder);
  const auto val_set = encode_all(validation, encoder);

  TrainResult result;
  result.model = CrfModel::zeros(encoder.dimension(), encoder.id(), config.constrained, config.dropout);
  result.model.manifest = {{"seed", config.seed},
                           {"batch_size", config.batch_size},
                           {"learning_rate", config.learning_rate},
                           {"optimizer", "adam"},
                           {"beta1", config.beta1},
                           {"beta2", config.beta2},
                           {"epsilon", config.epsilon},
                           {"epochs", config.epochs},
                           {"dropout", config.dropout},
                           {"constrained", config.constrained},
                           {"training_instances", train_set.size()}};
  CrfModel& model = result.model;
  Adam adam_w(model.weights);
  Adam adam_t(model.transitions);
  Rng dropout_rng(derive_seed(config.seed, 0xd409));
  std::vector<std::size_t> order(train_set.size());
  std::size_t step = 0;
  CrfGradient grad;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(config.seed, epoch));
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::vector<TrainingExample> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        batch.push_back(train_set[order[i]]);
      }
      const double loss = loss_and_gradient(model, batch, grad, &dropout_rng);
      if (!std::isfinite(loss)) {
        fail(ErrorCode::TrainingDiverged, "non-finite loss in epoch " + std::to_string(epoch + 1));
      }
      ++step;
      adam_w.step(model.weights, grad.weights, config, step);
      adam_t.step(model.transitions, grad.transitions, config, step);
    }
    const double tl = mean_loss(model, train_set);
    if (!std::isfinite(tl)) fail(ErrorCode::TrainingDiverged, "non-finite loss after epoch " + std::to_string(epoch + 1));
    result.train_loss.push_back(tl);
    result.validation_loss.push_back(mean_loss(model, val_set));
  }
  return result;
}

TagMetrics score_tags(const std::vector<std::vector<Tag>>& gold, const std::vector<std::vector<Tag>>& predicted) {
  if (gold.size() != predicted.size()) fail(ErrorCode::DimensionMismatch, "gold and predicted counts differ");
  TagMetrics m;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != predicted[s].size()) fail(ErrorCode::DimensionMismatch, "sequence lengths differ");
    m.tokens += gold[s].size();
    for (std::size_t t = 0; t < gold[s].size(); ++t) m.correct_tokens += gold[s][t] == predicted[s][t];
    const auto g = bio_entities(gold[s]);
    const auto p = bio_entities(predicted[s]);
    m.gold_entities += g.size();
    m.predicted_entities += p.size();
    for (const auto& span : p) m.correct_entities += std::find(g.begin(), g.end(), span) != g.end();
  }
  if (m.tokens) m.token_accuracy = static_cast<double>(m.correct_tokens) / static_cast<double>(m.tokens);
  if (m.predicted_entities) m.precision = static_cast<double>(m.correct_entities) / static_cast<double>(m.predicted_entities);
  if (m.gold_entities) m.recall = static_cast<double>(m.correct_entities) / static_cast<double>(m.gold_entities);
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

TagMetrics evaluate(const CrfModel& model, const TokenEncoder& encoder, const std::vector<NerInstance>& dataset) {
  std::vector<std::vector<Tag>> gold, pred;
  gold.reserve(dataset.size());
  pred.reserve(dataset.size());
  for (const auto& inst : dataset) {
    gold.push_back(inst.labels);
    pred.push_back(predict(model, encoder, inst.tokens));
  }
  return score_tags(gold, pred);
}

std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0 || k > n) fail(ErrorCode::InvalidK, "k=" + std::to_string(k) + " for " + std::to_string(n) + " items");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return folds;
}

void summarize_folds(KFoldResult& result) {
  const auto field = [&](auto member) {
    std::vector<double> values;
    for (const auto& f : result.folds) values.push_back(f.*member);
    const Summary s = summarize(values);
    result.mean.*member = s.mean;
    result.stddev.*member = s.stddev;
  };
  field(&TagMetrics::token_accuracy);
  field(&TagMetrics::precision);
  field(&TagMetrics::recall);
  field(&TagMetrics::f1);
}

KFoldResult kfold(const std::vector<NerInstance>& dataset, const TokenEncoder& encoder, const TrainConfig& config,
                  std::size_t k, std::uint64_t seed) {
  const auto folds = kfold_partition(dataset.size(), k, seed);
  KFoldResult result;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<NerInstance> train_part, held_out;
    for (std::size_t g = 0; g < k; ++g) {
      for (std::size_t i : folds[g]) (g == f ? held_out : train_part).push_back(dataset[i]);
    }
    TrainConfig c = config;
    c.seed = derive_seed(config.seed, f);
    const auto trained = train(train_part, held_out, encoder, c);
    result.folds.push_back(evaluate(trained.model, encoder, held_out));
  }
  summarize_folds(result);
  return result;
}

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (std::isfinite(m(i, j))) row.push_back(m(i, j));
      else row.push_back(nullptr);  // -inf
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows, std::size_t expected_cols) {
  if (!rows.is_array() || rows.empty()) fail(ErrorCode::ParseError, "matrix must be a non-empty array of rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(expected_cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != expected_cols) fail(ErrorCode::ParseError, "ragged matrix row");
    for (std::size_t j = 0; j < expected_cols; ++j) {
      const auto& v = rows[i][j];
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v.is_null() ? kNegInf : v.get<double>();
    }
  }
  return m;
}

}  // namespace

json to_json(const CrfModel& model) {
  return {{"labels", {"B", "I", "O"}},
          {"encoder_id", model.encoder_id},
          {"dropout", model.dropout},
          {"constrained", model.constrained},
          {"weights", matrix_json(model.weights)},
          {"transitions", matrix_json(model.transitions)},
          {"manifest", model.manifest}};
}

CrfModel crf_from_json(const json& j) {
  try {
    if (j.at("labels") != json{"B", "I", "O"}) fail(ErrorCode::ParseError, "model labels must be [B, I, O]");
    CrfModel m;
    m.encoder_id = j.at("encoder_id").get<std::string>();
    m.dropout = j.value("dropout", 0.1);
    m.constrained = j.value("constrained", true);
    m.weights = matrix_from_json(j.at("weights"), kNumTags);
    m.transitions = matrix_from_json(j.at("transitions"), kNumTags + 2);
    if (m.transitions.rows() != static_cast<Eigen::Index>(kNumTags + 2)) fail(ErrorCode::ParseError, "transitions must be 5 x 5");
    if (!m.weights.allFinite()) fail(ErrorCode::ParseError, "weights must be finite");
    m.manifest = j.value("manifest", json::object());
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad model json: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const CrfModel& model) { write_file(path, to_json(model).dump(1)); }

CrfModel load_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return crf_from_json(j);
}

json to_json(const TagMetrics& m) {
  return {{"token_accuracy", m.token_accuracy},
          {"entity_precision", m.precision},
          {"entity_recall", m.recall},
          {"entity_f1", m.f1},
          {"tokens", m.tokens},
          {"correct_tokens", m.correct_tokens},
          {"predicted_entities", m.predicted_entities},
          {"gold_entities", m.gold_entities},
          {"correct_entities", m.correct_entities}};
}

}  // namespace kgc
