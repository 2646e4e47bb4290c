#include "kgc/encoder.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "kgc/error.hpp"
#include "kgc/util.hpp"

namespace kgc {

namespace {

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t b = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > b) out.emplace_back(text.substr(b, i - b));
  }
  return out;
}

void add_hashed(Eigen::Ref<Vector> v, std::string_view feature, double weight = 1.0) {
  const std::uint64_t h = fnv1a64(feature);
  const auto index = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(v.size()));
  v[index] += (h >> 63) ? -weight : weight;
}

std::string word_shape(std::string_view w) {
  bool upper = false, lower = false, digit = false, other = false;
  for (char c : w) {
    if (c >= 'A' && c <= 'Z') upper = true;
    else if (c >= 'a' && c <= 'z') lower = true;
    else if (c >= '0' && c <= '9') digit = true;
    else other = true;
  }
  std::string shape;
  if (!w.empty() && w[0] >= 'A' && w[0] <= 'Z') shape += "Cap";
  if (upper) shape += "U";
  if (lower) shape += "l";
  if (digit) shape += "d";
  if (other) shape += "p";
  return shape;
}

}  // namespace

EmbedResult embed(const std::vector<std::string>& texts, const EncoderProvider& provider) {
  EmbedResult result;
  result.vectors.reserve(texts.size());
  const std::size_t d = provider.dimension();
  for (const auto& text : texts) {
    std::string input = text;
    auto tokens = whitespace_tokens(text);
    if (tokens.size() > provider.max_tokens()) {
      tokens.resize(provider.max_tokens());
      input = join(tokens, " ");
      ++result.truncated;
    }
    Vector v;
    try {
      v = provider.encode(input);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::EncoderUnavailable) throw;
      fail(ErrorCode::EncoderUnavailable, provider.id() + ": " + e.what());
    } catch (const std::exception& e) {
      fail(ErrorCode::EncoderUnavailable, provider.id() + ": " + e.what());
    }
    if (static_cast<std::size_t>(v.size()) != d) {
      fail(ErrorCode::EncoderUnavailable, provider.id() + " returned dimension " + std::to_string(v.size()) +
                                              ", declared " + std::to_string(d));
    }
    if (!v.allFinite()) fail(ErrorCode::EncoderUnavailable, provider.id() + " returned non-finite values");
    result.vectors.push_back(std::move(v));
  }
  return result;
}

HashedProvider::HashedProvider(std::size_t dimension, std::size_t max_ngram)
    : dimension_(dimension), max_ngram_(max_ngram) {
  if (dimension_ == 0 || max_ngram_ == 0) fail(ErrorCode::InvalidArgument, "hashed provider needs d > 0 and n > 0");
}

std::string HashedProvider::id() const {
  return "hashed:d=" + std::to_string(dimension_) + ":n=" + std::to_string(max_ngram_);
}

Vector HashedProvider::encode(std::string_view text) const {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(dimension_));
  auto tokens = whitespace_tokens(text);
  for (auto& t : tokens) t = to_lower_ascii(t);
  for (std::size_t n = 1; n <= max_ngram_; ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string feature = std::to_string(n) + ":" + tokens[i];
      for (std::size_t k = 1; k < n; ++k) feature += " " + tokens[i + k];
      add_hashed(v, feature);
    }
  }
  const double norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

TokenAveragingProvider::TokenAveragingProvider(std::shared_ptr<const EncoderProvider> base) : base_(std::move(base)) {
  if (!base_) fail(ErrorCode::EncoderUnavailable, "token averaging provider needs a base provider");
}

std::string TokenAveragingProvider::id() const { return "mean(" + base_->id() + ")"; }

Vector TokenAveragingProvider::encode(std::string_view text) const {
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(dimension()));
  const auto tokens = whitespace_tokens(text);
  for (const auto& t : tokens) sum += base_->encode(t);
  if (!tokens.empty()) sum /= static_cast<double>(tokens.size());
  return sum;
}

TableProvider::TableProvider(std::string name, std::map<std::string, Vector> table) : name_(std::move(name)) {
  for (auto& [k, v] : table) {
    if (dimension_ == 0) dimension_ = static_cast<std::size_t>(v.size());
    if (static_cast<std::size_t>(v.size()) != dimension_) {
      fail(ErrorCode::DimensionMismatch, "table '" + name_ + "' mixes vector dimensions");
    }
    table_.emplace(k, std::move(v));
  }
}

TableProvider TableProvider::load(const std::filesystem::path& path) {
  return TableProvider(path.string(), load_vector_table(path));
}

std::size_t TableProvider::max_tokens() const { return std::numeric_limits<std::size_t>::max(); }

Vector TableProvider::encode(std::string_view text) const {
  auto it = table_.find(text);
  if (it == table_.end()) fail(ErrorCode::EncoderUnavailable, "table '" + name_ + "' has no entry for '" + std::string(text) + "'");
  return it->second;
}

bool TableProvider::contains(std::string_view text) const { return table_.find(text) != table_.end(); }

HashedTokenEncoder::HashedTokenEncoder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) fail(ErrorCode::InvalidArgument, "hashed token encoder needs d > 0");
}

std::string HashedTokenEncoder::id() const { return "hashed-token:d=" + std::to_string(dimension_); }

Matrix HashedTokenEncoder::encode(const std::vector<std::string>& tokens) const {
  const auto T = static_cast<Eigen::Index>(tokens.size());
  Matrix x = Matrix::Zero(T, static_cast<Eigen::Index>(dimension_));
  for (Eigen::Index t = 0; t < T; ++t) {
    const std::string w = to_lower_ascii(tokens[static_cast<std::size_t>(t)]);
    const std::string prev = t > 0 ? to_lower_ascii(tokens[static_cast<std::size_t>(t - 1)]) : "<s>";
    const std::string next = t + 1 < T ? to_lower_ascii(tokens[static_cast<std::size_t>(t + 1)]) : "</s>";
    Vector row = Vector::Zero(static_cast<Eigen::Index>(dimension_));
    add_hashed(row, "w=" + w);
    add_hashed(row, "p=" + prev);
    add_hashed(row, "n=" + next);
    add_hashed(row, "s3=" + (w.size() > 3 ? w.substr(w.size() - 3) : w));
    add_hashed(row, "shape=" + word_shape(tokens[static_cast<std::size_t>(t)]));
    add_hashed(row, "bias");
    x.row(t) = row.transpose();
  }
  return x;
}

TableTokenEncoder::TableTokenEncoder(std::string name, std::map<std::string, Vector> table)
    : name_(std::move(name)), table_(std::move(table)) {
  for (const auto& [k, v] : table_) {
    if (dimension_ == 0) dimension_ = static_cast<std::size_t>(v.size());
    if (static_cast<std::size_t>(v.size()) != dimension_) {
      fail(ErrorCode::DimensionMismatch, "token table '" + name_ + "' mixes vector dimensions");
    }
  }
}

TableTokenEncoder TableTokenEncoder::load(const std::filesystem::path& path) {
  return TableTokenEncoder(path.string(), load_vector_table(path));
}

Matrix TableTokenEncoder::encode(const std::vector<std::string>& tokens) const {
  Matrix x(static_cast<Eigen::Index>(tokens.size()), static_cast<Eigen::Index>(dimension_));
  const auto unk = table_.find("<unk>");
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    auto it = table_.find(tokens[t]);
    if (it == table_.end()) it = unk;
    if (it == table_.end()) fail(ErrorCode::EncoderUnavailable, "token table '" + name_ + "' has no entry for '" + tokens[t] + "'");
    x.row(static_cast<Eigen::Index>(t)) = it->second.transpose();
  }
  return x;
}

std::map<std::string, Vector> load_vector_table(const std::filesystem::path& path) {
  std::map<std::string, Vector> table;
  for_each_jsonl(path, [&](std::size_t line_no, const json& row) {
    try {
      const auto values = row.at("vector").get<std::vector<double>>();
      table[row.at("text").get<std::string>()] = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  return table;
}

namespace {

std::size_t parse_dimension(std::string_view spec, std::string_view digits) {
  std::size_t d = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || d == 0) {
    fail(ErrorCode::EncoderUnavailable, "bad dimension in '" + std::string(spec) + "'");
  }
  return d;
}

}  // namespace

std::shared_ptr<const EncoderProvider> make_provider(std::string_view spec) {
  if (spec == "hashed") return std::make_shared<HashedProvider>();
  if (spec.starts_with("hashed:")) return std::make_shared<HashedProvider>(parse_dimension(spec, spec.substr(7)));
  if (spec == "mean") return std::make_shared<TokenAveragingProvider>(std::make_shared<HashedProvider>());
  if (spec.starts_with("table:")) return std::make_shared<TableProvider>(TableProvider::load(std::string(spec.substr(6))));
  fail(ErrorCode::EncoderUnavailable, "unknown provider '" + std::string(spec) + "'");
}

std::shared_ptr<const TokenEncoder> make_token_encoder(std::string_view spec) {
  if (spec == "hashed") return std::make_shared<HashedTokenEncoder>();
  if (spec.starts_with("hashed:")) return std::make_shared<HashedTokenEncoder>(parse_dimension(spec, spec.substr(7)));
  if (spec.starts_with("table:")) return std::make_shared<TableTokenEncoder>(TableTokenEncoder::load(std::string(spec.substr(6))));
  fail(ErrorCode::EncoderUnavailable, "unknown token encoder '" + std::string(spec) + "'");
}

double cosine_similarity(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace kgc
