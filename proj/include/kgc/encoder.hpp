#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace kgc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Text -> fixed-dimension vector. Implementations must be deterministic.
class EncoderProvider {
 public:
  virtual ~EncoderProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  /// Inputs longer than this many whitespace tokens are truncated by embed().
  virtual std::size_t max_tokens() const { return 128; }
  virtual Vector encode(std::string_view text) const = 0;
};

struct EmbedResult {
  std::vector<Vector> vectors;
  std::size_t truncated = 0;
};

/// One vector per text. Provider failures surface as EncoderUnavailable.
EmbedResult embed(const std::vector<std::string>& texts, const EncoderProvider& provider);

/// Feature-hashed bag of lowercase token n-grams (n = 1..max_ngram), signed
/// hashing, unit-normalized. With the default max_ngram = 1 the vector does
/// not depend on token order.
class HashedProvider : public EncoderProvider {
 public:
  explicit HashedProvider(std::size_t dimension = 768, std::size_t max_ngram = 1);
  std::string id() const override;
  std::size_t dimension() const override { return dimension_; }
  Vector encode(std::string_view text) const override;

 private:
  std::size_t dimension_;
  std::size_t max_ngram_;
};

/// Mean pooling: the average of base.encode(token) over whitespace tokens.
class TokenAveragingProvider : public EncoderProvider {
 public:
  explicit TokenAveragingProvider(std::shared_ptr<const EncoderProvider> base);
  std::string id() const override;
  std::size_t dimension() const override { return base_->dimension(); }
  Vector encode(std::string_view text) const override;

 private:
  std::shared_ptr<const EncoderProvider> base_;
};

/// Precomputed text -> vector table. Unknown texts are EncoderUnavailable.
class TableProvider : public EncoderProvider {
 public:
  TableProvider(std::string name, std::map<std::string, Vector> table);
  /// JSONL rows {"text": ..., "vector": [...]}.
  static TableProvider load(const std::filesystem::path& path);

  std::string id() const override { return "table:" + name_; }
  std::size_t dimension() const override { return dimension_; }
  std::size_t max_tokens() const override;
  Vector encode(std::string_view text) const override;
  bool contains(std::string_view text) const;

 private:
  std::string name_;
  std::map<std::string, Vector, std::less<>> table_;
  std::size_t dimension_ = 0;
};

/// Token sequence -> T x d feature matrix, the encoder side of the tagger.
class TokenEncoder {
 public:
  virtual ~TokenEncoder() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual Matrix encode(const std::vector<std::string>& tokens) const = 0;
};

/// Hashed indicator features of the token, its neighbours, a 3-char suffix,
/// its shape, and a constant bias feature.
class HashedTokenEncoder : public TokenEncoder {
 public:
  explicit HashedTokenEncoder(std::size_t dimension = 768);
  std::string id() const override;
  std::size_t dimension() const override { return dimension_; }
  Matrix encode(const std::vector<std::string>& tokens) const override;

 private:
  std::size_t dimension_;
};

/// Context-free lookup; unknown tokens use the "<unk>" row when present.
class TableTokenEncoder : public TokenEncoder {
 public:
  TableTokenEncoder(std::string name, std::map<std::string, Vector> table);
  static TableTokenEncoder load(const std::filesystem::path& path);
  std::string id() const override { return "table:" + name_; }
  std::size_t dimension() const override { return dimension_; }
  Matrix encode(const std::vector<std::string>& tokens) const override;

 private:
  std::string name_;
  std::map<std::string, Vector> table_;
  std::size_t dimension_ = 0;
};

/// "hashed", "hashed:<d>", "mean", "table:<path>".
std::shared_ptr<const EncoderProvider> make_provider(std::string_view spec);
/// "hashed", "hashed:<d>", "table:<path>".
std::shared_ptr<const TokenEncoder> make_token_encoder(std::string_view spec);

std::map<std::string, Vector> load_vector_table(const std::filesystem::path& path);

double cosine_similarity(const Vector& a, const Vector& b);

}  // namespace kgc
