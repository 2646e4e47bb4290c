#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "kgc/error.hpp"
#include "kgc/relation.hpp"

namespace kgc {

namespace {

struct Ordered {
  TokenSpan first;
  TokenSpan second;
};

Ordered order_spans(const RcInstance& r) {
  if (r.tail.begin < r.head.begin) return {r.tail, r.head};
  return {r.head, r.tail};
}

}  // namespace

std::string between_text(const RcInstance& r) {
  const auto [first, second] = order_spans(r);
  std::vector<std::string> words;
  for (std::size_t i = first.end; i < second.begin && i < r.tokens.size(); ++i) words.push_back(r.tokens[i]);
  return join(words, " ");
}

ContextScorer::ContextScorer(std::shared_ptr<const EncoderProvider> provider, std::size_t window)
    : provider_(std::move(provider)), window_(window) {
  if (!provider_) fail(ErrorCode::EncoderUnavailable, "context scorer needs an encoder provider");
}

std::string ContextScorer::id() const { return "context:" + provider_->id() + ":w" + std::to_string(window_); }

std::string ContextScorer::features(const RcInstance& r) const {
  const auto [first, second] = order_spans(r);
  const std::size_t n = r.tokens.size();
  std::vector<std::string> feats;
  const std::size_t left = first.begin > window_ ? first.begin - window_ : 0;
  for (std::size_t i = left; i < first.begin && i < n; ++i) feats.push_back("l:" + r.tokens[i]);
  std::size_t between = 0;
  for (std::size_t i = first.end; i < second.begin && i < n; ++i, ++between) feats.push_back("b:" + r.tokens[i]);
  if (between == 0) feats.push_back("b:_adjacent_");
  for (std::size_t i = second.end; i < std::min(n, second.end + window_); ++i) feats.push_back("r:" + r.tokens[i]);
  return join(feats, " ");
}

double ContextScorer::score(const RcInstance& query, const RcInstance& support) const {
  const auto result = embed({features(query), features(support)}, *provider_);
  return cosine_similarity(result.vectors[0], result.vectors[1]);
}

TableScorer::TableScorer(std::string name, std::map<std::string, std::string> phrase_to_relation)
    : name_(std::move(name)) {
  for (auto& [phrase, rel] : phrase_to_relation) table_[to_lower_ascii(trim(phrase))] = rel;
}

TableScorer TableScorer::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::ParseError, path.string() + ": expected an object of phrase -> relation");
  std::map<std::string, std::string> table;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_string()) fail(ErrorCode::ParseError, path.string() + ": relation for '" + it.key() + "' is not a string");
    table[it.key()] = it.value().get<std::string>();
  }
  return TableScorer(path.filename().string(), std::move(table));
}

std::string TableScorer::lookup(const RcInstance& r) const {
  const auto it = table_.find(to_lower_ascii(between_text(r)));
  return it == table_.end() ? std::string() : it->second;
}

double TableScorer::score(const RcInstance& query, const RcInstance& support) const {
  const std::string a = lookup(query);
  return !a.empty() && a == lookup(support) ? 1.0 : 0.0;
}

ExternalScorer::ExternalScorer(std::string command) : command_(std::move(command)) {}

ExternalScorer::~ExternalScorer() { stop(); }

void ExternalScorer::start() const {
  int fds[2];
  if (socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) fail(ErrorCode::IoError, std::string("socketpair: ") + std::strerror(errno));
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    fail(ErrorCode::IoError, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    close(fds[0]);
    dup2(fds[1], STDIN_FILENO);
    dup2(fds[1], STDOUT_FILENO);
    close(fds[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(fds[1]);
  fd_ = fds[0];
  pid_ = pid;
  buffer_.clear();
}

void ExternalScorer::stop() const {
  if (fd_ >= 0) {
    close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

double ExternalScorer::score(const RcInstance& query, const RcInstance& support) const {
  std::lock_guard lock(mutex_);
  if (fd_ < 0) start();
  const std::string request = json{{"query", to_json(query)}, {"support", to_json(support)}}.dump() + "\n";
  std::size_t sent = 0;
  while (sent < request.size()) {
    const ssize_t n = send(fd_, request.data() + sent, request.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      stop();
      fail(ErrorCode::IoError, "external scorer '" + command_ + "' closed its input");
    }
    sent += static_cast<std::size_t>(n);
  }
  std::size_t nl;
  while ((nl = buffer_.find('\n')) == std::string::npos) {
    char chunk[4096];
    const ssize_t n = read(fd_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      stop();
      fail(ErrorCode::IoError, "external scorer '" + command_ + "' exited without a response");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
  const std::string line = buffer_.substr(0, nl);
  buffer_.erase(0, nl + 1);
  try {
    const json j = json::parse(line);
    const json& v = j.is_object() ? j.at("score") : j;
    if (!v.is_number()) fail(ErrorCode::ParseError, "external scorer response is not a number: " + line);
    return v.get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, "bad external scorer response '" + line + "': " + e.what());
  }
}

std::shared_ptr<const PairScorer> make_scorer(std::string_view spec, std::shared_ptr<const EncoderProvider> provider) {
  if (spec == "default") return std::make_shared<ContextScorer>(provider ? provider : make_provider("hashed"));
  if (spec.starts_with("table:")) return std::make_shared<TableScorer>(TableScorer::load(std::string(spec.substr(6))));
  if (spec.starts_with("external:")) {
    if (spec.size() == 9) fail(ErrorCode::InvalidArgument, "external scorer needs a command");
    return std::make_shared<ExternalScorer>(std::string(spec.substr(9)));
  }
  fail(ErrorCode::InvalidArgument, "unknown scorer '" + std::string(spec) + "'");
}

}  // namespace kgc
