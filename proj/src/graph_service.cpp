#include "kgc/graph_service.hpp"

#include <charconv>
#include <thread>

#include <httplib.h>

#include "kgc/error.hpp"

namespace kgc {

namespace {

ApiResponse error_response(int status, ErrorCode code, const std::string& message) {
  return {status, {{"error", std::string(to_string(code))}, {"message", message}}};
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

const std::string* param(const std::multimap<std::string, std::string>& params, const std::string& name) {
  const auto it = params.find(name);
  return it == params.end() ? nullptr : &it->second;
}

}  // namespace

ApiResponse handle_api(const GraphStore& store, std::string_view path,
                       const std::multimap<std::string, std::string>& params, const ServiceOptions& options) {
  std::size_t limit = options.default_limit;
  if (const auto* l = param(params, "limit")) {
    const auto v = parse_u64(*l);
    if (!v) return error_response(400, ErrorCode::InvalidArgument, "limit must be a non-negative integer");
    limit = std::min<std::size_t>(*v, options.max_limit);
  }
  try {
    if (path == "/api/health") return {200, {{"status", "ok"}}};
    if (path == "/api/stats") return {200, stats_json(store.stats())};
    if (path == "/api/search") {
      const auto* q = param(params, "q");
      return {200, search_json(store, q ? *q : std::string(), limit)};
    }
    constexpr std::string_view prefix = "/api/nodes/";
    if (path.starts_with(prefix)) {
      std::string_view rest = path.substr(prefix.size());
      bool want_neighbors = false;
      if (const auto slash = rest.find('/'); slash != std::string_view::npos) {
        if (rest.substr(slash) != "/neighbors") return error_response(404, ErrorCode::NotFound, "no route " + std::string(path));
        want_neighbors = true;
        rest = rest.substr(0, slash);
      }
      const auto id = parse_u64(rest);
      if (!id) return error_response(400, ErrorCode::InvalidArgument, "node id must be an integer");
      if (!want_neighbors) return {200, details_json(store, store.node_details(*id))};
      std::optional<std::string> relation;
      if (const auto* r = param(params, "relation"); r && !r->empty()) relation = *r;
      return {200, neighbors_json(store, store.neighbors(*id, limit, relation))};
    }
    return error_response(404, ErrorCode::NotFound, "no route " + std::string(path));
  } catch (const Error& e) {
    const int status = e.code() == ErrorCode::NotFound ? 404 : 400;
    return error_response(status, e.code(), e.what());
  }
}

std::pair<std::string, int> parse_bind_address(std::string_view address) {
  std::string host = "127.0.0.1";
  std::string_view port_part = address;
  if (const auto colon = address.rfind(':'); colon != std::string_view::npos) {
    if (colon > 0) host = std::string(address.substr(0, colon));
    port_part = address.substr(colon + 1);
  }
  const auto port = parse_u64(port_part);
  if (!port || *port > 65535) fail(ErrorCode::InvalidArgument, "bad bind address '" + std::string(address) + "'");
  return {host, static_cast<int>(*port)};
}

struct GraphService::Impl {
  std::shared_ptr<const GraphStore> store;
  ServiceOptions options;
  httplib::Server server;
  std::thread thread;
  int port = -1;
};

GraphService::GraphService(std::shared_ptr<const GraphStore> store, ServiceOptions options)
    : impl_(std::make_unique<Impl>()) {
  if (!store) fail(ErrorCode::InvalidArgument, "service needs a store");
  impl_->store = std::move(store);
  impl_->options = std::move(options);
  auto& srv = impl_->server;
  // no SO_REUSEPORT: a second server on the same port must fail to bind
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  srv.set_default_headers({{"Access-Control-Allow-Origin", impl_->options.cors_origin},
                           {"Access-Control-Allow-Methods", "GET, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  srv.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  srv.Get(".*", [impl = impl_.get()](const httplib::Request& req, httplib::Response& res) {
    std::multimap<std::string, std::string> params(req.params.begin(), req.params.end());
    const ApiResponse r = handle_api(*impl->store, req.path, params, impl->options);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  });
}

GraphService::~GraphService() { stop(); }

int GraphService::bind(const std::string& host, int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->port < 0) fail(ErrorCode::BindError, "cannot bind " + host + ":" + std::to_string(port));
  return impl_->port;
}

void GraphService::run() {
  if (impl_->port < 0) fail(ErrorCode::BindError, "service is not bound");
  impl_->server.listen_after_bind();
}

void GraphService::start() {
  if (impl_->port < 0) fail(ErrorCode::BindError, "service is not bound");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void GraphService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int GraphService::port() const { return impl_->port; }

}  // namespace kgc
