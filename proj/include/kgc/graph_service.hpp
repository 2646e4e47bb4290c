#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "kgc/graph_store.hpp"

namespace kgc {

struct ServiceOptions {
  /// Value of Access-Control-Allow-Origin.
  std::string cors_origin = "*";
  std::size_t default_limit = 25;
  std::size_t max_limit = 1000;
};

struct ApiResponse {
  int status = 200;
  json body;
};

/// Routes one GET request against the read-only API:
///   /api/health, /api/stats, /api/search?q=&limit=,
///   /api/nodes/{id}, /api/nodes/{id}/neighbors?limit=&relation=
/// Errors come back as {"error": code, "message": text} with 400 or 404.
ApiResponse handle_api(const GraphStore& store, std::string_view path,
                       const std::multimap<std::string, std::string>& params, const ServiceOptions& options = {});

/// "host:port" or ":port" or "port".
std::pair<std::string, int> parse_bind_address(std::string_view address);

/// HTTP front end over an immutable store.
class GraphService {
 public:
  explicit GraphService(std::shared_ptr<const GraphStore> store, ServiceOptions options = {});
  ~GraphService();
  GraphService(const GraphService&) = delete;
  GraphService& operator=(const GraphService&) = delete;

  /// Port 0 picks a free port. Returns the bound port; throws BindError.
  int bind(const std::string& host, int port);
  /// Serves until stop(); requires bind().
  void run();
  /// run() on a background thread.
  void start();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace kgc
