#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "qualbn/checker.hpp"
#include "qualbn/network.hpp"
#include "qualbn/qualspec.hpp"

namespace qualbn {

struct HttpResponse {
  int status = 200;
  nlohmann::ordered_json body;
};

/// Request handlers over one immutable model (and optional suite). Every
/// handler is a pure function of the snapshot and the request body, so one
/// Service can serve concurrent requests.
class Service {
 public:
  /// Binds the suite up front; throws BindError if it does not fit the model.
  Service(Network net, std::optional<AssertionSuite> suite, CheckOptions options = {});

  HttpResponse get_model() const;
  /// Body: {"evidence": {"Node": "state", ...}}; JSON booleans name the
  /// states "true"/"false".
  HttpResponse post_query(std::string_view body) const;
  /// Body (optional): {"scenarios": {"name": {"Node": "state"}}} replaces the
  /// evidence of existing scenarios for this request only.
  HttpResponse post_check(std::string_view body) const;
  HttpResponse get_signs() const;

  const Network& network() const noexcept { return net_; }

 private:
  Network net_;
  std::optional<BoundSuite> suite_;
  CheckOptions options_;
};

/// HTTP front end: /api/model, /api/query, /api/check, /api/signs, and static
/// files from `ui_dir` at "/".
class HttpServer {
 public:
  HttpServer(const Service& service, std::optional<std::filesystem::path> ui_dir = std::nullopt);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds a port (0 picks a free one) and returns it, or -1 on failure.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qualbn
