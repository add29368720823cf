#include "qualbn/server.hpp"

#include <httplib.h>

#include "qualbn/report.hpp"

namespace qualbn {

namespace {

HttpResponse error_response(int status, std::string code, std::string message, std::string entity = {}) {
  nlohmann::ordered_json err{{"code", std::move(code)}, {"message", std::move(message)}};
  if (!entity.empty()) err["entity"] = std::move(entity);
  return {status, {{"error", std::move(err)}}};
}

/// Parses a request body; an empty body is an empty object.
std::optional<nlohmann::json> parse_body(std::string_view body) {
  if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) return nlohmann::json::object();
  auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  return doc;
}

std::optional<std::string> state_name(const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  return std::nullopt;
}

/// Reads {"Node": "state"} into a Scenario, or returns the 400 response.
std::variant<Scenario, HttpResponse> read_evidence(const Network& net, const nlohmann::json& object) {
  Scenario scenario;
  if (!object.is_object()) return error_response(400, "bad_request", "evidence must be an object");
  for (const auto& [node, value] : object.items()) {
    auto state = state_name(value);
    if (!state) return error_response(400, "bad_request", "state of " + node + " must be a string", node);
    auto i = net.find(node);
    if (!i) return error_response(400, "unknown_node", "unknown node " + node, node);
    if (!net.find_state(*i, *state))
      return error_response(400, "unknown_state", "unknown state " + *state + " of node " + node, node + "=" + *state);
    scenario.evidence[node] = *state;
  }
  return scenario;
}

}  // namespace

Service::Service(Network net, std::optional<AssertionSuite> suite, CheckOptions options)
    : net_(std::move(net)), options_(std::move(options)) {
  if (suite) suite_ = bind_suite(*suite, net_);
}

HttpResponse Service::get_model() const {
  nlohmann::ordered_json doc;
  doc["name"] = net_.metadata().name;
  doc["description"] = net_.metadata().description;
  doc["provenance"] = net_.metadata().provenance;
  auto nodes = nlohmann::ordered_json::array();
  auto arcs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < net_.size(); ++i) {
    const auto& n = net_.node(i);
    nodes.push_back({{"id", n.id}, {"display_name", n.display_name}, {"states", n.states}, {"parents", n.parents}});
    for (const auto& p : n.parents) arcs.push_back({{"from", p}, {"to", n.id}});
  }
  auto assertions = nlohmann::ordered_json::array();
  if (suite_)
    for (std::size_t k = 0; k < suite_->suite.assertions.size(); ++k) {
      const auto& body = suite_->suite.assertions[k].body;
      assertions.push_back(
          {{"id", "A" + std::to_string(k + 1)}, {"kind", kind_name(body)}, {"statement", serialize_assertion(body)}});
    }
  doc["nodes"] = std::move(nodes);
  doc["arcs"] = std::move(arcs);
  doc["suite"] = suite_ ? nlohmann::ordered_json(suite_->suite.name) : nlohmann::ordered_json(nullptr);
  doc["assertions"] = std::move(assertions);
  return {200, std::move(doc)};
}

HttpResponse Service::post_query(std::string_view body) const {
  auto doc = parse_body(body);
  if (!doc) return error_response(400, "bad_request", "request body must be a JSON object");
  const auto evidence_doc = doc->contains("evidence") ? (*doc)["evidence"] : nlohmann::json::object();
  auto scenario = read_evidence(net_, evidence_doc);
  if (auto* err = std::get_if<HttpResponse>(&scenario)) return *err;
  try {
    const auto table = marginal_table(net_, net_.resolve(std::get<Scenario>(scenario)));
    return {200, to_json(net_, table)};
  } catch (const ImpossibleEvidence& e) {
    return error_response(422, "impossible_evidence", e.what());
  }
}

HttpResponse Service::post_check(std::string_view body) const {
  if (!suite_) return error_response(409, "no_suite", "no assertion suite loaded");
  auto doc = parse_body(body);
  if (!doc) return error_response(400, "bad_request", "request body must be a JSON object");

  if (!doc->contains("scenarios")) return {200, to_json(check(net_, *suite_, options_))};

  const auto& overrides = (*doc)["scenarios"];
  if (!overrides.is_object()) return error_response(400, "bad_request", "scenarios must be an object");
  AssertionSuite suite = suite_->suite;
  for (const auto& [name, evidence] : overrides.items()) {
    auto it = std::find_if(suite.scenarios.begin(), suite.scenarios.end(),
                           [&](const Scenario& s) { return s.name == name; });
    if (it == suite.scenarios.end()) return error_response(400, "unknown_scenario", "unknown scenario " + name, name);
    auto scenario = read_evidence(net_, evidence);
    if (auto* err = std::get_if<HttpResponse>(&scenario)) return *err;
    it->evidence = std::get<Scenario>(scenario).evidence;
  }
  return {200, to_json(check(net_, bind_suite(suite, net_), options_))};
}

HttpResponse Service::get_signs() const { return {200, {{"signs", to_json(derive_signs(net_))}}}; }

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(const Service& service, std::optional<std::filesystem::path> ui_dir)
    : impl_(std::make_unique<Impl>()) {
  auto& s = impl_->server;
  auto reply = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  s.Get("/api/model", [&service, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service.get_model());
  });
  s.Get("/api/signs", [&service, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service.get_signs());
  });
  s.Post("/api/query", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.post_query(req.body));
  });
  s.Post("/api/check", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.post_check(req.body));
  });
  if (ui_dir) {
    s.set_mount_point("/", ui_dir->string());
  } else {
    s.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("qualbn service: see /api/model, /api/query, /api/check, /api/signs\n", "text/plain");
    });
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace qualbn
