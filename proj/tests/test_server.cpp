#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qualbn/cli.hpp>
#include <qualbn/model_io.hpp>
#include <qualbn/server.hpp>

// After Eigen: resolv.h defines _res.
#include <httplib.h>

#include <sstream>
#include <thread>

using namespace qualbn;

namespace {

const Service& service() {
  static const Service s(load_network(QUALBN_MODELS_DIR "/respiratory.bn"),
                         parse_suite(read_text_file(QUALBN_MODELS_DIR "/respiratory.suite")));
  return s;
}

std::string error_code(const HttpResponse& r) { return r.body["error"]["code"].get<std::string>(); }

}  // namespace

TEST_CASE("model endpoint describes nodes, arcs and assertions") {
  const auto r = service().get_model();
  REQUIRE(r.status == 200);
  CHECK(r.body["name"] == "respiratory");
  CHECK(r.body["nodes"].size() == 6);
  CHECK(r.body["arcs"].size() == 7);
  CHECK(r.body["suite"] == "respiratory_behaviour");
  CHECK(r.body["assertions"].size() == 25);
  CHECK(r.body["assertions"][0]["id"] == "A1");
  CHECK(r.body["nodes"][0]["id"] == "VirusEntry");
}

TEST_CASE("query endpoint") {
  const auto r = service().post_query(R"({"evidence": {"Death": true}})");
  REQUIRE(r.status == 200);
  const auto& m = r.body["marginals"];
  bool found = false;
  for (const auto& node : m)
    if (node["node"] == "VirusEntry") {
      found = true;
      CHECK(node["probabilities"][1].get<double>() == doctest::Approx(0.2207752815984013).epsilon(1e-12));
      CHECK(node["delta"][1].get<double>() > 0);
      CHECK_FALSE(node["observed"].get<bool>());
    }
  CHECK(found);

  CHECK(service().post_query("").status == 200);
  CHECK(service().post_query("{}").body["marginals"].size() == 6);
}

TEST_CASE("query endpoint errors") {
  auto r = service().post_query(R"({"evidence": {"Nobody": "true"}})");
  CHECK(r.status == 400);
  CHECK(error_code(r) == "unknown_node");
  CHECK(r.body["error"]["entity"] == "Nobody");

  r = service().post_query(R"({"evidence": {"Death": "maybe"}})");
  CHECK(r.status == 400);
  CHECK(error_code(r) == "unknown_state");

  r = service().post_query("not json");
  CHECK(r.status == 400);
  CHECK(error_code(r) == "bad_request");
  CHECK(service().post_query("[1, 2]").status == 400);
  CHECK(error_code(service().post_query(R"({"evidence": {"Death": 3}})")) == "bad_request");
  CHECK(error_code(service().post_query(R"({"evidence": []})")) == "bad_request");

  r = service().post_query(R"({"evidence": {"SaO2": "very_low", "Hypoxaemia": "none"}})");
  CHECK(r.status == 422);
  CHECK(error_code(r) == "impossible_evidence");
}

TEST_CASE("query endpoint agrees with the command line") {
  std::ostringstream out, err;
  REQUIRE(run_cli({"qualbn", "query", QUALBN_MODELS_DIR "/respiratory.bn", "--evidence", "Death=true,SaO2=low",
                   "--format", "structured"},
                  out, err) == 0);
  const auto cli = nlohmann::ordered_json::parse(out.str());
  const auto api = service().post_query(R"({"evidence": {"Death": "true", "SaO2": "low"}})");
  CHECK(api.body == cli);
}

TEST_CASE("check endpoint") {
  auto r = service().post_check("");
  REQUIRE(r.status == 200);
  CHECK(r.body["summary"]["passed"] == 25);

  // Swapping the death scenario for no evidence makes its direction assertion fail.
  r = service().post_check(R"({"scenarios": {"death": {}}})");
  REQUIRE(r.status == 200);
  CHECK(r.body["summary"]["failed"].get<int>() > 0);
  CHECK(r.body["assertions"][0]["verdict"] == "fail");
  CHECK(service().post_check("").body["summary"]["passed"] == 25);

  r = service().post_check(R"({"scenarios": {"elsewhere": {}}})");
  CHECK(r.status == 400);
  CHECK(error_code(r) == "unknown_scenario");
  CHECK(error_code(service().post_check(R"({"scenarios": {"death": {"Death": "maybe"}}})")) == "unknown_state");
  CHECK(error_code(service().post_check(R"({"scenarios": 4})")) == "bad_request");

  const Service bare(load_network(QUALBN_MODELS_DIR "/respiratory.bn"), std::nullopt);
  r = bare.post_check("");
  CHECK(r.status == 409);
  CHECK(error_code(r) == "no_suite");
  CHECK(bare.get_model().body["suite"].is_null());
}

TEST_CASE("signs endpoint") {
  const auto r = service().get_signs();
  REQUIRE(r.status == 200);
  CHECK(r.body["signs"].size() == 7);
  for (const auto& s : r.body["signs"]) CHECK(s["sign"] == "+");
}

TEST_CASE("handlers are safe to call concurrently") {
  const auto expected = service().post_query(R"({"evidence": {"Death": "true"}})").body;
  std::vector<std::thread> threads;
  std::vector<int> same(8, 0);
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      for (int k = 0; k < 20; ++k) same[t] += service().post_query(R"({"evidence": {"Death": "true"}})").body == expected;
    });
  for (auto& th : threads) th.join();
  for (int s : same) CHECK(s == 20);
}

TEST_CASE("HTTP round trip on a free port") {
  HttpServer server(service());
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread loop([&] { server.listen(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto model = client.Get("/api/model");
  REQUIRE(model);
  CHECK(model->status == 200);
  CHECK(nlohmann::json::parse(model->body)["name"] == "respiratory");

  auto query = client.Post("/api/query", R"({"evidence": {"Death": "true"}})", "application/json");
  REQUIRE(query);
  CHECK(query->status == 200);
  CHECK(nlohmann::json::parse(query->body)["evidence"]["Death"] == "true");

  auto bad = client.Post("/api/query", R"({"evidence": {"Nobody": "x"}})", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);

  auto check = client.Post("/api/check", "", "application/json");
  REQUIRE(check);
  CHECK(nlohmann::json::parse(check->body)["summary"]["passed"] == 25);

  auto signs = client.Get("/api/signs");
  REQUIRE(signs);
  CHECK(signs->status == 200);

  auto root = client.Get("/");
  REQUIRE(root);
  CHECK(root->status == 200);

  server.stop();
  loop.join();
}
