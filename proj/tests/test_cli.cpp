#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qualbn/cli.hpp>
#include <qualbn/model_io.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

using namespace qualbn;

namespace {

const std::string kModels = QUALBN_MODELS_DIR;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "qualbn");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("qualbn_cli_" + name);
  std::ofstream(path) << content;
  return path;
}

struct EnvGuard {
  explicit EnvGuard(const char* value) { ::setenv(kEpsilonEnv, value, 1); }
  ~EnvGuard() { ::unsetenv(kEpsilonEnv); }
};

}  // namespace

TEST_CASE("check exits 0 on the bundled suite") {
  const auto r = run({"check", kModels + "/respiratory.bn", kModels + "/respiratory.suite"});
  CHECK(r.code == kExitPass);
  CHECK(r.out.find("25 assertions: 25 passed, 0 failed, 0 errors") != std::string::npos);
}

TEST_CASE("check exits 1 when an assertion fails") {
  const auto r = run({"check", kModels + "/respiratory.bn", kModels + "/respiratory_broken.suite"});
  CHECK(r.code == kExitFail);
  CHECK(r.out.find("FAIL") != std::string::npos);
}

TEST_CASE("check exits 2 on operational errors") {
  CHECK(run({"check", kModels + "/respiratory.bn", kModels + "/missing.suite"}).code == kExitError);
  CHECK(run({"check", kModels + "/missing.bn", kModels + "/respiratory.suite"}).code == kExitError);
  CHECK(run({}).code == kExitError);
  CHECK(run({"frobnicate"}).code == kExitError);

  const auto bad_suite = temp_file("bad.suite", "assert banana X\n");
  const auto r = run({"check", kModels + "/respiratory.bn", bad_suite.string()});
  CHECK(r.code == kExitError);
  CHECK(r.err.find("unknown assertion kind 'banana'") != std::string::npos);

  const auto unbound = temp_file("unbound.suite", "scenario s: Nobody=true\n");
  CHECK(run({"check", kModels + "/respiratory.bn", unbound.string()}).code == kExitError);
}

TEST_CASE("impossible evidence makes check exit 2") {
  const auto suite = temp_file("impossible.suite",
                               "scenario s: SaO2=very_low, Hypoxaemia=none\n"
                               "assert direction Death=true under s increases\n");
  const auto r = run({"check", kModels + "/respiratory.bn", suite.string()});
  CHECK(r.code == kExitError);
  CHECK(r.out.find("ERROR") != std::string::npos);
}

TEST_CASE("structured check output") {
  const auto r = run({"check", kModels + "/respiratory.bn", kModels + "/respiratory.suite", "--format", "structured"});
  REQUIRE(r.code == kExitPass);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["summary"]["total"] == 25);
  CHECK(doc["summary"]["passed"] == 25);
  CHECK(doc["assertions"][0]["id"] == "A1");
  CHECK(doc["model_sha256"].get<std::string>().size() == 64);
  CHECK(run({"check", kModels + "/respiratory.bn", kModels + "/respiratory.suite", "--format", "yaml"}).code ==
        kExitError);
}

TEST_CASE("repeated runs give identical reports") {
  const std::vector<std::string> args{"check", kModels + "/respiratory.bn", kModels + "/respiratory.suite", "--format",
                                      "structured"};
  CHECK(run(args).out == run(args).out);
}

TEST_CASE("epsilon precedence: flag over environment over suite") {
  const auto suite = temp_file("eps.suite",
                               "epsilon 0.001\n"
                               "scenario d: Death=false\n"
                               "assert direction VirusEntry=true under d unchanged\n");
  const std::vector<std::string> base{"check", kModels + "/respiratory.bn", suite.string()};
  // |delta| is about 0.00096.
  CHECK(run(base).code == kExitPass);
  {
    EnvGuard env("0.0005");
    CHECK(run(base).code == kExitFail);
    auto with_flag = base;
    with_flag.insert(with_flag.end(), {"--epsilon", "0.01"});
    CHECK(run(with_flag).code == kExitPass);
  }
  {
    EnvGuard env("0.7");
    CHECK(run(base).code == kExitError);
  }
  {
    EnvGuard env("abc");
    CHECK(run(base).code == kExitError);
  }
  auto bad_flag = base;
  bad_flag.insert(bad_flag.end(), {"--epsilon", "0"});
  CHECK(run(bad_flag).code == kExitError);
}

TEST_CASE("query prints posteriors with direction indicators") {
  const auto r = run({"query", kModels + "/respiratory.bn", "--evidence", "Death=true", "--target", "VirusEntry"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("evidence {Death=true}") != std::string::npos);
  CHECK(r.out.find("true          0.2208  \xE2\x86\x91 from 0.0100  (+0.2108)") != std::string::npos);
  CHECK(r.out.find("false         0.7792  \xE2\x86\x93 from 0.9900  (-0.2108)") != std::string::npos);
  CHECK(r.out.find("ImmuneResponse") == std::string::npos);

  const auto all = run({"query", kModels + "/respiratory.bn"});
  CHECK(all.code == 0);
  CHECK(all.out.find("Death") != std::string::npos);

  const auto s = run({"query", kModels + "/respiratory.bn", "--evidence", "Death=true", "--format", "structured"});
  const auto doc = nlohmann::json::parse(s.out);
  CHECK(doc["evidence"]["Death"] == "true");
  CHECK(doc["marginals"].size() == 6);

  CHECK(run({"query", kModels + "/respiratory.bn", "--evidence", "Nobody=true"}).code == kExitError);
  CHECK(run({"query", kModels + "/respiratory.bn", "--evidence", "Death=maybe"}).code == kExitError);
  CHECK(run({"query", kModels + "/respiratory.bn", "--evidence", "Death"}).code == kExitError);
  CHECK(run({"query", kModels + "/respiratory.bn", "--evidence", "SaO2=very_low,Hypoxaemia=none"}).code == kExitError);
}

TEST_CASE("signs lists every arc") {
  const auto r = run({"signs", kModels + "/respiratory.bn"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("VirusEntry -> ImmuneResponse") != std::string::npos);
  const auto doc = nlohmann::json::parse(run({"signs", kModels + "/respiratory.bn", "--format", "structured"}).out);
  CHECK(doc.size() == 7);
  for (const auto& s : doc) CHECK(s["sign"] == "+");
}

TEST_CASE("compare runs the suite on the quantitative model") {
  const auto r = run({"compare", kModels + "/respiratory.bn", kModels + "/respiratory.xdsl",
                      kModels + "/respiratory.suite", "--format", "structured"});
  CHECK(r.code == kExitPass);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["check"]["summary"]["passed"] == 25);
  for (const auto& row : doc["divergence"]) CHECK(row["max_abs_difference"] == 0.0);
}

TEST_CASE("export-prior writes a file with the caution block") {
  const auto path = std::filesystem::temp_directory_path() / "qualbn_cli_prior.txt";
  std::filesystem::remove(path);
  const auto r = run({"export-prior", kModels + "/respiratory.bn", "--ess", "5", "--out", path.string()});
  REQUIRE(r.code == 0);
  const auto text = read_text_file(path.string());
  CHECK(text.starts_with("# ---"));
  CHECK(text.find("CAUTION") != std::string::npos);
  CHECK(text.find("prior \"respiratory\" ess 5") != std::string::npos);
  CHECK(r.err.find("zero pseudo-count: SaO2=very_low given (none)") != std::string::npos);

  CHECK(run({"export-prior", kModels + "/respiratory.bn", "--ess", "0"}).code == kExitError);
  CHECK(run({"export-prior", kModels + "/respiratory.bn", "--ess", "-1"}).code == kExitError);
}

TEST_CASE("help exits 0") {
  const auto r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("check") != std::string::npos);
  CHECK(run({"check", "--help"}).code == 0);
}
