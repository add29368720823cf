#include "qualbn/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <ostream>

#include "format.hpp"
#include "qualbn/checker.hpp"
#include "qualbn/model_io.hpp"
#include "qualbn/report.hpp"
#include "qualbn/server.hpp"

namespace qualbn {

namespace {

struct UsageError : Error {
  using Error::Error;
};

double checked_epsilon(double e, const std::string& source) {
  if (!(e > 0.0 && e < 0.5)) throw UsageError(source + " must lie in (0, 0.5)");
  return e;
}

/// --epsilon beats the environment, which beats the suite's own default.
std::optional<double> default_epsilon(const std::optional<double>& flag) {
  if (flag) return checked_epsilon(*flag, "--epsilon");
  if (const char* env = std::getenv(kEpsilonEnv); env && *env) {
    auto v = parse_double(env);
    if (!v) throw UsageError(std::string(kEpsilonEnv) + " is not a number");
    return checked_epsilon(*v, kEpsilonEnv);
  }
  return std::nullopt;
}

AssertionSuite load_suite(const std::string& path) { return parse_suite(read_text_file(path)); }

Scenario parse_evidence_flag(const std::vector<std::string>& items) {
  Scenario s{"cli", {}};
  for (const auto& item : items) {
    std::size_t start = 0;
    while (start <= item.size()) {
      auto end = item.find(',', start);
      if (end == std::string::npos) end = item.size();
      auto pair = item.substr(start, end - start);
      while (!pair.empty() && pair.front() == ' ') pair.erase(0, 1);
      while (!pair.empty() && pair.back() == ' ') pair.pop_back();
      if (!pair.empty()) {
        auto eq = pair.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == pair.size())
          throw UsageError("evidence must be Node=state, got '" + pair + "'");
        s.evidence[pair.substr(0, eq)] = pair.substr(eq + 1);
      }
      start = end + 1;
    }
  }
  return s;
}

int verdict_exit(const CheckReport& report) {
  if (report.count(Verdict::Error) > 0) return kExitError;
  return report.all_passed() ? kExitPass : kExitFail;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Qualitative parameterisation toolkit for discrete Bayesian networks", "qualbn"};
  app.require_subcommand(1);

  std::string model_path, suite_path, quant_path, format = "text", out_path, ui_dir, target;
  std::optional<double> epsilon;
  std::vector<std::string> evidence;
  double ess = kDefaultEss;
  int port = 8080;
  std::string host = "127.0.0.1";

  auto* check_cmd = app.add_subcommand("check", "Check a model against a qualitative suite");
  check_cmd->add_option("model", model_path, "Model file (.bn or .xdsl)")->required();
  check_cmd->add_option("suite", suite_path, "Assertion suite")->required();
  check_cmd->add_option("--epsilon", epsilon, "Default epsilon");
  check_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "structured"}));

  auto* query_cmd = app.add_subcommand("query", "Posterior marginals under evidence");
  query_cmd->add_option("model", model_path, "Model file")->required();
  query_cmd->add_option("--evidence", evidence, "Node=state[,Node=state...]");
  query_cmd->add_option("--target", target, "Only show this node");
  query_cmd->add_option("--epsilon", epsilon, "Threshold for direction arrows");
  query_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "structured"}));

  auto* signs_cmd = app.add_subcommand("signs", "Derived qualitative sign of every arc");
  signs_cmd->add_option("model", model_path, "Model file")->required();
  signs_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "structured"}));

  auto* compare_cmd = app.add_subcommand("compare", "Check a quantitative model against the qualitative suite");
  compare_cmd->add_option("qualitative", model_path, "Qualitative model")->required();
  compare_cmd->add_option("quantitative", quant_path, "Quantitative model")->required();
  compare_cmd->add_option("suite", suite_path, "Assertion suite")->required();
  compare_cmd->add_option("--epsilon", epsilon, "Default epsilon");
  compare_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "structured"}));

  auto* export_cmd = app.add_subcommand("export-prior", "Dirichlet pseudo-counts seeded from the model");
  export_cmd->add_option("model", model_path, "Model file")->required();
  export_cmd->add_option("--ess", ess, "Equivalent sample size");
  export_cmd->add_option("--out", out_path, "Output file (default stdout)");

  auto* serve_cmd = app.add_subcommand("serve", "HTTP service for the scenario explorer");
  serve_cmd->add_option("model", model_path, "Model file")->required();
  serve_cmd->add_option("--suite", suite_path, "Assertion suite");
  serve_cmd->add_option("--port", port, "Port (0 picks a free one)");
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--ui-dir", ui_dir, "Static UI assets served at /");
  serve_cmd->add_option("--epsilon", epsilon, "Default epsilon");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitError;
  }

  const bool structured = format == "structured";
  try {
    if (*check_cmd) {
      const auto net = load_network(model_path);
      const auto bound = bind_suite(load_suite(suite_path), net);
      CheckOptions options;
      options.default_epsilon = default_epsilon(epsilon);
      const auto report = check(net, bound, options);
      out << (structured ? to_json(report).dump(2) + "\n" : render_text(report));
      return verdict_exit(report);
    }
    if (*query_cmd) {
      const auto net = load_network(model_path);
      const auto ev = net.resolve(parse_evidence_flag(evidence));
      std::optional<std::size_t> only;
      if (!target.empty()) only = net.index_of(target);
      const auto table = marginal_table(net, ev);
      if (structured) {
        auto doc = to_json(net, table);
        if (only) {
          nlohmann::ordered_json one = nlohmann::ordered_json::array();
          one.push_back(doc["marginals"][*only]);
          doc["marginals"] = one;
        }
        out << doc.dump(2) << "\n";
      } else {
        out << render_text(net, table, default_epsilon(epsilon).value_or(kDefaultEpsilon), only);
      }
      return kExitPass;
    }
    if (*signs_cmd) {
      const auto net = load_network(model_path);
      const auto signs = derive_signs(net);
      out << (structured ? to_json(signs).dump(2) + "\n" : render_signs(signs));
      return kExitPass;
    }
    if (*compare_cmd) {
      const auto qual = load_network(model_path);
      const auto quant = load_network(quant_path);
      CheckOptions options;
      options.default_epsilon = default_epsilon(epsilon);
      const auto report = compare(qual, quant, load_suite(suite_path), options);
      out << (structured ? to_json(report).dump(2) + "\n" : render_text(report));
      return verdict_exit(report.check);
    }
    if (*export_cmd) {
      const auto net = load_network(model_path);
      const auto prior = export_prior(net, ess);
      const auto text = write_prior(prior);
      for (const auto& w : prior.warnings) err << "warning: " << w << "\n";
      if (out_path.empty()) {
        out << text;
      } else {
        std::ofstream file(out_path, std::ios::binary);
        if (!file) throw Error("cannot write " + out_path);
        file << text;
        out << "wrote " << out_path << " (" << prior.nodes.size() << " nodes, ess " << format_shortest(prior.ess)
            << ")\n";
      }
      return kExitPass;
    }
    if (*serve_cmd) {
      const auto net = load_network(model_path);
      std::optional<AssertionSuite> suite;
      if (!suite_path.empty()) suite = load_suite(suite_path);
      CheckOptions options;
      options.default_epsilon = default_epsilon(epsilon);
      std::optional<std::filesystem::path> ui;
      if (!ui_dir.empty()) {
        if (!std::filesystem::is_directory(ui_dir)) throw UsageError("--ui-dir " + ui_dir + " is not a directory");
        ui = ui_dir;
      }
      const Service service(net, std::move(suite), options);
      HttpServer server(service, ui);
      const int bound = server.bind(host, port);
      if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
      out << "serving " << net.metadata().name << " on http://" << host << ":" << bound << std::endl;
      return server.listen() ? kExitPass : kExitError;
    }
  } catch (const DiagnosticError& e) {
    err << "error:\n" << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  err << app.help();
  return kExitError;
}

}  // namespace qualbn
