#include "qualbn/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "format.hpp"

namespace qualbn {

namespace {

constexpr const char* kUp = "\xE2\x86\x91";    // ↑
constexpr const char* kDown = "\xE2\x86\x93";  // ↓
constexpr const char* kFlat = "\xC2\xB7";      // ·

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string context_text(const std::vector<std::pair<std::string, std::string>>& context) {
  if (context.empty()) return "no other parents";
  std::string out;
  for (std::size_t k = 0; k < context.size(); ++k)
    out += (k ? ", " : "") + context[k].first + "=" + context[k].second;
  return out;
}

}  // namespace

std::string render_text(const CheckReport& report) {
  std::ostringstream out;
  out << "suite " << report.suite_name << " (sha256 " << report.suite_hash.substr(0, 12) << ")\n";
  out << "model " << report.model_name << " (sha256 " << report.model_hash.substr(0, 12) << ")\n\n";
  for (const auto& r : report.results) {
    out << pad(r.id, 5) << pad(upper(to_string(r.verdict)), 7) << r.statement << "\n";
    out << "     " << r.detail;
    for (const auto& v : r.values) out << "  " << v.name << "=" << format_fixed(v.value, 4);
    if (r.epsilon) out << "  eps=" << format_general(*r.epsilon, 3);
    out << "\n";
  }
  out << "\n"
      << report.results.size() << " assertions: " << report.count(Verdict::Pass) << " passed, "
      << report.count(Verdict::Fail) << " failed, " << report.count(Verdict::Error) << " errors\n";
  return out.str();
}

nlohmann::ordered_json to_json(const CheckReport& report) {
  nlohmann::ordered_json doc;
  doc["suite"] = report.suite_name;
  doc["model"] = report.model_name;
  doc["suite_sha256"] = report.suite_hash;
  doc["model_sha256"] = report.model_hash;
  doc["summary"] = {{"total", report.results.size()},
                    {"passed", report.count(Verdict::Pass)},
                    {"failed", report.count(Verdict::Fail)},
                    {"errors", report.count(Verdict::Error)}};
  auto& list = doc["assertions"] = nlohmann::ordered_json::array();
  for (const auto& r : report.results) {
    nlohmann::ordered_json a;
    a["id"] = r.id;
    a["kind"] = r.kind;
    a["statement"] = r.statement;
    a["line"] = r.line;
    a["verdict"] = to_string(r.verdict);
    a["detail"] = r.detail;
    auto& values = a["values"] = nlohmann::ordered_json::array();
    for (const auto& v : r.values) values.push_back({{"name", v.name}, {"value", v.value}});
    a["epsilon"] = r.epsilon ? nlohmann::ordered_json(*r.epsilon) : nlohmann::ordered_json(nullptr);
    if (r.sign) a["sign"] = *r.sign;
    list.push_back(std::move(a));
  }
  return doc;
}

std::string render_text(const ComparisonReport& report) {
  std::ostringstream out;
  out << render_text(report.check);
  out << "\nparameter divergence from the qualitative model (informational):\n";
  for (const auto& d : report.divergence) {
    std::string key = d.node + " | (";
    for (std::size_t k = 0; k < d.parent_states.size(); ++k) key += (k ? ", " : "") + d.parent_states[k];
    key += ")";
    out << "  " << pad(key, 44) << format_fixed(d.max_abs_difference, 4) << "\n";
  }
  return out.str();
}

nlohmann::ordered_json to_json(const ComparisonReport& report) {
  nlohmann::ordered_json doc;
  doc["check"] = to_json(report.check);
  doc["qualitative_sha256"] = report.qualitative_hash;
  auto& rows = doc["divergence"] = nlohmann::ordered_json::array();
  for (const auto& d : report.divergence)
    rows.push_back({{"node", d.node}, {"parent_states", d.parent_states}, {"max_abs_difference", d.max_abs_difference}});
  return doc;
}

std::string render_signs(const std::vector<ArcSignResult>& signs) {
  std::ostringstream out;
  for (const auto& s : signs) {
    out << pad(s.parent + " -> " + s.child, 36) << to_symbol(s.sign) << "\n";
    for (const auto& w : s.witnesses)
      out << "    " << to_symbol(w.local) << " when " << s.parent << " " << w.lower << " -> " << w.higher << " ("
          << context_text(w.context) << ")\n";
  }
  return out.str();
}

nlohmann::ordered_json to_json(const std::vector<ArcSignResult>& signs) {
  auto doc = nlohmann::ordered_json::array();
  for (const auto& s : signs) {
    nlohmann::ordered_json w = nlohmann::ordered_json::array();
    for (const auto& x : s.witnesses) {
      nlohmann::ordered_json context = nlohmann::ordered_json::object();
      for (const auto& [k, v] : x.context) context[k] = v;
      w.push_back({{"context", context}, {"lower", x.lower}, {"higher", x.higher}, {"sign", to_symbol(x.local)}});
    }
    doc.push_back({{"parent", s.parent}, {"child", s.child}, {"sign", to_symbol(s.sign)}, {"witnesses", w}});
  }
  return doc;
}

MarginalTable marginal_table(const Network& net, const Evidence& evidence) {
  return {evidence, all_marginals(net, evidence), all_marginals(net, {})};
}

std::string render_text(const Network& net, const MarginalTable& table, double epsilon,
                        std::optional<std::size_t> only) {
  std::ostringstream out;
  out << "evidence " << net.describe(table.evidence) << "\n";
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (only && *only != i) continue;
    const auto& node = net.node(i);
    out << node.id;
    if (table.evidence.contains(i)) out << " (observed)";
    out << "\n";
    for (std::size_t s = 0; s < node.states.size(); ++s) {
      const auto k = static_cast<Eigen::Index>(s);
      const double p = table.posterior[i].distribution[k];
      const double p0 = table.prior[i].distribution[k];
      const double delta = p - p0;
      const char* arrow = delta > epsilon ? kUp : delta < -epsilon ? kDown : kFlat;
      out << "  " << pad(node.states[s], 14) << format_fixed(p, 4) << "  " << arrow << " from " << format_fixed(p0, 4)
          << "  (" << format_signed_fixed(delta, 4) << ")\n";
    }
  }
  return out.str();
}

nlohmann::ordered_json to_json(const Network& net, const MarginalTable& table) {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json evidence = nlohmann::ordered_json::object();
  for (const auto& [i, s] : table.evidence) evidence[net.id(i)] = net.node(i).states[s];
  doc["evidence"] = evidence;
  auto& list = doc["marginals"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& node = net.node(i);
    std::vector<double> p, p0, delta;
    for (Eigen::Index k = 0; k < table.posterior[i].distribution.size(); ++k) {
      p.push_back(table.posterior[i].distribution[k]);
      p0.push_back(table.prior[i].distribution[k]);
      delta.push_back(p.back() - p0.back());
    }
    list.push_back({{"node", node.id},
                    {"display_name", node.display_name},
                    {"observed", table.evidence.contains(i)},
                    {"states", node.states},
                    {"probabilities", p},
                    {"prior", p0},
                    {"delta", delta}});
  }
  return doc;
}

}  // namespace qualbn
