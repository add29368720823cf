#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <map>
#include <sstream>

#include "format.hpp"
#include "qualbn/model_io.hpp"

namespace qualbn {

namespace {

namespace pt = boost::property_tree;

std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string word; in >> word;) out.push_back(word);
  return out;
}

std::string attr(const pt::ptree& node, const char* name) {
  return node.get<std::string>(std::string("<xmlattr>.") + name, "");
}

void collect_display_names(const pt::ptree& tree, std::map<std::string, std::string>& names) {
  for (const auto& [tag, child] : tree) {
    if (tag == "node") {
      auto id = attr(child, "id");
      if (auto name = child.get_optional<std::string>("name"); name && !id.empty()) names[id] = *name;
    } else if (tag == "submodel") {
      collect_display_names(child, names);
    }
  }
}

struct RawNode {
  std::string tag;
  NodeDef def;
  std::vector<std::string> values;  // probabilities or resulting states
};

}  // namespace

Network read_xdsl(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError({{e.line(), 0, "malformed XML: " + e.message()}});
  }

  auto smile = tree.get_child_optional("smile");
  if (!smile) throw ParseError({{0, 0, "missing <smile> root element"}});

  std::vector<Diagnostic> diagnostics;
  NetworkDef def;
  def.metadata.name = attr(*smile, "id").empty() ? std::string("untitled") : attr(*smile, "id");
  def.metadata.provenance = "imported from XDSL";

  std::map<std::string, std::string> display;
  if (auto genie = smile->get_child_optional("extensions.genie")) {
    if (auto name = attr(*genie, "name"); !name.empty()) def.metadata.name = name;
    if (auto comment = genie->get_optional<std::string>("comment")) def.metadata.description = *comment;
    collect_display_names(*genie, display);
  }

  std::vector<RawNode> raw;
  if (auto nodes = smile->get_child_optional("nodes")) {
    for (const auto& [tag, element] : *nodes) {
      if (tag == "<xmlcomment>" || tag == "<xmlattr>") continue;
      const auto id = attr(element, "id");
      if (tag != "cpt" && tag != "deterministic") {
        diagnostics.push_back({0, 0, "unsupported node type <" + tag + "> for node " + id});
        continue;
      }
      RawNode n;
      n.tag = tag;
      n.def.id = id;
      for (const auto& [child_tag, child] : element)
        if (child_tag == "state") n.def.states.push_back(attr(child, "id"));
      n.def.parents = split_ws(element.get<std::string>("parents", ""));
      n.values = split_ws(element.get<std::string>(tag == "cpt" ? "probabilities" : "resultingstates", ""));
      n.def.display_name = display.contains(id) ? display[id] : id;
      raw.push_back(std::move(n));
    }
  }

  std::map<std::string, std::size_t> states_of;
  for (const auto& n : raw) states_of.emplace(n.def.id, n.def.states.size());

  for (auto& n : raw) {
    std::size_t rows = 1;
    bool known = true;
    for (const auto& p : n.def.parents) {
      auto it = states_of.find(p);
      if (it == states_of.end()) {
        known = false;
        continue;
      }
      rows *= it->second;
    }
    const std::size_t states = n.def.states.size();
    if (!known) {
      // The dangling parent is reported by validation.
      n.def.local = ExplicitCpt{CptTable(0, static_cast<Eigen::Index>(states))};
    } else if (n.tag == "cpt") {
      if (n.values.size() != rows * states) {
        diagnostics.push_back({0, 0, "node " + n.def.id + ": probability vector has " + std::to_string(n.values.size()) +
                                         " values, expected " + std::to_string(rows * states)});
        continue;
      }
      CptTable table(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(states));
      for (std::size_t k = 0; k < n.values.size(); ++k) {
        auto v = parse_double(n.values[k]);
        if (!v) {
          diagnostics.push_back({0, 0, "node " + n.def.id + ": malformed probability '" + n.values[k] + "'"});
          break;
        }
        table(static_cast<Eigen::Index>(k / states), static_cast<Eigen::Index>(k % states)) = *v;
      }
      n.def.local = ExplicitCpt{std::move(table)};
    } else {
      if (n.values.size() != rows) {
        diagnostics.push_back({0, 0, "node " + n.def.id + ": " + std::to_string(n.values.size()) +
                                         " resulting states, expected " + std::to_string(rows)});
        continue;
      }
      Deterministic det;
      for (const auto& s : n.values) {
        auto it = std::find(n.def.states.begin(), n.def.states.end(), s);
        if (it == n.def.states.end()) {
          diagnostics.push_back({0, 0, "node " + n.def.id + ": unknown resulting state " + s});
          break;
        }
        det.outcome.push_back(static_cast<std::size_t>(it - n.def.states.begin()));
      }
      n.def.local = std::move(det);
    }
    def.nodes.push_back(std::move(n.def));
  }

  if (!diagnostics.empty()) throw ParseError(std::move(diagnostics));
  return Network::build(std::move(def));
}

}  // namespace qualbn
