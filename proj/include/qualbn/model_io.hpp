#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "qualbn/network.hpp"

namespace qualbn {

/// Parses the native text format. Syntax problems throw ParseError; a
/// well-formed file describing an invalid network throws ValidationError whose
/// violations carry source lines.
Network read_native(std::string_view text);

/// Unvalidated definition plus the line of every node declaration and table row,
/// for callers that want to run validate_network themselves.
struct NativeDocument {
  NetworkDef def;
  std::vector<std::size_t> node_lines;
  std::vector<std::vector<std::size_t>> row_lines;
};
NativeDocument parse_native(std::string_view text);

/// Canonical text: nodes in topological order, one table row per line.
std::string write_native(const Network& net);

/// Reads the XDSL subset written by GeNIe: <cpt> and <deterministic> nodes.
/// Probability vectors list child states fastest, then parents row-major with
/// the first-listed parent slowest.
Network read_xdsl(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

/// Dispatches on extension: ".xdsl" reads XDSL, anything else the native format.
Network load_network(const std::filesystem::path& path);

}  // namespace qualbn
