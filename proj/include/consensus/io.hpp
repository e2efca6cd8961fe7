#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "consensus/aggregate.hpp"
#include "consensus/model.hpp"

namespace consensus {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Round to 12 significant digits so serialized floats are stable.
inline double round12(double x) {
  if (!std::isfinite(x)) return x;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return std::strtod(buf, nullptr);
}

inline ordered_json json_number(double x) { return ordered_json(round12(x)); }

inline ordered_json value_to_json(const Value& v) {
  if (value_is_number(v)) return json_number(std::get<double>(v));
  return ordered_json(std::get<std::string>(v));
}

namespace detail {

inline std::pair<int, int> line_col_of_offset(const std::string& text, std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline int build_tree_node(AndXorTree& tree, const json& j, const std::string& path) {
  auto fail = [&](const std::string& msg) -> int {
    throw ParseError(msg, 0, 0, path.empty() ? "(root)" : path);
  };
  if (!j.is_object()) return fail("tree node must be a JSON object");
  if (!j.contains("node") || !j["node"].is_string())
    return fail("tree node needs a string \"node\" field");
  std::string kind = j["node"].get<std::string>();
  if (kind == "leaf") {
    if (!j.contains("key") || !j["key"].is_string()) return fail("leaf needs a string \"key\"");
    if (!j.contains("value")) return fail("leaf needs a \"value\"");
    const json& v = j["value"];
    Value value;
    if (v.is_number()) {
      value = v.get<double>();
    } else if (v.is_string()) {
      value = v.get<std::string>();
    } else {
      return fail("leaf \"value\" must be a number or a string");
    }
    return tree.add_leaf(j["key"].get<std::string>(), std::move(value));
  }
  if (kind == "and") {
    if (!j.contains("children") || !j["children"].is_array())
      return fail("and node needs a \"children\" array");
    std::vector<int> children;
    for (std::size_t i = 0; i < j["children"].size(); ++i)
      children.push_back(
          build_tree_node(tree, j["children"][i], path + "/children/" + std::to_string(i)));
    return tree.add_and(std::move(children));
  }
  if (kind == "or") {
    if (!j.contains("children") || !j["children"].is_array())
      return fail("or node needs a \"children\" array");
    std::vector<int> children;
    std::vector<double> probs;
    for (std::size_t i = 0; i < j["children"].size(); ++i) {
      const json& entry = j["children"][i];
      std::string epath = path + "/children/" + std::to_string(i);
      if (!entry.is_object() || !entry.contains("prob") || !entry.contains("child"))
        throw ParseError("or child needs \"prob\" and \"child\"", 0, 0, epath);
      if (!entry["prob"].is_number())
        throw ParseError("or child \"prob\" must be a number", 0, 0, epath);
      probs.push_back(entry["prob"].get<double>());
      children.push_back(build_tree_node(tree, entry["child"], epath + "/child"));
    }
    return tree.add_or(std::move(children), std::move(probs));
  }
  return fail("unknown node kind \"" + kind + "\" (expected and, or, leaf)");
}

}  // namespace detail

// Syntax-only parse; constraint checking is validate()'s job.
inline AndXorTree parse_tree_raw(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = detail::line_col_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(e.what(), line, col, "");
  }
  AndXorTree tree;
  tree.set_root(detail::build_tree_node(tree, doc, ""));
  return tree;
}

// Parse and enforce the tree constraints.
inline AndXorTree parse_tree(const std::string& text) {
  AndXorTree tree = parse_tree_raw(text);
  auto report = validate(tree);
  if (!report.ok()) {
    std::string msg = "tree violates constraints:";
    for (const auto& e : report.entries)
      msg += "\n  [" + e.kind + "] " + (e.path.empty() ? "(root)" : e.path) + ": " + e.message;
    throw DataError(msg);
  }
  return tree;
}

namespace detail {

inline ordered_json serialize_node(const AndXorTree& tree, int id) {
  const auto& n = tree.node(id);
  ordered_json j;
  switch (n.kind) {
    case AndXorTree::NodeKind::leaf: {
      const auto& alt = tree.alternative(n.alt);
      j["node"] = "leaf";
      j["key"] = alt.key;
      j["value"] = value_to_json(alt.value);
      break;
    }
    case AndXorTree::NodeKind::and_node: {
      j["node"] = "and";
      j["children"] = ordered_json::array();
      for (int c : n.children) j["children"].push_back(serialize_node(tree, c));
      break;
    }
    case AndXorTree::NodeKind::or_node: {
      j["node"] = "or";
      j["children"] = ordered_json::array();
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        ordered_json entry;
        entry["prob"] = json_number(n.probs[i]);
        entry["child"] = serialize_node(tree, n.children[i]);
        j["children"].push_back(std::move(entry));
      }
      break;
    }
  }
  return j;
}

}  // namespace detail

inline ordered_json serialize_tree(const AndXorTree& tree) {
  if (tree.empty()) throw DataError("cannot serialize an empty tree");
  return detail::serialize_node(tree, tree.root());
}

// ---------------------------------------------------------------------------
// CSV ingestion. Plain comma-separated fields, no quoting; surrounding
// whitespace is trimmed.

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

inline bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

inline std::vector<std::pair<int, std::string>> csv_lines(const std::string& text) {
  std::vector<std::pair<int, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    out.emplace_back(no, line);
  }
  return out;
}

}  // namespace detail

// Header `key,value,prob`; one alternative per row. Values that parse as a
// finite number become scores, anything else a label.
inline AndXorTree parse_bid_csv(const std::string& text) {
  auto lines = detail::csv_lines(text);
  if (lines.empty()) throw ParseError("empty BID file (missing key,value,prob header)", 1, 1, "");
  auto header = detail::split_csv_line(lines[0].second);
  if (header.size() != 3 || detail::trim(header[0]) != "key" ||
      detail::trim(header[1]) != "value" || detail::trim(header[2]) != "prob")
    throw ParseError("BID header must be key,value,prob", lines[0].first, 1, "");
  std::vector<BidRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto fields = detail::split_csv_line(lines[i].second);
    if (fields.size() != 3)
      throw ParseError("expected 3 fields, found " + std::to_string(fields.size()),
                       lines[i].first, 1, "");
    BidRow r;
    r.key = fields[0];
    if (r.key.empty()) throw ParseError("empty key", lines[i].first, 1, "");
    double num;
    if (detail::parse_number(fields[1], num))
      r.value = num;
    else
      r.value = fields[1];
    if (!detail::parse_number(fields[2], r.prob) || r.prob < 0.0 || r.prob > 1.0 + kProbEps)
      throw ParseError("prob field '" + fields[2] + "' is not a probability in [0, 1]",
                       lines[i].first, 1, "");
    rows.push_back(std::move(r));
  }
  return from_bid(rows);
}

// Header of group names; one row of membership probabilities per tuple.
inline GroupMatrix parse_group_csv(const std::string& text) {
  auto lines = detail::csv_lines(text);
  if (lines.empty()) throw ParseError("empty group matrix (missing header)", 1, 1, "");
  GroupMatrix m;
  m.groups = detail::split_csv_line(lines[0].second);
  for (const auto& g : m.groups)
    if (g.empty()) throw ParseError("empty group name in header", lines[0].first, 1, "");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto fields = detail::split_csv_line(lines[i].second);
    if (fields.size() != m.groups.size())
      throw ParseError("expected " + std::to_string(m.groups.size()) + " fields, found " +
                       std::to_string(fields.size()), lines[i].first, 1, "");
    std::vector<double> row;
    for (const auto& f : fields) {
      double x;
      if (!detail::parse_number(f, x))
        throw ParseError("field '" + f + "' is not a number", lines[i].first, 1, "");
      row.push_back(x);
    }
    m.p.push_back(std::move(row));
  }
  validate_group_matrix(m);
  return m;
}

// A document starting with '{' is a tree; otherwise CSV (BID when the header
// is key,value,prob, else a group matrix).
enum class DatasetFormat { tree_json, bid_csv, group_csv };

inline DatasetFormat sniff_format(const std::string& text) {
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '{') return DatasetFormat::tree_json;
    break;
  }
  auto lines = detail::csv_lines(text);
  if (!lines.empty()) {
    auto header = detail::split_csv_line(lines[0].second);
    if (header.size() == 3 && header[0] == "key" && header[1] == "value" && header[2] == "prob")
      return DatasetFormat::bid_csv;
  }
  return DatasetFormat::group_csv;
}

inline const char* format_name(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::tree_json:
      return "tree-json";
    case DatasetFormat::bid_csv:
      return "bid-csv";
    case DatasetFormat::group_csv:
      return "group-csv";
  }
  return "?";
}

// A parsed input file with its provenance. Tree-shaped formats fill `tree`
// (unvalidated for tree_json so `validate` can report violations); group
// matrices fill `groups`.
struct Dataset {
  std::string path;
  DatasetFormat format = DatasetFormat::tree_json;
  std::uint64_t checksum = 0;  // FNV-1a of the raw bytes
  std::optional<AndXorTree> tree;
  std::optional<GroupMatrix> groups;
};

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline Dataset parse_dataset(const std::string& text, std::string path = "") {
  Dataset d;
  d.path = std::move(path);
  d.format = sniff_format(text);
  d.checksum = fnv1a(text);
  switch (d.format) {
    case DatasetFormat::tree_json:
      d.tree = parse_tree_raw(text);
      break;
    case DatasetFormat::bid_csv:
      d.tree = parse_bid_csv(text);
      break;
    case DatasetFormat::group_csv:
      d.groups = parse_group_csv(text);
      break;
  }
  return d;
}

}  // namespace consensus
