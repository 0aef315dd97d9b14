// Copyright 2026 The symtree Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Recursive-descent checker for the DOT language (graph, statements,
// attribute lists, anonymous and named subgraphs, edge chains). Ports and
// HTML strings are not accepted.

#include <cctype>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace symtree::testing {

struct DotSummary {
  bool ok = false;
  std::string error;
  bool directed = false;
  std::set<std::string> nodes;  // every node id mentioned
  std::set<std::string> declared;  // ids with their own node statement
  std::size_t edges = 0;
  std::vector<std::pair<std::string, std::string>> node_attrs;  // (id, raw attr list)
};

class DotChecker {
 public:
  explicit DotChecker(std::string_view text) : s_(text) {}

  DotSummary run() {
    try {
      graph();
      skip();
      if (pos_ != s_.size()) fail("trailing input");
      out_.ok = true;
    } catch (const std::string& e) {
      out_.ok = false;
      out_.error = e + " at offset " + std::to_string(pos_);
    }
    return out_;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) { throw msg; }

  void skip() {
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (s_.substr(pos_, 2) == "//") {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (s_.substr(pos_, 2) == "/*") {
        const auto end = s_.find("*/", pos_ + 2);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 2;
      } else {
        break;
      }
    }
  }

  bool peek(std::string_view tok) {
    skip();
    return s_.substr(pos_, tok.size()) == tok;
  }

  void expect(std::string_view tok) {
    if (!peek(tok)) fail("expected '" + std::string(tok) + "'");
    pos_ += tok.size();
  }

  bool keyword(std::string_view kw) {
    skip();
    if (s_.size() - pos_ < kw.size()) return false;
    for (std::size_t i = 0; i < kw.size(); ++i)
      if (std::tolower(static_cast<unsigned char>(s_[pos_ + i])) != kw[i]) return false;
    const std::size_t after = pos_ + kw.size();
    if (after < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[after])) || s_[after] == '_')) return false;
    pos_ = after;
    return true;
  }

  bool at_id() {
    skip();
    if (pos_ >= s_.size()) return false;
    const char c = s_[pos_];
    return c == '"' || c == '_' || c == '-' || c == '.' || std::isalnum(static_cast<unsigned char>(c));
  }

  std::string id() {
    skip();
    if (pos_ >= s_.size()) fail("expected identifier");
    const char c = s_[pos_];
    std::string out;
    if (c == '"') {
      ++pos_;
      while (true) {
        if (pos_ >= s_.size()) fail("unterminated string");
        const char d = s_[pos_++];
        if (d == '"') break;
        if (d == '\\') {
          if (pos_ >= s_.size()) fail("dangling escape");
          out.push_back(d);
          out.push_back(s_[pos_++]);
          continue;
        }
        out.push_back(d);
      }
      return out;
    }
    if (c == '-' || c == '.' || std::isdigit(static_cast<unsigned char>(c))) {
      if (c == '-') out.push_back(s_[pos_++]);
      bool dot = false, digit = false;
      while (pos_ < s_.size()) {
        const char d = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(d))) digit = true;
        else if (d == '.' && !dot) dot = true;
        else break;
        out.push_back(d);
        ++pos_;
      }
      if (!digit) fail("malformed numeral");
      return out;
    }
    if (c == '_' || std::isalpha(static_cast<unsigned char>(c))) {
      while (pos_ < s_.size() && (s_[pos_] == '_' || std::isalnum(static_cast<unsigned char>(s_[pos_]))))
        out.push_back(s_[pos_++]);
      return out;
    }
    fail("expected identifier");
  }

  void graph() {
    keyword("strict");
    if (keyword("digraph")) out_.directed = true;
    else if (!keyword("graph")) fail("expected 'graph' or 'digraph'");
    if (!peek("{")) id();
    expect("{");
    stmt_list();
    expect("}");
  }

  void stmt_list() {
    while (!peek("}")) {
      if (pos_ >= s_.size()) fail("unexpected end of input");
      stmt();
      if (peek(";")) expect(";");
    }
  }

  std::string attr_list() {
    std::string raw;
    while (peek("[")) {
      expect("[");
      while (!peek("]")) {
        const std::string k = id();
        expect("=");
        const std::string v = id();
        raw += k + "=" + v + ";";
        if (peek(",")) expect(",");
        else if (peek(";")) expect(";");
      }
      expect("]");
    }
    return raw;
  }

  void subgraph() {
    if (keyword("subgraph")) {
      if (!peek("{")) id();
    }
    expect("{");
    stmt_list();
    expect("}");
  }

  void stmt() {
    if (keyword("node") || keyword("edge")) {
      attr_list();
      return;
    }
    const std::size_t save = pos_;
    if (keyword("graph")) {
      attr_list();
      return;
    }
    pos_ = save;
    if (peek("{") || peek("subgraph")) {
      subgraph();
      edge_rhs(false, "");
      return;
    }
    const std::string first = id();
    if (peek("=")) {
      expect("=");
      id();
      return;
    }
    out_.nodes.insert(first);
    if (edge_rhs(true, first)) {
      attr_list();
      return;
    }
    out_.declared.insert(first);
    out_.node_attrs.emplace_back(first, attr_list());
  }

  bool edge_rhs(bool from_node, const std::string&) {
    bool any = false;
    while (true) {
      const char* op = out_.directed ? "->" : "--";
      if (!peek(op)) break;
      expect(op);
      any = true;
      ++out_.edges;
      if (peek("{") || peek("subgraph")) subgraph();
      else out_.nodes.insert(id());
    }
    (void)from_node;
    return any;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  DotSummary out_;
};

inline DotSummary check_dot(std::string_view text) { return DotChecker(text).run(); }

}  // namespace symtree::testing
