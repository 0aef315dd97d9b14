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

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace symtree {

using json = nlohmann::json;

// Error hierarchy. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed document, unknown enum text, unsupported layer class.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Declared sizes disagree with weight arrays or with neighbouring layers.
class ShapeError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Input vector of the wrong length or with non-finite components.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Out-of-range option such as a threshold outside [0, 1].
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DerivationError : public Error {
 public:
  using Error::Error;
};

class MergeError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void write_double(std::string& out, double v) {
  if (!std::isfinite(v)) throw Error("cannot serialize non-finite number");
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v,
                           std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

inline void write_canonical(std::string& out, const json& j) {
  switch (j.type()) {
    case json::value_t::object: {
      out.push_back('{');
      bool first = true;
      // nlohmann's default object type is an ordered std::map.
      for (const auto& [key, value] : j.items()) {
        if (!first) out.push_back(',');
        first = false;
        out += json(key).dump();
        out.push_back(':');
        write_canonical(out, value);
      }
      out.push_back('}');
      break;
    }
    case json::value_t::array: {
      out.push_back('[');
      bool first = true;
      for (const auto& value : j) {
        if (!first) out.push_back(',');
        first = false;
        write_canonical(out, value);
      }
      out.push_back(']');
      break;
    }
    case json::value_t::number_float:
      write_double(out, j.get<double>());
      break;
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Compact JSON with sorted keys and 17 significant digits for every float.
/// Equal documents always produce equal bytes.
inline std::string canonical_dump(const json& j) {
  std::string out;
  detail::write_canonical(out, j);
  out.push_back('\n');
  return out;
}

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
inline std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    h >>= 4;
  }
  return s;
}

inline json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

}  // namespace symtree
