// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic natural-language intent parser.
//
// Stage 1, exact grammar:
//   <verb phrase> user=<id> [bandwidth=<num><unit>] [epoch=<int>]
//                 [from=<int>] [to=<int>] [aggregate=mean|min|max|series]
// Stage 2, keyword fallback: verb stems pick the tool, user ids are matched
// against the roster, quantities come from number+unit and "epoch N" patterns.

#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "marqoe/agent/schema.hpp"
#include "marqoe/trace.hpp"

namespace marqoe::agent {

enum class Confidence { exact, keyword, none };

inline const char* to_string(Confidence c) {
  switch (c) {
    case Confidence::exact: return "exact";
    case Confidence::keyword: return "keyword";
    case Confidence::none: return "none";
  }
  return "?";
}

struct IntentParse {
  std::optional<std::string> tool;
  json arguments = json::object();
  Confidence confidence{Confidence::none};
  std::string note;  // why nothing matched

  bool operator==(const IntentParse&) const = default;
};

inline json to_json(const IntentParse& p) {
  return {{"tool", p.tool ? json(*p.tool) : json(nullptr)},
          {"arguments", p.arguments},
          {"confidence", to_string(p.confidence)},
          {"note", p.note}};
}

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Tool named by the verb stems found in `words`; empty when none, "?" when
// stems of different tools appear.
inline std::string tool_from_stems(const std::vector<std::string>& words) {
  std::string found;
  for (const auto& w0 : words) {
    const std::string w = lower(w0);
    std::string t;
    if (w.find("predict") != std::string::npos || w.find("forecast") != std::string::npos)
      t = "predict_future_qoe";
    else if (w.find("histor") != std::string::npos || w.find("query") != std::string::npos)
      t = "historical_qoe_query";
    else if (w.find("realloc") != std::string::npos)
      t = "reallocate_bandwidth";
    if (t.empty()) continue;
    if (!found.empty() && found != t) return "?";
    found = t;
  }
  return found;
}

inline std::optional<double> unit_scale(std::string u) {
  u = lower(u);
  if (u == "hz") return 1.0;
  if (u == "khz") return 1e3;
  if (u == "mhz") return 1e6;
  if (u == "ghz") return 1e9;
  return std::nullopt;
}

// "15MHz", "1.5e7hz", "2e6" (bare numbers are Hz).
inline std::optional<double> parse_bandwidth(std::string_view s) {
  static const std::regex re(R"(^([0-9]+(?:\.[0-9]*)?(?:[eE][+-]?[0-9]+)?)\s*([A-Za-z]*)$)");
  std::cmatch m;
  const std::string str(s);
  if (!std::regex_match(str.c_str(), m, re)) return std::nullopt;
  double v = 0.0;
  if (!marqoe::detail::parse_double(m[1].str(), v)) return std::nullopt;
  const auto scale = m[2].length() == 0 ? std::optional<double>(1.0) : unit_scale(m[2].str());
  if (!scale) return std::nullopt;
  return v * *scale;
}

inline std::optional<long long> parse_int(std::string_view s) {
  if (s.empty() || s.size() > 9 || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return std::nullopt;
  return std::stoll(std::string(s));
}

inline const ToolDescriptor* find_tool(std::span<const ToolDescriptor> tools, const std::string& name) {
  for (const auto& t : tools)
    if (t.name == name) return &t;
  return nullptr;
}

inline IntentParse no_match(std::string note) {
  IntentParse p;
  p.note = std::move(note);
  return p;
}

inline IntentParse finish(std::span<const ToolDescriptor> tools, const std::string& tool, json args,
                          Confidence c) {
  const ToolDescriptor* d = find_tool(tools, tool);
  if (!d) return no_match("tool " + tool + " is not registered");
  if (auto v = validate_arguments(*d, args)) return no_match(tool + ": " + v->message);
  IntentParse p;
  p.tool = tool;
  p.arguments = std::move(args);
  p.confidence = c;
  return p;
}

inline std::optional<IntentParse> parse_exact(std::string_view text, std::span<const ToolDescriptor> tools) {
  const auto words = split_ws(text);
  std::size_t k = 0;
  while (k < words.size() && words[k].find('=') == std::string::npos) ++k;
  if (k == 0 || k == words.size()) return std::nullopt;
  const std::vector<std::string> verbs(words.begin(), words.begin() + static_cast<long>(k));
  const std::string tool = tool_from_stems(verbs);
  if (tool.empty() || tool == "?") return std::nullopt;

  json args = json::object();
  for (; k < words.size(); ++k) {
    const auto eq = words[k].find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == words[k].size()) return std::nullopt;
    const std::string key = lower(std::string_view(words[k]).substr(0, eq));
    const std::string val = words[k].substr(eq + 1);
    if (key == "user") {
      args["user"] = val;
    } else if (key == "bandwidth") {
      const auto b = parse_bandwidth(val);
      if (!b) return std::nullopt;
      args["bandwidth_hz"] = *b;
    } else if (key == "epoch" || key == "from" || key == "to") {
      const auto n = parse_int(val);
      if (!n) return std::nullopt;
      args[key == "epoch" ? "epoch" : key == "from" ? "epoch_from" : "epoch_to"] = *n;
    } else if (key == "aggregate") {
      args["aggregate"] = lower(val);
    } else {
      return std::nullopt;
    }
  }
  if (tool != "reallocate_bandwidth" && !args.contains("user")) return std::nullopt;
  return finish(tools, tool, std::move(args), Confidence::exact);
}

// Word with surrounding punctuation and a trailing possessive removed.
inline std::string strip_token(std::string w) {
  auto is_edge = [](char c) { return !std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.'; };
  while (!w.empty() && is_edge(w.back())) w.pop_back();
  while (!w.empty() && is_edge(w.front())) w.erase(w.begin());
  for (const char* suffix : {"'s", "\xE2\x80\x99s"}) {
    const std::string s(suffix);
    if (w.size() > s.size() && w.ends_with(s)) w.resize(w.size() - s.size());
  }
  while (!w.empty() && (w.back() == '.' || w.back() == '-')) w.pop_back();
  return w;
}

inline IntentParse parse_keywords(std::string_view text, std::span<const ToolDescriptor> tools,
                                  std::span<const std::string> roster) {
  const auto words = split_ws(text);
  const std::string tool = tool_from_stems(words);
  if (tool.empty()) return no_match("no known intent in the request");
  if (tool == "?") return no_match("request mentions more than one tool");

  json args = json::object();
  std::vector<std::string> users;
  for (const auto& w : words) {
    const std::string t = strip_token(w);
    for (const auto& id : roster)
      if (lower(t) == lower(id) && std::find(users.begin(), users.end(), id) == users.end()) users.push_back(id);
  }
  if (users.size() > 1) return no_match("request names more than one user");
  if (users.size() == 1) args["user"] = users.front();

  const std::string str(text);
  static const std::regex bw_re(R"(([0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?)\s*(GHz|MHz|kHz|Hz)\b)", std::regex::icase);
  std::vector<double> bws;
  for (auto it = std::sregex_iterator(str.begin(), str.end(), bw_re); it != std::sregex_iterator(); ++it) {
    double v = 0.0;
    if (marqoe::detail::parse_double((*it)[1].str(), v)) bws.push_back(v * *unit_scale((*it)[2].str()));
  }
  if (bws.size() > 1) return no_match("request names more than one bandwidth");
  if (bws.size() == 1) args["bandwidth_hz"] = bws.front();

  static const std::regex epoch_re(R"(\bepoch\s*(?:=|#|no\.?)?\s*([0-9]{1,9})\b)", std::regex::icase);
  std::smatch m;
  if (std::regex_search(str, m, epoch_re)) args["epoch"] = std::stoll(m[1].str());

  if (tool == "historical_qoe_query") {
    const std::string l = lower(text);
    auto has = [&](const char* w) { return std::regex_search(l, std::regex(std::string("\\b") + w + "\\b")); };
    if (has("average") || has("mean")) args["aggregate"] = "mean";
    else if (has("min") || has("minimum") || has("lowest") || has("worst")) args["aggregate"] = "min";
    else if (has("max") || has("maximum") || has("highest") || has("best")) args["aggregate"] = "max";
    else if (has("series") || has("all")) args["aggregate"] = "series";
  }
  return finish(tools, tool, std::move(args), Confidence::keyword);
}

}  // namespace detail

// Total and deterministic: unparseable text yields a none-confidence parse.
inline IntentParse parse_intent(std::string_view text, std::span<const ToolDescriptor> tools,
                                std::span<const std::string> roster) {
  if (auto exact = detail::parse_exact(text, tools)) {
    if (exact->tool) return *exact;
  }
  return detail::parse_keywords(text, tools, roster);
}

}  // namespace marqoe::agent
