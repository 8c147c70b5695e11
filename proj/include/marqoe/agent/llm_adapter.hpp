// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Optional external chat-completion adapter. One POST per utterance carrying
// the tool descriptors; the reply must hold exactly one tool call
// (choices[0].message.tool_calls[0].function{name, arguments}). Anything else,
// including transport failures, falls back to the deterministic parser.

#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "marqoe/agent/intent.hpp"
#include "marqoe/agent/schema.hpp"

namespace marqoe::agent {

struct LlmEndpoint {
  bool enabled{false};
  std::string base_url;  // scheme://host:port
  std::string path{"/v1/chat/completions"};
  std::string model;
  std::string api_key;  // sent as a bearer token when non-empty
  std::chrono::milliseconds timeout{5000};
};

namespace detail {

inline json chat_request(std::string_view prompt, std::span<const ToolDescriptor> tools, const LlmEndpoint& ep) {
  json fns = json::array();
  for (const auto& t : tools)
    fns.push_back({{"type", "function"},
                   {"function", {{"name", t.name}, {"description", t.description}, {"parameters", fields_schema(t.parameters)}}}});
  return {{"model", ep.model},
          {"messages", json::array({{{"role", "system"},
                                     {"content", "Select exactly one tool for the user's request. Bandwidths are in Hz."}},
                                    {{"role", "user"}, {"content", std::string(prompt)}}})},
          {"tools", fns},
          {"tool_choice", "required"},
          {"temperature", 0}};
}

// Tool selection from a chat-completion reply; nullopt when malformed.
inline std::optional<IntentParse> selection_from_reply(const json& reply, std::span<const ToolDescriptor> tools) {
  try {
    const auto& calls = reply.at("choices").at(0).at("message").at("tool_calls");
    if (!calls.is_array() || calls.size() != 1) return std::nullopt;
    const auto& fn = calls[0].at("function");
    const std::string name = fn.at("name").get<std::string>();
    json args = fn.at("arguments");
    if (args.is_string()) args = json::parse(args.get<std::string>());
    const ToolDescriptor* d = find_tool(tools, name);
    if (!d || validate_arguments(*d, args)) return std::nullopt;
    IntentParse p;
    p.tool = name;
    p.arguments = std::move(args);
    p.confidence = Confidence::exact;
    return p;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace detail

inline IntentParse llm_adapter_call(std::string_view prompt, const LlmEndpoint& ep,
                                    std::span<const ToolDescriptor> tools, std::span<const std::string> roster) {
  if (!ep.enabled || ep.base_url.empty()) return parse_intent(prompt, tools, roster);
  try {
    httplib::Client cli(ep.base_url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(ep.timeout - secs);
    cli.set_connection_timeout(secs.count(), usec.count());
    cli.set_read_timeout(secs.count(), usec.count());
    cli.set_write_timeout(secs.count(), usec.count());
    httplib::Headers headers;
    if (!ep.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep.api_key);
    const auto res = cli.Post(ep.path, headers, detail::chat_request(prompt, tools, ep).dump(), "application/json");
    if (res && res->status == 200) {
      if (auto sel = detail::selection_from_reply(json::parse(res->body), tools)) return *sel;
    }
  } catch (const std::exception&) {
  }
  return parse_intent(prompt, tools, roster);
}

}  // namespace marqoe::agent
