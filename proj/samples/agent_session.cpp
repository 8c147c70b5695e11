// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Natural-language requests through the intent parser and the tool service.

#include <iostream>

#include "marqoe/marqoe.hpp"

int main() {
  using nlohmann::json;
  namespace agent = marqoe::agent;

  marqoe::ExperimentConfig cfg;
  cfg.manifest = marqoe::write_synthetic_dataset(std::filesystem::temp_directory_path() / "marqoe-agent-session",
                                                 marqoe::mixed_mobility_specs());
  auto service = agent::make_service(cfg, std::make_shared<agent::UserContextRepository>());

  const char* requests[] = {
      "predict user P01's QoE given the allocated 15 MHz bandwidth",
      "forecast P03 at 2.7 MHz for epoch 4",
      "realloc epoch=2",
      "what time is it",
  };
  int id = 0;
  for (const char* text : requests) {
    const agent::IntentParse p = service->parse(text);
    std::cout << "> " << text << "\n  parse: " << agent::to_json(p).dump() << '\n';
    if (!p.tool) continue;
    const json req{{"id", std::to_string(++id)},
                   {"method", "tools/call"},
                   {"params", {{"name", *p.tool}, {"arguments", p.arguments}}}};
    std::cout << "  response: " << service->handle(req).dump() << '\n';
  }
}
