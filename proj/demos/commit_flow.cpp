// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Minimal library walkthrough: build a two-shard scenario programmatically,
// run it, and print the message flow of one committed transaction.

#include <iostream>

#include "tcs/check/correctness.hpp"
#include "tcs/sim/builtins.hpp"
#include "tcs/sim/engine.hpp"

int main() {
  using namespace tcs;

  Scenario sc;
  sc.name = "demo";
  sc.config.shards = 2;
  sc.config.replicas_per_shard = 2;
  sc.config.client_count = 1;
  sc.config.fifo_scheduler = true;
  ProcessId client = sc.config.client_first();
  // one transaction reading and writing an object on each shard
  sc.directives.push_back(builtin::certify_at(5, 1, {0, 1}, {0, 1}, client, 0));

  Trace tr = run_scenario(sc);
  for (const TraceEvent& ev : tr.events) {
    if (!ev.msg && ev.kind != EvKind::Certify) continue;
    std::cout << "step " << ev.step << ": " << to_string(ev.kind);
    if (ev.msg)
      std::cout << " " << kind_name(*ev.msg) << " " << ev.src << " -> "
                << ev.actor;
    std::cout << "\n";
  }
  if (auto d = count_delays(tr, 1))
    std::cout << "decision reached the client after " << *d
              << " message delays\n";
  return 0;
}
