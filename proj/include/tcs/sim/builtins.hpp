// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tcs/sim/scenario.hpp"

namespace tcs {

// Named scenarios with pinned interleavings (FIFO scheduling). Process
// layout: shard s owns pids [s*replicas, (s+1)*replicas), leader lowest,
// then the fresh pool, then clients.

namespace builtin {

inline Directive certify_at(std::uint64_t step, TxnId t,
                            std::vector<ObjectId> reads,
                            std::vector<ObjectId> writes, ProcessId client,
                            ProcessId coordinator) {
  Directive d;
  d.kind = Directive::Kind::Certify;
  d.at_step = step;
  d.plan.txn = t;
  d.plan.reads = std::move(reads);
  d.plan.writes = std::move(writes);
  d.plan.client = client;
  d.plan.coordinator = coordinator;
  return d;
}

inline Directive crash_at(std::uint64_t step, ProcessId pid) {
  Directive d;
  d.kind = Directive::Kind::Crash;
  d.at_step = step;
  d.pid = pid;
  return d;
}

inline Directive reconfigure_at(std::uint64_t step, ProcessId pid,
                                ShardId shard,
                                std::set<ProcessId> exclude = {}) {
  Directive d;
  d.kind = Directive::Kind::Reconfigure;
  d.at_step = step;
  d.pid = pid;
  d.shard = shard;
  d.exclude = std::move(exclude);
  return d;
}

inline Directive retry_at(std::uint64_t step, ProcessId pid, Slot slot) {
  Directive d;
  d.kind = Directive::Kind::Retry;
  d.at_step = step;
  d.pid = pid;
  d.slot = slot;
  return d;
}

inline Directive hold_from(std::uint64_t step, std::uint32_t id,
                           ProcessId src, ProcessId dst, std::string kind) {
  Directive d;
  d.kind = Directive::Kind::Hold;
  d.at_step = step;
  d.hold_id = id;
  d.hold_src = src;
  d.hold_dst = dst;
  d.hold_kind = std::move(kind);
  return d;
}

inline Directive release_at(std::uint64_t step, std::uint32_t id) {
  Directive d;
  d.kind = Directive::Kind::Release;
  d.at_step = step;
  d.hold_id = id;
  return d;
}

/// Failure-free two-shard commit. Transaction 1 has a remote client,
/// transaction 2 is issued by a client co-located with its coordinator.
inline Scenario fig2a(Model model = Model::Mp) {
  Scenario sc;
  sc.name = "fig2a";
  sc.config.model = model;
  sc.config.shards = 2;
  sc.config.replicas_per_shard = 2;
  sc.config.pool_size = 0;
  sc.config.client_count = 1;
  sc.config.fifo_scheduler = true;
  ProcessId client = sc.config.client_first();
  sc.directives.push_back(certify_at(5, 1, {0, 1}, {0, 1}, client, 0));
  sc.directives.push_back(certify_at(80, 2, {2, 3}, {2, 3}, 0, 0));
  return sc;
}

/// Shard reconfiguration: the leader of shard 0 crashes after a first commit;
/// its follower takes over with a fresh replica and a second transaction
/// commits in the new configuration.
inline Scenario fig2b(Model model = Model::Mp) {
  Scenario sc;
  sc.name = "fig2b";
  sc.config.model = model;
  sc.config.shards = 2;
  sc.config.replicas_per_shard = 2;
  sc.config.pool_size = 1;
  sc.config.client_count = 1;
  sc.config.fifo_scheduler = true;
  ProcessId client = sc.config.client_first();
  sc.directives.push_back(certify_at(5, 1, {0, 1}, {0, 1}, client, 2));
  sc.directives.push_back(crash_at(80, 0));
  sc.directives.push_back(reconfigure_at(100, 1, 0));
  sc.directives.push_back(certify_at(260, 2, {2, 3}, {2, 3}, client, 2));
  return sc;
}

/// An undecided transaction vanishes when the leader that prepared it and its
/// coordinator both crash before it reaches any follower; a later transaction
/// whose vote was computed on top of it still commits.
inline Scenario lost_txn(Model model = Model::Mp) {
  Scenario sc;
  sc.name = "lost-txn";
  sc.config.model = model;
  sc.config.shards = 2;
  sc.config.replicas_per_shard = 2;
  sc.config.pool_size = 1;
  sc.config.client_count = 1;
  sc.config.fifo_scheduler = true;
  ProcessId client = sc.config.client_first();
  // t1: coordinator p2 never persists the vote at follower p1
  sc.directives.push_back(hold_from(1, 1, 2, 1, "ACCEPT"));
  sc.directives.push_back(certify_at(5, 1, {0}, {0}, client, 2));
  // t2: prepared after t1 at the shard-0 leader, persisted and decided
  sc.directives.push_back(certify_at(60, 2, {2}, {2}, client, 3));
  sc.directives.push_back(crash_at(160, 0));  // leader of shard 0
  sc.directives.push_back(crash_at(162, 2));  // coordinator of t1
  sc.directives.push_back(reconfigure_at(180, 1, 0));
  return sc;
}

/// Spurious coordinator suspicion: the original coordinator stalls between
/// PREPAREs, another process finishes the transaction through retry (the
/// leader missing the payload votes abort), and the revived coordinator
/// reaches the identical decision.
inline Scenario retry_spurious(Model model = Model::Mp) {
  Scenario sc;
  sc.name = "retry-spurious";
  sc.config.model = model;
  sc.config.shards = 2;
  sc.config.replicas_per_shard = 2;
  sc.config.pool_size = 0;
  sc.config.client_count = 1;
  sc.config.fifo_scheduler = true;
  ProcessId client = sc.config.client_first();
  sc.directives.push_back(hold_from(1, 1, 1, 2, "PREPARE"));
  sc.directives.push_back(certify_at(5, 1, {0, 1}, {0, 1}, client, 1));
  sc.directives.push_back(retry_at(120, 0, 1));
  sc.directives.push_back(release_at(240, 1));
  return sc;
}

/// The one-sided-write counter-example schedule: a stale coordinator persists
/// an old commit vote at a promoted follower after a competing retry already
/// externalized abort. Per-shard reconfiguration grafted onto RDMA transport
/// (naive-rdma) externalizes both decisions; the full protocol closes the
/// promoted follower's buffers, so the stale write is refused and only one
/// decision is ever emitted. Shard 1's leader p2 is "suspected"; coordinator
/// p4 leads shard 2 and is cut off from reconfiguration traffic.
inline Scenario fig4a(Model model = Model::NaiveRdma) {
  Scenario sc;
  sc.name = "fig4a";
  sc.config.model = model;
  sc.config.shards = 3;
  sc.config.replicas_per_shard = 2;
  sc.config.pool_size = 2;
  sc.config.client_count = 1;
  sc.config.fifo_scheduler = true;
  ProcessId client = sc.config.client_first();

  sc.directives.push_back(hold_from(1, 1, 2, 4, "PREPARE_ACK"));
  sc.directives.push_back(hold_from(1, 2, kNoProcess, 4, "CONFIG_CHANGE"));
  sc.directives.push_back(hold_from(1, 3, kNoProcess, 4, "PROBE"));

  sc.directives.push_back(certify_at(5, 1, {0, 1}, {0, 1}, client, 4));
  sc.directives.push_back(crash_at(60, 2));
  if (model == Model::Rdma) {
    // one global reconfiguration replaces shard 1's leader and drops p4
    sc.directives.push_back(reconfigure_at(80, 3, kNoShard, {4}));
  } else {
    sc.directives.push_back(reconfigure_at(80, 3, 1));
    sc.directives.push_back(reconfigure_at(160, 5, 2, {4}));
  }
  sc.directives.push_back(retry_at(240, 0, 1));
  sc.directives.push_back(release_at(320, 1));
  return sc;
}

}  // namespace builtin

inline std::optional<Scenario> builtin_scenario(
    const std::string& name, std::optional<Model> model = std::nullopt) {
  if (name == "fig2a")
    return builtin::fig2a(model.value_or(Model::Mp));
  if (name == "fig2b")
    return builtin::fig2b(model.value_or(Model::Mp));
  if (name == "lost-txn")
    return builtin::lost_txn(model.value_or(Model::Mp));
  if (name == "retry-spurious")
    return builtin::retry_spurious(model.value_or(Model::Mp));
  if (name == "fig4a")
    return builtin::fig4a(model.value_or(Model::NaiveRdma));
  return std::nullopt;
}

inline std::vector<std::string> builtin_names() {
  return {"fig2a", "fig2b", "fig4a", "lost-txn", "retry-spurious"};
}

/// Randomized crash/reconfiguration workload used by the fuzzing harness:
/// per shard at most one crash followed by a reconfiguration driven by the
/// surviving replica.
inline Scenario fuzz_scenario(Model model, std::uint64_t seed) {
  Scenario sc;
  sc.name = std::string("fuzz-") + to_string(model);
  sc.config.model = model;
  sc.config.shards = 3;
  sc.config.replicas_per_shard = 2;
  sc.config.pool_size = 6;
  sc.config.client_count = 2;
  sc.config.seed = seed;
  sc.config.max_steps = 30000;
  sc.config.retry_after = 60;
  sc.workload_txns = 8;
  sc.conflict_rate = 0.3;

  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 12345);
  if (model == Model::Rdma) {
    sc.config.rdma_capacity = seed % 5 == 0 ? 2 : 64;
    std::uint64_t when = 60;
    for (ShardId s = 0; s < 2; ++s) {
      if (rng() % 2) continue;
      ProcessId leader = sc.config.initial_leader(s);
      bool crash_leader = rng() % 2;
      ProcessId victim = crash_leader ? leader : leader + 1;
      ProcessId survivor = crash_leader ? leader + 1 : leader;
      std::uint64_t at = when + rng() % 40;
      sc.directives.push_back(builtin::crash_at(at, victim));
      sc.directives.push_back(
          builtin::reconfigure_at(at + 40, survivor, kNoShard));
      when = at + 340;  // let one global installation settle before the next
    }
  } else {
    for (ShardId s = 0; s < sc.config.shards; ++s) {
      if (rng() % 10 >= 6) continue;
      ProcessId leader = sc.config.initial_leader(s);
      bool crash_leader = rng() % 2;
      ProcessId victim = crash_leader ? leader : leader + 1;
      ProcessId survivor = crash_leader ? leader + 1 : leader;
      std::uint64_t at = 40 + rng() % 220;
      sc.directives.push_back(builtin::crash_at(at, victim));
      sc.directives.push_back(
          builtin::reconfigure_at(at + 30, survivor, s));
    }
  }
  return sc;
}

}  // namespace tcs
