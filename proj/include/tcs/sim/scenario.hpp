// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tcs/payload.hpp"
#include "tcs/types.hpp"

namespace tcs {

/// Static run parameters. Process ids are laid out replicas first (shard s
/// owns pids [s*replicas, (s+1)*replicas), leader lowest), then the fresh
/// pool, then clients, then the configuration service.
struct SimConfig {
  Model model = Model::Mp;
  std::uint32_t shards = 2;
  std::uint32_t replicas_per_shard = 2;
  std::uint32_t pool_size = 2;
  std::uint32_t client_count = 1;
  std::uint64_t seed = 1;
  std::uint64_t max_steps = 50000;
  std::uint32_t rdma_capacity = 64;
  std::uint32_t cs_latency = 1;
  std::uint64_t retry_after = 0;  // 0 disables the automatic retry policy
  bool fifo_scheduler = false;    // scripted scenarios pin interleavings

  std::uint32_t replica_count() const { return shards * replicas_per_shard; }
  ProcessId pool_first() const { return replica_count(); }
  ProcessId client_first() const { return replica_count() + pool_size; }
  ProcessId cs_pid() const { return client_first() + client_count; }
  ProcessId initial_leader(ShardId s) const { return s * replicas_per_shard; }

  bool is_replica(ProcessId p) const { return p < replica_count(); }
  bool is_client(ProcessId p) const {
    return p >= client_first() && p < cs_pid();
  }
  ShardId home_shard(ProcessId p) const {
    return is_replica(p) ? p / replicas_per_shard : kNoShard;
  }
};

/// Object access plan for one generated transaction; read versions are
/// resolved against the committed store when the certify event fires.
struct TxnPlan {
  TxnId txn = 0;
  std::vector<ObjectId> reads;
  std::vector<ObjectId> writes;  // subset of reads
  ProcessId client = kNoProcess;
  ProcessId coordinator = kNoProcess;  // kNoProcess: scheduler picks
};

struct Directive {
  enum class Kind : std::uint8_t {
    Certify,
    Crash,
    Reconfigure,
    Retry,
    Hold,
    Release,
  };
  Kind kind = Kind::Certify;
  std::uint64_t at_step = 0;

  TxnPlan plan;                     // Certify
  ProcessId pid = kNoProcess;       // Crash/Reconfigure/Retry actor
  ShardId shard = kNoShard;         // Reconfigure target (mp); unused in rdma
  std::set<ProcessId> exclude;      // Reconfigure membership exclusions
  Slot slot = 0;                    // Retry
  // Hold/Release: defer matching deliveries until released
  std::uint32_t hold_id = 0;
  ProcessId hold_src = kNoProcess;  // kNoProcess matches any
  ProcessId hold_dst = kNoProcess;
  std::string hold_kind;            // message kind name; empty matches any
};

struct Scenario {
  std::string name;
  SimConfig config;
  std::vector<Directive> directives;  // sorted by at_step by convention

  // auto-generated workload (in addition to explicit Certify directives)
  std::uint32_t workload_txns = 0;
  double conflict_rate = 0.0;
};

}  // namespace tcs
