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

#include "tcs/certification.hpp"
#include "tcs/log.hpp"
#include "tcs/messages.hpp"

namespace tcs {

/// Record of one vote computation at a leader: the decided-commit and
/// prepared-commit transaction sets the vote was checked against. Feeds the
/// constraint checkers; the protocol itself never reads these back.
struct VoteOrigin {
  VoteOriginId id = kNoOrigin;
  ProcessId leader = kNoProcess;
  ShardId shard = 0;
  Epoch epoch = 0;
  Slot slot = 0;
  TxnId txn = 0;
  Payload payload;
  Decision vote = Decision::Abort;
  bool forced_abort = false;  // prepared from a retry without the payload
  std::set<TxnId> decided_commit;
  std::set<TxnId> prepared_commit;
};

/// Per-transaction facts shared by clients, retrying replicas and checkers:
/// who issued it, its full payload and the shards it must be certified by.
struct TxnInfo {
  Payload payload;
  std::set<ShardId> shards;
  ProcessId client = kNoProcess;
};

/// Read-only environment the simulator hands to every transition.
struct Ctx {
  const CertificationFunction* certifier = nullptr;
  ShardMap shard_map;
  std::uint32_t target_shard_size = 2;
  const std::map<TxnId, TxnInfo>* registry = nullptr;
  std::vector<ProcessId> fresh_pool;  // unreserved processes, ascending
  std::uint64_t now = 0;              // current simulator step
  std::uint64_t seq = 0;              // trace id of the event being applied

  const TxnInfo* txn_info(TxnId t) const {
    if (!registry) return nullptr;
    auto it = registry->find(t);
    return it == registry->end() ? nullptr : &it->second;
  }
};

/// Everything a transition hands back to the simulator.
struct StepResult {
  std::vector<Emission> out;
  std::optional<VoteOrigin> origin;
  std::vector<ProcessId> drafted;        // fresh processes reserved for a CAS
  std::vector<std::uint64_t> parents;    // extra causal parents (ack events)
  std::vector<std::string> notes;
  bool rejected = false;  // precondition refused a local call

  void send(ProcessId dst, Message msg, Via via = Via::Fifo) {
    out.push_back(Emission{dst, std::move(msg), via});
  }
  void note(std::string s) { notes.push_back(std::move(s)); }
};

enum class Gate : std::uint8_t { Handle, Park, Drop };

}  // namespace tcs
