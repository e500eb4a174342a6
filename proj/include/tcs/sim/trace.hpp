// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tcs/config_service.hpp"
#include "tcs/context.hpp"
#include "tcs/log.hpp"
#include "tcs/messages.hpp"
#include "tcs/types.hpp"

namespace tcs {

enum class EvKind : std::uint8_t {
  Init,          // per-process bootstrap snapshot
  Deliver,       // message applied at a process (fifo or rdma)
  RdmaAck,       // NIC ack reached the sender
  Certify,       // certify() invoked at the coordinator
  ClientDecide,  // DECISION_CLIENT delivered at the client
  Crash,
  Reconfigure,   // reconfigure() trigger
  Retry,         // retry() trigger
  AdvanceProbe,  // non-deterministic probing descent taken
  CsStep,        // configuration service executed one request
  Note,
};

inline const char* to_string(EvKind k) {
  switch (k) {
    case EvKind::Init: return "init";
    case EvKind::Deliver: return "deliver";
    case EvKind::RdmaAck: return "rdma_ack";
    case EvKind::Certify: return "certify";
    case EvKind::ClientDecide: return "client_decide";
    case EvKind::Crash: return "crash";
    case EvKind::Reconfigure: return "reconfigure";
    case EvKind::Retry: return "retry";
    case EvKind::AdvanceProbe: return "advance_probe";
    case EvKind::CsStep: return "cs_step";
    default: return "note";
  }
}

/// A process's protocol-visible state right after an event it acted in.
struct StateSnap {
  ProcessId pid = kNoProcess;
  ShardId s0 = kNoShard;
  Status status = Status::Follower;
  bool initialized = false;
  std::map<ShardId, Epoch> epoch;  // single kGlobalKey entry in RDMA mode
  Epoch new_epoch = 0;
  Slot next = 0;
  Log log;

  Epoch epoch_for(ShardId s) const {
    auto g = epoch.find(kGlobalKey);
    if (g != epoch.end()) return g->second;
    auto it = epoch.find(s);
    return it == epoch.end() ? 0 : it->second;
  }
};

struct EmissionRec {
  ProcessId dst = kNoProcess;
  Message msg;
  Via via = Via::Fifo;
};

struct TraceEvent {
  std::uint64_t seq = 0;   // dense, unique, causal-order consistent
  std::uint64_t step = 0;  // scheduler step (several records may share one)
  EvKind kind = EvKind::Note;
  ProcessId actor = kNoProcess;
  ProcessId src = kNoProcess;  // deliveries: message source
  std::optional<Message> msg;
  std::vector<std::uint64_t> parents;
  std::vector<EmissionRec> emissions;
  std::optional<StateSnap> snap;
  std::vector<std::string> notes;
  TxnId txn = 0;                    // certify / client_decide / retry
  Decision dec = Decision::Commit;  // client_decide
};

struct CsIntroduction {
  CsKey key = 0;
  Configuration cfg;
  std::uint64_t seq = 0;  // 0 for bootstrap entries
};

/// Complete, replayable record of one simulation. Checkers run off this
/// structure alone; the file format round-trips it.
struct Trace {
  std::uint32_t format_version = 1;
  Model model = Model::Mp;
  std::uint32_t shard_count = 0;
  std::uint32_t replicas_per_shard = 0;
  std::uint64_t seed = 0;
  std::string scenario_name;

  std::map<TxnId, TxnInfo> registry;
  std::vector<CsIntroduction> introductions;
  std::map<VoteOriginId, VoteOrigin> origins;
  std::vector<TraceEvent> events;

  std::uint64_t final_step = 0;
  bool max_steps_exhausted = false;
  std::vector<std::string> pending_obligations;

  ShardMap shard_map() const { return ShardMap{shard_count}; }

  /// Membership of shard `s` in epoch `e` per the configuration sequences.
  const Configuration* config_at(ShardId s, Epoch e) const {
    CsKey key = model == Model::Rdma ? kGlobalKey : s;
    for (const auto& intro : introductions)
      if (intro.key == key && intro.cfg.epoch == e) return &intro.cfg;
    return nullptr;
  }
};

}  // namespace tcs
