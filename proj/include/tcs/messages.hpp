// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>

#include "tcs/config_service.hpp"
#include "tcs/log.hpp"
#include "tcs/payload.hpp"
#include "tcs/types.hpp"

namespace tcs {

// Transaction path ------------------------------------------------------

struct Prepare {
  TxnId txn = 0;
  std::optional<Payload> payload;  // nullopt on retry
};

struct PrepareAck {
  Epoch epoch = 0;
  ShardId shard = 0;
  Slot slot = 0;
  TxnId txn = 0;
  Payload payload;
  Decision vote = Decision::Abort;
  VoteOriginId origin = kNoOrigin;
  LeaderPrefix leader_prefix;  // trace instrumentation
};

struct Accept {
  Epoch epoch = 0;  // absent on the wire in the RDMA variant; kept for checks
  Slot slot = 0;
  TxnId txn = 0;
  Payload payload;
  Decision vote = Decision::Abort;
  ShardId shard = 0;
  VoteOriginId origin = kNoOrigin;
  LeaderPrefix leader_prefix;
};

struct AcceptAck {
  ShardId shard = 0;
  Epoch epoch = 0;
  Slot slot = 0;
  TxnId txn = 0;
  Decision vote = Decision::Abort;
};

struct ShardDecision {
  Epoch epoch = 0;  // sender's epoch for the shard; informational in RDMA mode
  Slot slot = 0;
  Decision dec = Decision::Abort;
  ShardId shard = 0;
  TxnId txn = 0;
};

struct ClientDecision {
  TxnId txn = 0;
  Decision dec = Decision::Abort;
};

// Reconfiguration, per-shard (message-passing) ---------------------------

struct Probe {
  Epoch epoch = 0;
};

struct ProbeAck {
  bool initialized = false;
  Epoch epoch = 0;
  ShardId shard = 0;
};

struct NewConfig {
  Epoch epoch = 0;
  std::set<ProcessId> members;
};

struct NewState {
  Epoch epoch = 0;
  ShardId shard = 0;
  std::set<ProcessId> members;
  Log log;
};

struct ConfigChange {
  ShardId shard = 0;
  Epoch epoch = 0;
  std::set<ProcessId> members;
  ProcessId leader = kNoProcess;
};

// Reconfiguration, global (RDMA) -----------------------------------------

struct ConfigPrepare {
  Epoch epoch = 0;
  std::map<ShardId, std::set<ProcessId>> members;
  std::map<ShardId, ProcessId> leaders;
};

struct ConfigPrepareAck {
  Epoch epoch = 0;
};

struct Connect {
  Epoch epoch = 0;
};

struct ConnectAck {
  Epoch epoch = 0;
};

// Configuration service --------------------------------------------------

enum class CsOpKind : std::uint8_t { GetLast, Get, Cas };

struct CsRequest {
  CsOpKind op = CsOpKind::GetLast;
  CsKey key = 0;
  Epoch epoch = 0;           // Get: wanted epoch; Cas: expected epoch
  Configuration cfg;         // Cas only
  std::uint32_t token = 0;   // round-trip correlation
};

struct CsResponse {
  CsOpKind op = CsOpKind::GetLast;
  CsKey key = 0;
  bool ok = false;           // Cas result / lookup success
  Configuration cfg;
  std::uint32_t token = 0;
};

struct Message {
  std::variant<Prepare, PrepareAck, Accept, AcceptAck, ShardDecision,
               ClientDecision, Probe, ProbeAck, NewConfig, NewState,
               ConfigChange, ConfigPrepare, ConfigPrepareAck, Connect,
               ConnectAck, CsRequest, CsResponse>
      body;

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&body);
  }
  template <typename T>
  bool is() const {
    return std::holds_alternative<T>(body);
  }
};

inline const char* kind_name(const Message& m) {
  struct V {
    const char* operator()(const Prepare&) { return "PREPARE"; }
    const char* operator()(const PrepareAck&) { return "PREPARE_ACK"; }
    const char* operator()(const Accept&) { return "ACCEPT"; }
    const char* operator()(const AcceptAck&) { return "ACCEPT_ACK"; }
    const char* operator()(const ShardDecision&) { return "DECISION"; }
    const char* operator()(const ClientDecision&) { return "DECISION_CLIENT"; }
    const char* operator()(const Probe&) { return "PROBE"; }
    const char* operator()(const ProbeAck&) { return "PROBE_ACK"; }
    const char* operator()(const NewConfig&) { return "NEW_CONFIG"; }
    const char* operator()(const NewState&) { return "NEW_STATE"; }
    const char* operator()(const ConfigChange&) { return "CONFIG_CHANGE"; }
    const char* operator()(const ConfigPrepare&) { return "CONFIG_PREPARE"; }
    const char* operator()(const ConfigPrepareAck&) {
      return "CONFIG_PREPARE_ACK";
    }
    const char* operator()(const Connect&) { return "CONNECT"; }
    const char* operator()(const ConnectAck&) { return "CONNECT_ACK"; }
    const char* operator()(const CsRequest&) { return "CS_REQUEST"; }
    const char* operator()(const CsResponse&) { return "CS_RESPONSE"; }
  };
  return std::visit(V{}, m.body);
}

/// Transport for an emission. ACCEPT and DECISION travel through the RDMA
/// channel in the rdma and naive-rdma models; everything else uses the
/// reliable FIFO network.
enum class Via : std::uint8_t { Fifo, Rdma };

struct Emission {
  ProcessId dst = kNoProcess;
  Message msg;
  Via via = Via::Fifo;
};

}  // namespace tcs
