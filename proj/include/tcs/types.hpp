// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace tcs {

using ProcessId = std::uint32_t;
using ShardId = std::uint32_t;
using TxnId = std::uint32_t;
using ObjectId = std::uint32_t;
using Version = std::uint64_t;
using Value = std::string;
using Epoch = std::uint32_t;
using Slot = std::uint32_t;  // certification-order index, 1-based; 0 = none

constexpr ProcessId kNoProcess = UINT32_MAX;
constexpr ShardId kNoShard = UINT32_MAX;

/// Two-valued decision lattice. meet() is the ⊓ operator: commit is the
/// identity and abort absorbs.
enum class Decision : std::uint8_t { Commit = 0, Abort = 1 };

inline Decision meet(Decision a, Decision b) {
  return (a == Decision::Abort || b == Decision::Abort) ? Decision::Abort
                                                        : Decision::Commit;
}

/// Partial order on decisions: abort ⊑ commit.
inline bool decision_le(Decision x, Decision y) {
  return x == y || (x == Decision::Abort && y == Decision::Commit);
}

inline const char* to_string(Decision d) {
  return d == Decision::Commit ? "commit" : "abort";
}

enum class Status : std::uint8_t { Leader, Follower, Reconfiguring };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Leader: return "leader";
    case Status::Follower: return "follower";
    default: return "reconfiguring";
  }
}

enum class Phase : std::uint8_t { Start = 0, Prepared = 1, Decided = 2 };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Start: return "start";
    case Phase::Prepared: return "prepared";
    default: return "decided";
  }
}

enum class Model : std::uint8_t { Mp, Rdma, NaiveRdma };

inline const char* to_string(Model m) {
  switch (m) {
    case Model::Mp: return "mp";
    case Model::Rdma: return "rdma";
    default: return "naive-rdma";
  }
}

}  // namespace tcs
