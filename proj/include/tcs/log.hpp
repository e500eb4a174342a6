// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <map>
#include <optional>

#include "tcs/payload.hpp"
#include "tcs/types.hpp"

namespace tcs {

/// Identifies the vote computation that produced a slot's vote; assigned once
/// when a leader first prepares the transaction and carried along with the
/// slot through PREPARE_ACK, ACCEPT and NEW_STATE. Consumed only by the trace
/// checkers, never by protocol guards.
using VoteOriginId = std::uint64_t;
constexpr VoteOriginId kNoOrigin = 0;

struct LogSlot {
  TxnId txn = 0;
  Payload payload;
  Decision vote = Decision::Abort;
  std::optional<Decision> dec;
  Phase phase = Phase::Start;
  VoteOriginId origin = kNoOrigin;

  bool operator==(const LogSlot&) const = default;
};

/// Sparse 1-indexed certification order; absent keys are holes (phase start).
using Log = std::map<Slot, LogSlot>;

inline Phase phase_at(const Log& log, Slot k) {
  auto it = log.find(k);
  return it == log.end() ? Phase::Start : it->second.phase;
}

/// max{k | phase[k] != start}, 0 when the log is empty.
inline Slot max_filled_slot(const Log& log) {
  return log.empty() ? 0 : log.rbegin()->first;
}

/// The leader's view of slots 1..k of the certification order, captured when
/// it sends a PREPARE_ACK. Holes stay absent. Checkers compare follower logs
/// against this prefix.
struct LeaderPrefix {
  Slot upto = 0;
  std::map<Slot, LogSlot> entries;
};

inline LeaderPrefix prefix_of(const Log& log, Slot k) {
  LeaderPrefix p;
  p.upto = k;
  for (const auto& [i, slot] : log) {
    if (i > k) break;
    p.entries.emplace(i, slot);
  }
  return p;
}

}  // namespace tcs
