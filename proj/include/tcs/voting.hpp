// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <optional>

#include "tcs/context.hpp"
#include "tcs/log.hpp"

namespace tcs {

/// Leader-side preparation of a transaction: appends it to the certification
/// order and computes its vote with f_s against the decided-commit slots and
/// g_s against the prepared-commit slots below it. A missing payload (retry
/// by a coordinator that lost it) prepares the transaction as aborted with an
/// empty payload. Returns the slot; `r.origin` records the provenance sets.
///
/// Callers must have ruled out that the transaction already occupies a slot.
inline Slot prepare_transaction(Log& log, Slot& next, ShardId s0, Epoch epoch,
                                ProcessId pid, std::uint32_t& origin_counter,
                                const Ctx& ctx, TxnId t,
                                const std::optional<Payload>& payload,
                                StepResult& r) {
  next += 1;
  Slot k = next;

  VoteOrigin origin;
  origin.leader = pid;
  origin.shard = s0;
  origin.epoch = epoch;
  origin.slot = k;
  origin.txn = t;

  LogSlot slot;
  slot.txn = t;
  slot.phase = Phase::Prepared;

  PayloadSet committed, prepared;
  for (const auto& [i, prev] : log) {
    if (i >= k) break;
    if (prev.phase == Phase::Decided && prev.dec == Decision::Commit) {
      committed.push_back(prev.payload);
      origin.decided_commit.insert(prev.txn);
    } else if (prev.phase == Phase::Prepared &&
               prev.vote == Decision::Commit) {
      prepared.push_back(prev.payload);
      origin.prepared_commit.insert(prev.txn);
    }
  }

  if (payload.has_value()) {
    slot.vote = meet(ctx.certifier->committed_local(s0, committed, *payload),
                     ctx.certifier->prepared_local(s0, prepared, *payload));
    slot.payload = *payload;
  } else {
    slot.vote = Decision::Abort;
    slot.payload = Payload{};
    origin.forced_abort = true;
  }

  slot.origin = (static_cast<std::uint64_t>(pid) << 32) | ++origin_counter;
  origin.id = slot.origin;
  origin.payload = slot.payload;
  origin.vote = slot.vote;
  log[k] = slot;
  r.origin = origin;
  return k;
}

inline std::optional<Slot> find_txn_slot(const Log& log, TxnId t) {
  for (const auto& [k, slot] : log)
    if (slot.txn == t && slot.txn != 0) return k;
  return std::nullopt;
}

}  // namespace tcs
