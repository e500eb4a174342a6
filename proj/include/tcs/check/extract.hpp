// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tcs/sim/trace.hpp"

namespace tcs {

/// One sent message: an emission of some trace event.
struct Sent {
  std::uint64_t seq = 0;  // event that emitted it
  ProcessId src = kNoProcess;
  ProcessId dst = kNoProcess;
  const Message* msg = nullptr;
  Via via = Via::Fifo;
};

inline std::vector<Sent> sent_messages(const Trace& tr) {
  std::vector<Sent> out;
  for (const TraceEvent& ev : tr.events)
    for (const EmissionRec& em : ev.emissions)
      out.push_back(Sent{ev.seq, ev.actor, em.dst, &em.msg, em.via});
  return out;
}

/// A transaction accepted at a shard in an epoch: every follower of that
/// epoch confirmed the replicated (slot, txn, payload, vote). For leader-only
/// configurations the leader's PREPARE_ACK itself is the acceptance.
struct Acceptance {
  ShardId shard = 0;
  Epoch epoch = 0;
  Slot slot = 0;
  TxnId txn = 0;
  Payload payload;
  Decision vote = Decision::Abort;
  VoteOriginId origin = kNoOrigin;
  LeaderPrefix prefix;          // leader's arrays when the vote was reported
  std::uint64_t complete_seq = 0;  // when the last needed confirmation landed
};

namespace detail {

struct AcceptanceKey {
  ShardId shard;
  Epoch epoch;
  Slot slot;
  TxnId txn;
  Decision vote;
  bool operator<(const AcceptanceKey& o) const {
    return std::tie(shard, epoch, slot, txn, vote) <
           std::tie(o.shard, o.epoch, o.slot, o.txn, o.vote);
  }
};

}  // namespace detail

/// Detects every acceptance in the trace. In the message-passing model the
/// confirmations are ACCEPT_ACK sends; in the RDMA models they are NIC acks
/// for the ACCEPT writes.
inline std::vector<Acceptance> acceptances(const Trace& tr) {
  struct Working {
    std::set<ProcessId> confirmed;
    Payload payload;
    VoteOriginId origin = kNoOrigin;
    LeaderPrefix prefix;
    bool meta_known = false;
    std::uint64_t complete_seq = 0;
    bool complete = false;
  };
  std::map<detail::AcceptanceKey, Working> working;

  auto followers = [&](ShardId s, Epoch e) -> std::optional<std::set<ProcessId>> {
    const Configuration* cfg = tr.config_at(s, e);
    if (!cfg) return std::nullopt;
    std::set<ProcessId> f = cfg->members_of(s);
    f.erase(cfg->leader_of(s));
    return f;
  };

  auto note_meta = [&](Working& w, const Accept& a) {
    if (w.meta_known) return;
    w.payload = a.payload;
    w.origin = a.origin;
    w.prefix = a.leader_prefix;
    w.meta_known = true;
  };

  // Pass 1: ACCEPT metadata, ACCEPT_ACK confirmations, NIC-ack confirmations.
  for (const TraceEvent& ev : tr.events) {
    for (const EmissionRec& em : ev.emissions) {
      if (const Accept* a = em.msg.as<Accept>()) {
        detail::AcceptanceKey key{a->shard, a->epoch, a->slot, a->txn, a->vote};
        note_meta(working[key], *a);
      }
      if (const AcceptAck* ack = em.msg.as<AcceptAck>()) {
        detail::AcceptanceKey key{ack->shard, ack->epoch, ack->slot, ack->txn,
                                  ack->vote};
        Working& w = working[key];
        auto f = followers(ack->shard, ack->epoch);
        if (f && f->count(ev.actor)) {
          w.confirmed.insert(ev.actor);
          if (!w.complete && std::includes(w.confirmed.begin(),
                                           w.confirmed.end(), f->begin(),
                                           f->end())) {
            w.complete = true;
            w.complete_seq = ev.seq;
          }
        }
      }
    }
    if (ev.kind == EvKind::RdmaAck && ev.msg) {
      if (const Accept* a = ev.msg->as<Accept>()) {
        detail::AcceptanceKey key{a->shard, a->epoch, a->slot, a->txn, a->vote};
        Working& w = working[key];
        note_meta(w, *a);
        auto f = followers(a->shard, a->epoch);
        if (f && f->count(ev.src)) {
          w.confirmed.insert(ev.src);
          if (!w.complete && std::includes(w.confirmed.begin(),
                                           w.confirmed.end(), f->begin(),
                                           f->end())) {
            w.complete = true;
            w.complete_seq = ev.seq;
          }
        }
      }
    }
  }

  // Pass 2: leader-only configurations accept on the PREPARE_ACK itself.
  for (const TraceEvent& ev : tr.events) {
    for (const EmissionRec& em : ev.emissions) {
      const PrepareAck* pa = em.msg.as<PrepareAck>();
      if (!pa) continue;
      auto f = followers(pa->shard, pa->epoch);
      if (!f || !f->empty()) continue;
      detail::AcceptanceKey key{pa->shard, pa->epoch, pa->slot, pa->txn,
                                pa->vote};
      Working& w = working[key];
      if (!w.complete) {
        w.complete = true;
        w.complete_seq = ev.seq;
        w.payload = pa->payload;
        w.origin = pa->origin;
        w.prefix = pa->leader_prefix;
        w.meta_known = true;
      }
    }
  }

  std::vector<Acceptance> out;
  for (const auto& [key, w] : working) {
    if (!w.complete) continue;
    Acceptance a;
    a.shard = key.shard;
    a.epoch = key.epoch;
    a.slot = key.slot;
    a.txn = key.txn;
    a.vote = key.vote;
    a.payload = w.payload;
    a.origin = w.origin;
    a.prefix = w.prefix;
    a.complete_seq = w.complete_seq;
    out.push_back(std::move(a));
  }
  std::sort(out.begin(), out.end(),
            [](const Acceptance& a, const Acceptance& b) {
              return a.complete_seq < b.complete_seq;
            });
  return out;
}

/// History action: a certify or the first client decision of a transaction.
struct HistoryAction {
  bool is_certify = false;
  TxnId txn = 0;
  std::uint64_t seq = 0;
  Decision dec = Decision::Commit;  // decide actions
};

using History = std::vector<HistoryAction>;

/// The externally observable history: certify invocations and first client
/// decision deliveries, in trace order.
inline History build_history(const Trace& tr) {
  History h;
  std::set<TxnId> decided;
  for (const TraceEvent& ev : tr.events) {
    if (ev.kind == EvKind::Certify && ev.txn != 0) {
      h.push_back(HistoryAction{true, ev.txn, ev.seq, Decision::Commit});
    } else if (ev.kind == EvKind::ClientDecide) {
      if (decided.insert(ev.txn).second)
        h.push_back(HistoryAction{false, ev.txn, ev.seq, ev.dec});
    }
  }
  return h;
}

/// First client decision delivered per transaction.
inline std::map<TxnId, Decision> client_decisions(const Trace& tr) {
  std::map<TxnId, Decision> out;
  for (const TraceEvent& ev : tr.events)
    if (ev.kind == EvKind::ClientDecide && !out.count(ev.txn))
      out.emplace(ev.txn, ev.dec);
  return out;
}

/// First client decision *sent* per transaction; stable under traces cut off
/// before the delivery happened.
inline std::map<TxnId, Decision> sent_client_decisions(const Trace& tr) {
  std::map<TxnId, Decision> out;
  for (const TraceEvent& ev : tr.events)
    for (const EmissionRec& em : ev.emissions)
      if (const ClientDecision* d = em.msg.as<ClientDecision>())
        if (!out.count(d->txn)) out.emplace(d->txn, d->dec);
  return out;
}

}  // namespace tcs
