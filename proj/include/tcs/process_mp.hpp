// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <algorithm>
#include <cassert>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "tcs/context.hpp"
#include "tcs/log.hpp"
#include "tcs/messages.hpp"
#include "tcs/payload.hpp"
#include "tcs/voting.hpp"

namespace tcs {

/// Coordinator-side bookkeeping for one transaction. Votes are anchored on
/// PREPARE_ACKs; accept-acks are retained even when stale and only counted
/// against the coordinator's current epoch view when the completion trigger
/// is evaluated.
struct CoordTxn {
  ProcessId client = kNoProcess;
  std::set<ShardId> shards;
  // (shard, epoch) -> (slot, vote)
  std::map<std::pair<ShardId, Epoch>, std::pair<Slot, Decision>> votes;
  // (shard, epoch, slot, follower) -> (vote, trace event of the ack)
  std::map<std::tuple<ShardId, Epoch, Slot, ProcessId>,
           std::pair<Decision, std::uint64_t>>
      acks;
  bool decided = false;
};

struct ReceivedProbeAck {
  ProcessId from = kNoProcess;
  bool initialized = false;
  Epoch epoch = 0;
  ShardId shard = 0;
};

/// What a pending configuration-service round trip is for.
enum class CsPending : std::uint8_t { None, ReconfGetLast, ReconfGet, ReconfCas };

/// Per-process state of the message-passing commit protocol (one instance per
/// replica). Transitions are pure: the simulator owns stepping and delivery.
struct ProcessMp {
  ProcessId pid = kNoProcess;
  ShardId s0 = kNoShard;
  Status status = Status::Follower;
  bool initialized = false;

  std::map<ShardId, Epoch> epoch;
  std::map<ShardId, std::set<ProcessId>> members;
  std::map<ShardId, ProcessId> leader;

  Log log;
  Slot next = 0;
  Epoch new_epoch = 0;

  // reconfiguration
  bool probing = false;
  Epoch probed_epoch = 0;
  std::set<ProcessId> probed_members;
  Epoch recon_epoch = 0;
  ShardId recon_shard = kNoShard;
  std::set<ProcessId> recon_exclude;
  std::set<ProcessId> recon_members;
  ProcessId recon_leader = kNoProcess;
  std::vector<ReceivedProbeAck> probe_acks;
  CsPending cs_pending = CsPending::None;
  std::uint32_t cs_token = 0;

  std::map<TxnId, CoordTxn> coord;

  // local bookkeeping for retry policies; not part of transferred state
  std::map<Slot, std::uint64_t> prepared_since;

  // vote-origin instrumentation
  std::uint32_t origin_counter = 0;

  Epoch my_epoch() const {
    auto it = epoch.find(s0);
    return it == epoch.end() ? 0 : it->second;
  }
  ProcessId leader_of(ShardId s) const {
    auto it = leader.find(s);
    return it == leader.end() ? kNoProcess : it->second;
  }
  Epoch epoch_of(ShardId s) const {
    auto it = epoch.find(s);
    return it == epoch.end() ? 0 : it->second;
  }
  const std::set<ProcessId>& members_of(ShardId s) const {
    static const std::set<ProcessId> kEmpty;
    auto it = members.find(s);
    return it == members.end() ? kEmpty : it->second;
  }
  std::set<ProcessId> followers_of(ShardId s) const {
    std::set<ProcessId> f = members_of(s);
    f.erase(leader_of(s));
    return f;
  }
};

namespace mp {

/// Guarded-delivery classification. Guards over monotone variables that can
/// never re-enable drop the message; the rest park until a state change.
inline Gate gate(const ProcessMp& st, const Message& m) {
  if (auto* p = m.as<Prepare>()) {
    (void)p;
    return st.status == Status::Leader ? Gate::Handle : Gate::Park;
  }
  if (auto* p = m.as<PrepareAck>()) {
    Epoch e = st.epoch_of(p->shard);
    if (e == p->epoch) return Gate::Handle;
    return e > p->epoch ? Gate::Drop : Gate::Park;
  }
  if (auto* p = m.as<Accept>()) {
    Epoch e = st.my_epoch();
    if (e > p->epoch) return Gate::Drop;
    return (st.status == Status::Follower && e == p->epoch) ? Gate::Handle
                                                            : Gate::Park;
  }
  if (auto* p = m.as<ShardDecision>()) {
    return (st.status != Status::Reconfiguring && st.my_epoch() >= p->epoch)
               ? Gate::Handle
               : Gate::Park;
  }
  if (auto* p = m.as<Probe>())
    return p->epoch >= st.new_epoch ? Gate::Handle : Gate::Drop;
  if (auto* p = m.as<NewState>())
    return p->epoch >= st.new_epoch ? Gate::Handle : Gate::Drop;
  if (auto* p = m.as<ConfigChange>()) {
    return (p->shard != st.s0 && st.epoch_of(p->shard) < p->epoch)
               ? Gate::Handle
               : Gate::Drop;
  }
  // AcceptAck, ProbeAck, NewConfig, CsResponse: recorded or unguarded.
  return Gate::Handle;
}

inline PrepareAck make_prepare_ack(const ProcessMp& st, Slot k) {
  const LogSlot& slot = st.log.at(k);
  PrepareAck ack;
  ack.epoch = st.my_epoch();
  ack.shard = st.s0;
  ack.slot = k;
  ack.txn = slot.txn;
  ack.payload = slot.payload;
  ack.vote = slot.vote;
  ack.origin = slot.origin;
  ack.leader_prefix = prefix_of(st.log, k);
  return ack;
}

inline void on_prepare(ProcessMp& st, const Ctx& ctx, const Prepare& m,
                       ProcessId from, StepResult& r) {
  if (auto k = find_txn_slot(st.log, m.txn)) {
    r.send(from, Message{make_prepare_ack(st, *k)});
    return;
  }
  Slot k = prepare_transaction(st.log, st.next, st.s0, st.my_epoch(), st.pid,
                               st.origin_counter, ctx, m.txn, m.payload, r);
  st.prepared_since[k] = ctx.now;
  r.send(from, Message{make_prepare_ack(st, k)});
}

/// Evaluates the completion trigger for one registered transaction against
/// the coordinator's current configuration view; fires at most once.
inline void try_complete(ProcessMp& st, const Ctx&, TxnId t,
                         StepResult& r) {
  auto it = st.coord.find(t);
  if (it == st.coord.end() || it->second.decided) return;
  CoordTxn& c = it->second;

  Decision final_dec = Decision::Commit;
  std::map<ShardId, Slot> slots;
  std::vector<std::uint64_t> ack_events;
  for (ShardId s : c.shards) {
    Epoch e = st.epoch_of(s);
    auto v = c.votes.find({s, e});
    if (v == c.votes.end()) return;
    auto [k, d] = v->second;
    for (ProcessId f : st.followers_of(s)) {
      auto a = c.acks.find({s, e, k, f});
      if (a == c.acks.end()) return;
      ack_events.push_back(a->second.second);
    }
    slots[s] = k;
    final_dec = meet(final_dec, d);
  }

  c.decided = true;
  r.parents.insert(r.parents.end(), ack_events.begin(), ack_events.end());
  r.send(c.client, Message{ClientDecision{t, final_dec}});
  for (ShardId s : c.shards) {
    ShardDecision d;
    d.epoch = st.epoch_of(s);
    d.slot = slots[s];
    d.dec = final_dec;
    d.shard = s;
    d.txn = t;
    for (ProcessId p : st.members_of(s)) r.send(p, Message{d});
  }
}

inline void register_coordinator(ProcessMp& st, const Ctx&, TxnId t,
                                 const std::set<ShardId>& shards,
                                 ProcessId client) {
  if (st.coord.count(t)) return;
  CoordTxn c;
  c.client = client;
  c.shards = shards;
  st.coord.emplace(t, std::move(c));
}

/// Client entry point: the process this runs at becomes the transaction's
/// coordinator and sends each shard leader its slice of the payload.
inline void certify(ProcessMp& st, const Ctx& ctx, TxnId t, const Payload& l,
                    ProcessId client, StepResult& r) {
  std::set<ShardId> shards = shards_of(l, ctx.shard_map);
  assert(!shards.empty());
  register_coordinator(st, ctx, t, shards, client);
  for (ShardId s : shards) {
    Prepare p;
    p.txn = t;
    p.payload = project(l, s, ctx.shard_map);
    r.send(st.leader_of(s), Message{std::move(p)});
  }
}

inline void on_prepare_ack(ProcessMp& st, const Ctx& ctx, const PrepareAck& m,
                           StepResult& r) {
  auto it = st.coord.find(m.txn);
  if (it == st.coord.end()) {
    r.note("prepare_ack for unknown coordination");
    return;
  }
  it->second.votes[{m.shard, m.epoch}] = {m.slot, m.vote};
  Accept a;
  a.epoch = m.epoch;
  a.slot = m.slot;
  a.txn = m.txn;
  a.payload = m.payload;
  a.vote = m.vote;
  a.shard = m.shard;
  a.origin = m.origin;
  a.leader_prefix = m.leader_prefix;
  for (ProcessId p : st.followers_of(m.shard)) r.send(p, Message{a});
  try_complete(st, ctx, m.txn, r);
}

inline void on_accept(ProcessMp& st, const Ctx& ctx, const Accept& m,
                      ProcessId from, StepResult& r) {
  if (phase_at(st.log, m.slot) == Phase::Start) {
    LogSlot slot;
    slot.txn = m.txn;
    slot.payload = m.payload;
    slot.vote = m.vote;
    slot.phase = Phase::Prepared;
    slot.origin = m.origin;
    st.log[m.slot] = slot;
    st.prepared_since[m.slot] = ctx.now;
  }
  r.send(from, Message{AcceptAck{st.s0, m.epoch, m.slot, m.txn, m.vote}});
}

inline void on_accept_ack(ProcessMp& st, const Ctx& ctx, const AcceptAck& m,
                          ProcessId from, StepResult& r) {
  auto it = st.coord.find(m.txn);
  if (it == st.coord.end()) return;
  it->second.acks[{m.shard, m.epoch, m.slot, from}] = {m.vote, ctx.seq};
  try_complete(st, ctx, m.txn, r);
}

inline void on_decision(ProcessMp& st, const Ctx&, const ShardDecision& m,
                        StepResult&) {
  LogSlot& slot = st.log[m.slot];  // creates a bare slot on a hole
  slot.dec = m.dec;
  slot.phase = Phase::Decided;
  st.prepared_since.erase(m.slot);
}

inline std::uint32_t next_token(ProcessMp& st) { return ++st.cs_token; }

inline void reconfigure(ProcessMp& st, const Ctx&, ShardId s,
                        const std::set<ProcessId>& exclude, StepResult& r) {
  if (st.probing) {
    r.rejected = true;
    r.note("reconfigure rejected: probing already in progress");
    return;
  }
  st.probing = true;
  st.recon_shard = s;
  st.recon_exclude = exclude;
  st.recon_members.clear();
  st.recon_leader = kNoProcess;
  st.cs_pending = CsPending::ReconfGetLast;
  CsRequest req;
  req.op = CsOpKind::GetLast;
  req.key = s;
  req.token = next_token(st);
  r.send(kNoProcess, Message{req});  // engine routes kNoProcess to the CS
}

/// New membership: the new leader plus probe responders, topped up with
/// fresh processes to the target size. Fails explicitly when the pool runs
/// dry rather than installing an undersized shard.
inline std::optional<std::set<ProcessId>> compute_membership(
    const ProcessMp& st, const Ctx& ctx, ProcessId new_leader,
    std::vector<ProcessId>* drafted) {
  std::set<ProcessId> m{new_leader};
  for (const auto& ack : st.probe_acks) {
    if (ack.epoch != st.recon_epoch || ack.shard != st.recon_shard) continue;
    if (st.recon_exclude.count(ack.from)) continue;
    if (m.size() >= ctx.target_shard_size) break;
    m.insert(ack.from);
  }
  for (ProcessId p : ctx.fresh_pool) {
    if (m.size() >= ctx.target_shard_size) break;
    if (st.recon_exclude.count(p) || m.count(p)) continue;
    m.insert(p);
    drafted->push_back(p);
  }
  if (m.size() < ctx.target_shard_size) return std::nullopt;
  return m;
}

inline void end_probing_success(ProcessMp& st, const Ctx& ctx,
                                ProcessId new_leader, StepResult& r) {
  st.probing = false;
  st.recon_leader = new_leader;
  std::vector<ProcessId> drafted;
  auto m = compute_membership(st, ctx, new_leader, &drafted);
  if (!m) {
    r.note("reconfiguration failed: fresh-process pool exhausted");
    st.cs_pending = CsPending::None;
    return;
  }
  st.recon_members = *m;
  r.drafted = drafted;
  st.cs_pending = CsPending::ReconfCas;
  CsRequest req;
  req.op = CsOpKind::Cas;
  req.key = st.recon_shard;
  req.epoch = st.recon_epoch - 1;
  req.cfg.epoch = st.recon_epoch;
  req.cfg.members[st.recon_shard] = st.recon_members;
  req.cfg.leaders[st.recon_shard] = new_leader;
  req.token = next_token(st);
  r.send(kNoProcess, Message{req});
}

inline void on_probe(ProcessMp& st, const Ctx&, const Probe& m,
                     ProcessId from, StepResult& r) {
  st.status = Status::Reconfiguring;
  st.new_epoch = m.epoch;
  r.send(from, Message{ProbeAck{st.initialized, m.epoch, st.s0}});
}

inline void on_probe_ack(ProcessMp& st, const Ctx&, const ProbeAck& m,
                         ProcessId from, StepResult&) {
  st.probe_acks.push_back(
      ReceivedProbeAck{from, m.initialized, m.epoch, m.shard});
}

/// First initialized responder for the current probing attempt, or
/// kNoProcess. Probing may end whenever this is defined; the scheduler picks
/// the moment, which lets further responders be heard first.
inline ProcessId eligible_new_leader(const ProcessMp& st) {
  if (!st.probing || st.cs_pending != CsPending::None) return kNoProcess;
  for (const auto& ack : st.probe_acks)
    if (ack.initialized && ack.epoch == st.recon_epoch &&
        ack.shard == st.recon_shard && !st.recon_exclude.count(ack.from))
      return ack.from;
  return kNoProcess;
}

inline bool can_end_probing(const ProcessMp& st) {
  return eligible_new_leader(st) != kNoProcess;
}

inline void end_probing(ProcessMp& st, const Ctx& ctx, StepResult& r) {
  ProcessId leader = eligible_new_leader(st);
  assert(leader != kNoProcess);
  end_probing_success(st, ctx, leader, r);
}

/// True when the non-deterministic probing descent of the reconfiguration
/// procedure is enabled; the scheduler decides whether to take it.
inline bool can_advance_probing(const ProcessMp& st) {
  if (!st.probing || st.cs_pending != CsPending::None || st.probed_epoch <= 1)
    return false;
  bool have_false = false;
  for (const auto& ack : st.probe_acks) {
    if (ack.epoch != st.recon_epoch || ack.shard != st.recon_shard) continue;
    if (ack.initialized && !st.recon_exclude.count(ack.from)) return false;
    if (!ack.initialized && st.probed_members.count(ack.from)) have_false = true;
  }
  return have_false;
}

inline void advance_probing(ProcessMp& st, const Ctx&, StepResult& r) {
  assert(can_advance_probing(st));
  st.probed_epoch -= 1;
  st.cs_pending = CsPending::ReconfGet;
  CsRequest req;
  req.op = CsOpKind::Get;
  req.key = st.recon_shard;
  req.epoch = st.probed_epoch;
  req.token = next_token(st);
  r.send(kNoProcess, Message{req});
}

inline void on_cs_response(ProcessMp& st, const Ctx&, const CsResponse& m,
                           StepResult& r) {
  CsPending kind = st.cs_pending;
  st.cs_pending = CsPending::None;
  switch (kind) {
    case CsPending::ReconfGetLast: {
      st.probed_epoch = m.cfg.epoch;
      st.probed_members = m.cfg.members_of(st.recon_shard);
      st.recon_epoch = st.probed_epoch + 1;
      for (ProcessId p : st.probed_members)
        r.send(p, Message{Probe{st.recon_epoch}});
      break;
    }
    case CsPending::ReconfGet: {
      assert(m.ok);
      st.probed_members = m.cfg.members_of(st.recon_shard);
      for (ProcessId p : st.probed_members)
        r.send(p, Message{Probe{st.recon_epoch}});
      break;
    }
    case CsPending::ReconfCas: {
      if (m.ok) {
        r.send(st.recon_leader,
               Message{NewConfig{st.recon_epoch, st.recon_members}});
      } else {
        r.note("reconfiguration abandoned: compare_and_swap lost");
      }
      break;
    }
    case CsPending::None:
      r.note("unexpected cs response");
      break;
  }
}

inline void on_new_config(ProcessMp& st, const Ctx&, const NewConfig& m,
                          ProcessId, StepResult& r) {
  st.status = Status::Leader;
  st.epoch[st.s0] = m.epoch;
  st.members[st.s0] = m.members;
  st.leader[st.s0] = st.pid;
  st.new_epoch = std::max(st.new_epoch, m.epoch);
  st.next = max_filled_slot(st.log);
  NewState ns;
  ns.epoch = m.epoch;
  ns.shard = st.s0;
  ns.members = m.members;
  ns.log = st.log;
  for (ProcessId p : m.members)
    if (p != st.pid) r.send(p, Message{ns});
}

inline void on_new_state(ProcessMp& st, const Ctx& ctx, const NewState& m,
                         ProcessId from, StepResult&) {
  st.initialized = true;
  st.status = Status::Follower;
  st.s0 = m.shard;
  st.epoch[m.shard] = m.epoch;
  st.members[m.shard] = m.members;
  st.leader[m.shard] = from;
  st.new_epoch = std::max(st.new_epoch, m.epoch);
  st.log = m.log;
  st.prepared_since.clear();
  for (const auto& [k, slot] : st.log)
    if (slot.phase == Phase::Prepared) st.prepared_since[k] = ctx.now;
}

inline void on_config_change(ProcessMp& st, const Ctx& ctx,
                             const ConfigChange& m, StepResult& r) {
  st.epoch[m.shard] = m.epoch;
  st.members[m.shard] = m.members;
  st.leader[m.shard] = m.leader;
  for (auto& [t, c] : st.coord)
    if (!c.decided) try_complete(st, ctx, t, r);
}

inline void retry(ProcessMp& st, const Ctx& ctx, Slot k, StepResult& r) {
  auto it = st.log.find(k);
  if (it == st.log.end() || it->second.phase != Phase::Prepared) {
    r.rejected = true;
    r.note("retry rejected: slot not in prepared phase");
    return;
  }
  TxnId t = it->second.txn;
  const TxnInfo* info = ctx.txn_info(t);
  if (!info) {
    r.rejected = true;
    r.note("retry rejected: unknown transaction");
    return;
  }
  register_coordinator(st, ctx, t, info->shards, info->client);
  for (ShardId s : info->shards)
    r.send(st.leader_of(s), Message{Prepare{t, std::nullopt}});
}

// The naive-rdma variant grafts one-sided ACCEPT/DECISION persistence onto
// the per-shard protocol without the global reconfiguration handshake. It
// exists to give the checkers a known-broken target: stale coordinators can
// persist votes at processes that already moved to a newer epoch.

inline void on_accept_delivered_naive(ProcessMp& st, const Ctx& ctx,
                                      const Accept& m, StepResult&) {
  auto it = st.log.find(m.slot);
  if (it != st.log.end() && it->second.phase == Phase::Decided &&
      it->second.txn == m.txn && it->second.payload == m.payload &&
      it->second.vote == m.vote)
    return;
  LogSlot slot;
  slot.txn = m.txn;
  slot.payload = m.payload;
  slot.vote = m.vote;
  slot.phase = Phase::Prepared;
  slot.origin = m.origin;
  st.log[m.slot] = slot;
  st.prepared_since[m.slot] = ctx.now;
}

inline void on_accept_acked_naive(ProcessMp& st, const Ctx& ctx,
                                  const Accept& a, ProcessId receiver,
                                  StepResult& r) {
  auto it = st.coord.find(a.txn);
  if (it == st.coord.end()) return;
  it->second.acks[{a.shard, a.epoch, a.slot, receiver}] = {a.vote, ctx.seq};
  try_complete(st, ctx, a.txn, r);
}

inline void on_decision_delivered_naive(ProcessMp& st, const Ctx& ctx,
                                        const ShardDecision& m,
                                        StepResult& r) {
  on_decision(st, ctx, m, r);
}

/// Message dispatch; callers must have consulted gate() first.
inline void handle(ProcessMp& st, const Ctx& ctx, const Message& m,
                   ProcessId from, StepResult& r) {
  if (auto* p = m.as<Prepare>()) return on_prepare(st, ctx, *p, from, r);
  if (auto* p = m.as<PrepareAck>()) return on_prepare_ack(st, ctx, *p, r);
  if (auto* p = m.as<Accept>()) return on_accept(st, ctx, *p, from, r);
  if (auto* p = m.as<AcceptAck>()) return on_accept_ack(st, ctx, *p, from, r);
  if (auto* p = m.as<ShardDecision>()) return on_decision(st, ctx, *p, r);
  if (auto* p = m.as<Probe>()) return on_probe(st, ctx, *p, from, r);
  if (auto* p = m.as<ProbeAck>()) return on_probe_ack(st, ctx, *p, from, r);
  if (auto* p = m.as<NewConfig>()) return on_new_config(st, ctx, *p, from, r);
  if (auto* p = m.as<NewState>()) return on_new_state(st, ctx, *p, from, r);
  if (auto* p = m.as<ConfigChange>()) return on_config_change(st, ctx, *p, r);
  if (auto* p = m.as<CsResponse>()) return on_cs_response(st, ctx, *p, r);
  r.note("unhandled message kind");
}

}  // namespace mp
}  // namespace tcs
