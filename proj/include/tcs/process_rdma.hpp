// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <algorithm>
#include <cassert>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "tcs/context.hpp"
#include "tcs/log.hpp"
#include "tcs/messages.hpp"
#include "tcs/process_mp.hpp"
#include "tcs/voting.hpp"

namespace tcs {

enum class RecStatus : std::uint8_t { Ready, Probing, Installing };

/// Local RDMA endpoint operations a transition asks the simulator to apply.
struct ChannelOp {
  enum class Kind : std::uint8_t { Open, Close } kind = Kind::Open;
  ProcessId peer = kNoProcess;
};

/// Coordinator bookkeeping in the RDMA variant: votes are persisted by
/// one-sided writes and completion is driven by NIC-level acks for the
/// ACCEPTs recorded at send time, valid only while the coordinator stays in
/// the epoch the vote was prepared at.
struct RdmaCoordShard {
  Slot slot = 0;
  Decision vote = Decision::Abort;
  std::set<ProcessId> targets;
  std::set<ProcessId> acked;
  std::map<ProcessId, std::uint64_t> ack_seq;
};

struct RdmaCoordTxn {
  ProcessId client = kNoProcess;
  std::set<ShardId> shards;
  std::map<std::pair<ShardId, Epoch>, RdmaCoordShard> votes;
  bool decided = false;
};

/// Per-process state of the RDMA protocol: a single system-wide epoch,
/// explicit connection management and whole-system reconfiguration.
struct ProcessRdma {
  ProcessId pid = kNoProcess;
  ShardId s0 = kNoShard;
  Status status = Status::Follower;
  bool initialized = false;

  Epoch epoch = 0;
  Epoch new_epoch = 0;
  std::map<ShardId, std::set<ProcessId>> members;
  std::map<ShardId, ProcessId> leader;
  std::set<ProcessId> connections;

  Log log;
  Slot next = 0;

  RecStatus rec_status = RecStatus::Ready;
  std::map<ShardId, Epoch> probed_epoch;
  std::map<ShardId, std::set<ProcessId>> probed_members;
  Epoch recon_epoch = 0;
  std::set<ProcessId> recon_exclude;
  std::map<ShardId, std::set<ProcessId>> recon_members;
  std::map<ShardId, ProcessId> recon_leaders;
  std::vector<ReceivedProbeAck> probe_acks;
  std::map<Epoch, std::set<ProcessId>> config_prepare_acks;
  CsPending cs_pending = CsPending::None;
  ShardId cs_pending_shard = kNoShard;
  std::uint32_t cs_token = 0;

  std::map<TxnId, RdmaCoordTxn> coord;
  std::map<Slot, std::uint64_t> prepared_since;
  std::uint32_t origin_counter = 0;

  ProcessId leader_of(ShardId s) const {
    auto it = leader.find(s);
    return it == leader.end() ? kNoProcess : it->second;
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
  std::set<ProcessId> all_members() const {
    std::set<ProcessId> out;
    for (const auto& [_, m] : members) out.insert(m.begin(), m.end());
    return out;
  }
};

/// Extends StepResult with endpoint open/close requests.
struct RdmaStepResult : StepResult {
  std::vector<ChannelOp> channel_ops;

  void open_conn(ProcessId peer) {
    channel_ops.push_back({ChannelOp::Kind::Open, peer});
  }
  void close_conn(ProcessId peer) {
    channel_ops.push_back({ChannelOp::Kind::Close, peer});
  }
};

namespace rdma {

inline Gate gate(const ProcessRdma& st, const Message& m) {
  if (m.is<Prepare>())
    return st.status == Status::Leader ? Gate::Handle : Gate::Park;
  if (auto* p = m.as<PrepareAck>()) {
    if (st.epoch == p->epoch) return Gate::Handle;
    return st.epoch > p->epoch ? Gate::Drop : Gate::Park;
  }
  if (auto* p = m.as<Probe>())
    return p->epoch >= st.new_epoch ? Gate::Handle : Gate::Drop;
  if (auto* p = m.as<ConfigPrepare>())
    return p->epoch >= st.new_epoch ? Gate::Handle : Gate::Drop;
  if (auto* p = m.as<NewState>())
    return p->epoch >= st.new_epoch ? Gate::Handle : Gate::Drop;
  // Handshakes complete only between processes fully installed in the same
  // epoch: opening earlier would let one-sided writes land at a process whose
  // state (or the sender's) still belongs to another configuration.
  if (auto* p = m.as<Connect>()) {
    if (p->epoch < st.new_epoch) return Gate::Drop;
    if (st.status == Status::Reconfiguring || st.epoch != st.new_epoch ||
        p->epoch != st.epoch)
      return Gate::Park;
    return Gate::Handle;
  }
  if (auto* p = m.as<ConnectAck>()) {
    if (p->epoch < st.new_epoch) return Gate::Drop;
    if (st.status == Status::Reconfiguring || st.epoch != st.new_epoch ||
        p->epoch != st.epoch)
      return Gate::Park;
    return Gate::Handle;
  }
  return Gate::Handle;
}

inline PrepareAck make_prepare_ack(const ProcessRdma& st, Slot k) {
  const LogSlot& slot = st.log.at(k);
  PrepareAck ack;
  ack.epoch = st.epoch;
  ack.shard = st.s0;
  ack.slot = k;
  ack.txn = slot.txn;
  ack.payload = slot.payload;
  ack.vote = slot.vote;
  ack.origin = slot.origin;
  ack.leader_prefix = prefix_of(st.log, k);
  return ack;
}

inline void register_coordinator(ProcessRdma& st, TxnId t,
                                 const std::set<ShardId>& shards,
                                 ProcessId client) {
  if (st.coord.count(t)) return;
  RdmaCoordTxn c;
  c.client = client;
  c.shards = shards;
  st.coord.emplace(t, std::move(c));
}

inline void certify(ProcessRdma& st, const Ctx& ctx, TxnId t, const Payload& l,
                    ProcessId client, RdmaStepResult& r) {
  std::set<ShardId> shards = shards_of(l, ctx.shard_map);
  assert(!shards.empty());
  register_coordinator(st, t, shards, client);
  for (ShardId s : shards) {
    Prepare p;
    p.txn = t;
    p.payload = project(l, s, ctx.shard_map);
    r.send(st.leader_of(s), Message{std::move(p)});
  }
}

inline void on_prepare(ProcessRdma& st, const Ctx& ctx, const Prepare& m,
                       ProcessId from, RdmaStepResult& r) {
  if (auto k = find_txn_slot(st.log, m.txn)) {
    r.send(from, Message{make_prepare_ack(st, *k)});
    return;
  }
  Slot k = prepare_transaction(st.log, st.next, st.s0, st.epoch, st.pid,
                               st.origin_counter, ctx, m.txn, m.payload, r);
  st.prepared_since[k] = ctx.now;
  r.send(from, Message{make_prepare_ack(st, k)});
}

/// The completion trigger: for every shard of the transaction, a vote
/// prepared at the coordinator's current epoch whose ACCEPT writes were all
/// NIC-acked by the followers recorded at send time.
inline void try_complete(ProcessRdma& st, const Ctx&, TxnId t,
                         StepResult& r) {
  auto it = st.coord.find(t);
  if (it == st.coord.end() || it->second.decided) return;
  RdmaCoordTxn& c = it->second;

  Decision final_dec = Decision::Commit;
  std::map<ShardId, Slot> slots;
  std::vector<std::uint64_t> ack_events;
  for (ShardId s : c.shards) {
    auto v = c.votes.find({s, st.epoch});
    if (v == c.votes.end()) return;
    const RdmaCoordShard& rec = v->second;
    for (ProcessId f : rec.targets) {
      if (!rec.acked.count(f)) return;
      ack_events.push_back(rec.ack_seq.at(f));
    }
    slots[s] = rec.slot;
    final_dec = meet(final_dec, rec.vote);
  }

  c.decided = true;
  r.parents.insert(r.parents.end(), ack_events.begin(), ack_events.end());
  r.send(c.client, Message{ClientDecision{t, final_dec}});
  for (ShardId s : c.shards) {
    ShardDecision d;
    d.epoch = st.epoch;
    d.slot = slots[s];
    d.dec = final_dec;
    d.shard = s;
    d.txn = t;
    for (ProcessId p : st.members_of(s)) r.send(p, Message{d}, Via::Rdma);
  }
}

inline void on_prepare_ack(ProcessRdma& st, const Ctx& ctx,
                           const PrepareAck& m, RdmaStepResult& r) {
  auto it = st.coord.find(m.txn);
  if (it == st.coord.end()) {
    r.note("prepare_ack for unknown coordination");
    return;
  }
  RdmaCoordShard rec;
  rec.slot = m.slot;
  rec.vote = m.vote;
  rec.targets = st.followers_of(m.shard);
  it->second.votes[{m.shard, m.epoch}] = rec;

  Accept a;
  a.epoch = m.epoch;
  a.slot = m.slot;
  a.txn = m.txn;
  a.payload = m.payload;
  a.vote = m.vote;
  a.shard = m.shard;
  a.origin = m.origin;
  a.leader_prefix = m.leader_prefix;
  for (ProcessId p : rec.targets) r.send(p, Message{a}, Via::Rdma);
  try_complete(st, ctx, m.txn, r);  // leader-only shards complete on votes
}

/// NIC acknowledgement for a one-sided ACCEPT write.
inline void on_accept_acked(ProcessRdma& st, const Ctx& ctx, const Accept& a,
                            ProcessId receiver, StepResult& r) {
  auto it = st.coord.find(a.txn);
  if (it == st.coord.end()) return;
  auto v = it->second.votes.find({a.shard, a.epoch});
  if (v == it->second.votes.end() || v->second.slot != a.slot) return;
  v->second.acked.insert(receiver);
  v->second.ack_seq[receiver] = ctx.seq;
  try_complete(st, ctx, a.txn, r);
}

/// Followers cannot reject a delivered ACCEPT; the slot is overwritten. A
/// duplicate of a record that is already decided leaves the decision in
/// place (coordinators retrying in parallel re-persist identical records).
inline void on_accept_delivered(ProcessRdma& st, const Ctx& ctx,
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

inline void on_decision_delivered(ProcessRdma& st, const Ctx&,
                                  const ShardDecision& m, StepResult&) {
  LogSlot& slot = st.log[m.slot];
  slot.dec = m.dec;
  slot.phase = Phase::Decided;
  st.prepared_since.erase(m.slot);
}

inline std::uint32_t next_token(ProcessRdma& st) { return ++st.cs_token; }

inline void reconfigure(ProcessRdma& st, const Ctx&,
                        const std::set<ProcessId>& exclude,
                        RdmaStepResult& r) {
  if (st.rec_status != RecStatus::Ready || st.cs_pending != CsPending::None) {
    r.rejected = true;
    r.note("reconfigure rejected: not ready");
    return;
  }
  st.rec_status = RecStatus::Probing;
  st.recon_exclude = exclude;
  st.recon_members.clear();
  st.recon_leaders.clear();
  st.cs_pending = CsPending::ReconfGetLast;
  CsRequest req;
  req.op = CsOpKind::GetLast;
  req.key = kGlobalKey;
  req.token = next_token(st);
  r.send(kNoProcess, Message{req});
}

inline void on_probe(ProcessRdma& st, const Ctx&, const Probe& m,
                     ProcessId from, RdmaStepResult& r) {
  st.status = Status::Reconfiguring;
  for (ProcessId p : st.connections) r.close_conn(p);
  st.connections.clear();
  st.new_epoch = m.epoch;
  r.send(from, Message{ProbeAck{st.initialized, m.epoch, st.s0}});
}

/// Per-shard membership for the next global configuration: the first
/// initialized responder of each shard leads it, joined by that shard's other
/// responders and fresh processes up to the target size.
inline bool compute_membership_global(const ProcessRdma& st, const Ctx& ctx,
                                      std::map<ShardId, std::set<ProcessId>>* members,
                                      std::map<ShardId, ProcessId>* leaders,
                                      std::vector<ProcessId>* drafted) {
  std::set<ShardId> shards;
  for (const auto& [s, _] : st.probed_epoch) shards.insert(s);
  std::size_t pool_cursor = 0;
  for (ShardId s : shards) {
    ProcessId lead = kNoProcess;
    std::set<ProcessId> m;
    for (const auto& ack : st.probe_acks) {
      if (ack.epoch != st.recon_epoch || ack.shard != s) continue;
      if (st.recon_exclude.count(ack.from)) continue;
      if (lead == kNoProcess && ack.initialized) lead = ack.from;
      if (m.size() < ctx.target_shard_size) m.insert(ack.from);
    }
    if (lead == kNoProcess) return false;
    m.insert(lead);
    while (m.size() > ctx.target_shard_size && !m.empty()) {
      // trim a non-leader responder; sets are ordered so this is stable
      for (auto mit = m.rbegin(); mit != m.rend(); ++mit)
        if (*mit != lead) {
          m.erase(*mit);
          break;
        }
    }
    while (m.size() < ctx.target_shard_size &&
           pool_cursor < ctx.fresh_pool.size()) {
      ProcessId p = ctx.fresh_pool[pool_cursor++];
      if (st.recon_exclude.count(p) || m.count(p)) continue;
      m.insert(p);
      drafted->push_back(p);
    }
    if (m.size() < ctx.target_shard_size) return false;
    (*members)[s] = m;
    (*leaders)[s] = lead;
  }
  return !shards.empty();
}

/// Probing may end once every shard produced an initialized responder; the
/// scheduler decides when to take the step.
inline bool can_end_probing(const ProcessRdma& st) {
  if (st.rec_status != RecStatus::Probing || st.cs_pending != CsPending::None)
    return false;
  if (st.probed_epoch.empty()) return false;
  for (const auto& [s, _] : st.probed_epoch) {
    bool found = false;
    for (const auto& ack : st.probe_acks)
      if (ack.initialized && ack.epoch == st.recon_epoch && ack.shard == s &&
          !st.recon_exclude.count(ack.from)) {
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

inline void end_probing(ProcessRdma& st, const Ctx& ctx, RdmaStepResult& r) {
  assert(can_end_probing(st));
  st.rec_status = RecStatus::Ready;
  std::map<ShardId, std::set<ProcessId>> members;
  std::map<ShardId, ProcessId> leaders;
  std::vector<ProcessId> drafted;
  if (!compute_membership_global(st, ctx, &members, &leaders, &drafted)) {
    r.note("reconfiguration failed: cannot form a full membership");
    return;
  }
  st.recon_members = members;
  st.recon_leaders = leaders;
  r.drafted = drafted;
  st.cs_pending = CsPending::ReconfCas;
  CsRequest req;
  req.op = CsOpKind::Cas;
  req.key = kGlobalKey;
  req.epoch = st.recon_epoch - 1;
  req.cfg.epoch = st.recon_epoch;
  req.cfg.members = members;
  req.cfg.leaders = leaders;
  req.token = next_token(st);
  r.send(kNoProcess, Message{req});
}

inline void on_probe_ack(ProcessRdma& st, const Ctx&, const ProbeAck& m,
                         ProcessId from, RdmaStepResult&) {
  st.probe_acks.push_back(
      ReceivedProbeAck{from, m.initialized, m.epoch, m.shard});
}

inline bool can_advance_probing(const ProcessRdma& st, ShardId s) {
  if (st.rec_status != RecStatus::Probing ||
      st.cs_pending != CsPending::None)
    return false;
  auto pe = st.probed_epoch.find(s);
  if (pe == st.probed_epoch.end() || pe->second <= 1) return false;
  auto pm = st.probed_members.find(s);
  if (pm == st.probed_members.end()) return false;
  bool have_false = false;
  for (const auto& ack : st.probe_acks) {
    if (ack.epoch != st.recon_epoch || ack.shard != s) continue;
    if (ack.initialized && !st.recon_exclude.count(ack.from)) return false;
    if (!ack.initialized && pm->second.count(ack.from)) have_false = true;
  }
  return have_false;
}

inline void advance_probing(ProcessRdma& st, const Ctx&, ShardId s,
                            RdmaStepResult& r) {
  assert(can_advance_probing(st, s));
  st.probed_epoch[s] -= 1;
  st.cs_pending = CsPending::ReconfGet;
  st.cs_pending_shard = s;
  CsRequest req;
  req.op = CsOpKind::Get;
  req.key = kGlobalKey;
  req.epoch = st.probed_epoch[s];
  req.token = next_token(st);
  r.send(kNoProcess, Message{req});
}

inline void on_cs_response(ProcessRdma& st, const Ctx&,
                           const CsResponse& m, RdmaStepResult& r) {
  CsPending kind = st.cs_pending;
  st.cs_pending = CsPending::None;
  switch (kind) {
    case CsPending::ReconfGetLast: {
      st.probed_epoch.clear();
      st.probed_members.clear();
      for (const auto& [s, mem] : m.cfg.members) {
        st.probed_epoch[s] = m.cfg.epoch;
        st.probed_members[s] = mem;
      }
      st.recon_epoch = m.cfg.epoch + 1;
      std::set<ProcessId> targets;
      for (const auto& [_, mem] : st.probed_members)
        targets.insert(mem.begin(), mem.end());
      for (ProcessId p : targets) r.send(p, Message{Probe{st.recon_epoch}});
      break;
    }
    case CsPending::ReconfGet: {
      assert(m.ok);
      ShardId s = st.cs_pending_shard;
      st.cs_pending_shard = kNoShard;
      st.probed_members[s] = m.cfg.members_of(s);
      for (ProcessId p : st.probed_members[s])
        r.send(p, Message{Probe{st.recon_epoch}});
      break;
    }
    case CsPending::ReconfCas: {
      if (m.ok) {
        st.rec_status = RecStatus::Installing;
        ConfigPrepare cp;
        cp.epoch = st.recon_epoch;
        cp.members = st.recon_members;
        cp.leaders = st.recon_leaders;
        std::set<ProcessId> targets;
        for (const auto& [_, mem] : st.recon_members)
          targets.insert(mem.begin(), mem.end());
        for (ProcessId p : targets) r.send(p, Message{cp});
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

inline void on_config_prepare(ProcessRdma& st, const Ctx&,
                              const ConfigPrepare& m, ProcessId from,
                              RdmaStepResult& r) {
  st.members = m.members;
  st.leader = m.leaders;
  st.new_epoch = m.epoch;
  r.send(from, Message{ConfigPrepareAck{m.epoch}});
}

inline void on_config_prepare_ack(ProcessRdma& st, const Ctx&,
                                  const ConfigPrepareAck& m, ProcessId from,
                                  RdmaStepResult& r) {
  st.config_prepare_acks[m.epoch].insert(from);
  if (st.rec_status != RecStatus::Installing || m.epoch != st.recon_epoch)
    return;
  std::set<ProcessId> expected;
  for (const auto& [_, mem] : st.recon_members)
    expected.insert(mem.begin(), mem.end());
  const auto& got = st.config_prepare_acks[m.epoch];
  for (ProcessId p : expected)
    if (!got.count(p)) return;
  st.rec_status = RecStatus::Ready;
  for (const auto& [s, lead] : st.recon_leaders)
    r.send(lead, Message{NewConfig{m.epoch, st.recon_members[s]}});
}

/// The caller (the simulator) must flush the local endpoint before invoking
/// this, so votes acked into this process's memory are reflected in the log
/// it replicates.
inline void on_new_config(ProcessRdma& st, const Ctx&, const NewConfig& m,
                          RdmaStepResult& r) {
  st.status = Status::Leader;
  st.epoch = m.epoch;
  st.new_epoch = std::max(st.new_epoch, m.epoch);
  st.leader[st.s0] = st.pid;
  st.next = max_filled_slot(st.log);
  NewState ns;
  ns.epoch = m.epoch;
  ns.shard = st.s0;
  ns.members = st.members_of(st.s0);
  ns.log = st.log;
  for (ProcessId p : st.members_of(st.s0))
    if (p != st.pid) r.send(p, Message{ns});
  for (ProcessId p : st.all_members())
    if (p != st.pid) r.send(p, Message{Connect{m.epoch}});
}

/// Flush-before semantics as for on_new_config.
inline void on_new_state(ProcessRdma& st, const Ctx& ctx, const NewState& m,
                         ProcessId, RdmaStepResult& r) {
  st.status = Status::Follower;
  st.epoch = m.epoch;
  st.new_epoch = std::max(st.new_epoch, m.epoch);
  st.initialized = true;
  st.s0 = m.shard;
  st.log = m.log;
  st.prepared_since.clear();
  for (const auto& [k, slot] : st.log)
    if (slot.phase == Phase::Prepared) st.prepared_since[k] = ctx.now;
  for (ProcessId p : st.all_members())
    if (p != st.pid && !st.members_of(m.shard).count(p))
      r.send(p, Message{Connect{m.epoch}});
}

inline void on_connect(ProcessRdma& st, const Ctx&, const Connect& m,
                       ProcessId from, RdmaStepResult& r) {
  if (st.connections.count(from)) return;
  r.open_conn(from);
  st.connections.insert(from);
  r.send(from, Message{ConnectAck{m.epoch}});
}

inline void on_connect_ack(ProcessRdma& st, const Ctx&,
                           const ConnectAck&, ProcessId from,
                           RdmaStepResult& r) {
  if (st.connections.count(from)) return;
  r.open_conn(from);
  st.connections.insert(from);
}

inline void retry(ProcessRdma& st, const Ctx& ctx, Slot k, RdmaStepResult& r) {
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
  register_coordinator(st, t, info->shards, info->client);
  for (ShardId s : info->shards)
    r.send(st.leader_of(s), Message{Prepare{t, std::nullopt}});
}

/// Reliable-FIFO message dispatch (RDMA-borne ACCEPT/DECISION arrive through
/// on_accept_delivered / on_decision_delivered instead).
inline void handle(ProcessRdma& st, const Ctx& ctx, const Message& m,
                   ProcessId from, RdmaStepResult& r) {
  if (auto* p = m.as<Prepare>()) return on_prepare(st, ctx, *p, from, r);
  if (auto* p = m.as<PrepareAck>()) return on_prepare_ack(st, ctx, *p, r);
  if (auto* p = m.as<Probe>()) return on_probe(st, ctx, *p, from, r);
  if (auto* p = m.as<ProbeAck>()) return on_probe_ack(st, ctx, *p, from, r);
  if (auto* p = m.as<ConfigPrepare>())
    return on_config_prepare(st, ctx, *p, from, r);
  if (auto* p = m.as<ConfigPrepareAck>())
    return on_config_prepare_ack(st, ctx, *p, from, r);
  if (auto* p = m.as<NewConfig>()) return on_new_config(st, ctx, *p, r);
  if (auto* p = m.as<NewState>()) return on_new_state(st, ctx, *p, from, r);
  if (auto* p = m.as<Connect>()) return on_connect(st, ctx, *p, from, r);
  if (auto* p = m.as<ConnectAck>()) return on_connect_ack(st, ctx, *p, from, r);
  if (auto* p = m.as<CsResponse>()) return on_cs_response(st, ctx, *p, r);
  r.note("unhandled message kind");
}

}  // namespace rdma
}  // namespace tcs
