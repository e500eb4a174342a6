// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <algorithm>
#include <cassert>
#include <deque>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tcs/certification.hpp"
#include "tcs/config_service.hpp"
#include "tcs/context.hpp"
#include "tcs/process_mp.hpp"
#include "tcs/process_rdma.hpp"
#include "tcs/rdma_channel.hpp"
#include "tcs/sim/scenario.hpp"
#include "tcs/sim/trace.hpp"

namespace tcs {

/// Single-threaded deterministic discrete-event engine. Each step delivers
/// exactly one enabled event chosen by the seeded scheduler; identical
/// (scenario, seed) pairs produce byte-identical traces. Messages between
/// live processes are delivered eventually: every fourth step the oldest
/// enabled event is taken, so nothing starves under random scheduling.
class Engine {
 public:
  explicit Engine(Scenario sc)
      : sc_(std::move(sc)),
        cfg_(sc_.config),
        channel_(cfg_.rdma_capacity),
        certifier_(ShardMap{cfg_.shards}),
        sched_rng_(cfg_.seed),
        work_rng_(cfg_.seed ^ 0x9e3779b97f4a7c15ull) {
    bootstrap();
    plan_workload();
    directives_ = sc_.directives;
    std::stable_sort(directives_.begin(), directives_.end(),
                     [](const Directive& a, const Directive& b) {
                       return a.at_step < b.at_step;
                     });
  }

  Trace run() {
    while (step_ < cfg_.max_steps) {
      step_ += 1;
      run_due_directives();
      auto cands = enumerate();
      if (cands.empty()) {
        if (next_directive_ >= directives_.size() && !has_unripe_work() &&
            !pending_auto_retry_exists())
          break;      // quiescent
        continue;     // idle tick until the next directive or cooldown
      }
      execute(pick(cands));
    }
    finish();
    return std::move(trace_);
  }

 private:
  // ---- candidates ------------------------------------------------------

  struct Cand {
    enum class Type : std::uint8_t {
      Fifo,
      Ack,
      Pull,
      Advance,
      EndProbe,
      AutoRetry,
    };
    Type type = Type::Fifo;
    ProcessId a = kNoProcess;  // Fifo: src; Ack: buffer owner; else pid
    ProcessId b = kNoProcess;  // Fifo: dst; Ack: sender awaiting the ack
    ShardId shard = kNoShard;  // Advance (rdma): shard being descended
    Slot slot = 0;             // AutoRetry
    std::uint64_t age = 0;     // enqueue step of the underlying event
  };

  struct InFlight {
    Message msg;
    std::uint64_t enq_step = 0;
    std::uint64_t ready_step = 0;
    std::uint64_t cause = 0;
  };

  struct AckEvent {
    std::uint64_t entry_id = 0;
    ProcessId sender = kNoProcess;
    ProcessId owner = kNoProcess;
    Message msg;
    std::uint64_t enq_step = 0;
    std::uint64_t cause = 0;
  };

  struct Parked {
    ProcessId src = kNoProcess;
    Message msg;
    std::uint64_t cause = 0;
  };

  struct Hold {
    std::uint32_t id = 0;
    ProcessId src = kNoProcess;
    ProcessId dst = kNoProcess;
    std::string kind;
  };

  bool held(ProcessId src, ProcessId dst, const Message& m) const {
    for (const auto& h : holds_) {
      if (h.src != kNoProcess && h.src != src) continue;
      if (h.dst != kNoProcess && h.dst != dst) continue;
      if (!h.kind.empty() && h.kind != kind_name(m)) continue;
      return true;
    }
    return false;
  }

  std::vector<Cand> enumerate() {
    std::vector<Cand> out;
    for (auto& [key, q] : chan_) {
      if (q.empty()) continue;
      const InFlight& head = q.front();
      if (head.ready_step > step_) continue;
      if (held(key.first, key.second, head.msg)) continue;
      out.push_back({Cand::Type::Fifo, key.first, key.second, kNoShard, 0,
                     head.enq_step});
    }
    for (auto& [key, q] : acks_) {
      if (q.empty()) continue;
      out.push_back({Cand::Type::Ack, key.first, key.second, kNoShard, 0,
                     q.front().enq_step});
    }
    if (cfg_.model != Model::Mp) {
      for (const auto& [pid, since] : deliverable_since_) {
        if (dead_.count(pid)) continue;
        out.push_back({Cand::Type::Pull, pid, kNoProcess, kNoShard, 0, since});
      }
    }
    if (cfg_.model == Model::Rdma) {
      for (const auto& [pid, st] : rdma_) {
        if (dead_.count(pid)) continue;
        for (const auto& [s, _] : st.probed_epoch)
          if (rdma::can_advance_probing(st, s))
            out.push_back({Cand::Type::Advance, pid, kNoProcess, s, 0, step_});
        if (rdma::can_end_probing(st))
          out.push_back(
              {Cand::Type::EndProbe, pid, kNoProcess, kNoShard, 0, step_});
      }
    } else {
      for (const auto& [pid, st] : mp_) {
        if (dead_.count(pid)) continue;
        if (mp::can_advance_probing(st))
          out.push_back(
              {Cand::Type::Advance, pid, kNoProcess, kNoShard, 0, step_});
        if (mp::can_end_probing(st))
          out.push_back(
              {Cand::Type::EndProbe, pid, kNoProcess, kNoShard, 0, step_});
      }
    }
    if (cfg_.retry_after > 0) {
      auto scan = [&](ProcessId pid, const std::map<Slot, std::uint64_t>& ps) {
        if (!retry_policy_applies(pid)) return;
        for (const auto& [k, since] : ps) {
          if (step_ - since < cfg_.retry_after) continue;
          auto lr = last_retry_.find({pid, k});
          if (lr != last_retry_.end() && step_ - lr->second < cfg_.retry_after)
            continue;
          out.push_back({Cand::Type::AutoRetry, pid, kNoProcess, kNoShard, k,
                         step_});
        }
      };
      if (cfg_.model == Model::Rdma) {
        for (const auto& [pid, st] : rdma_) scan(pid, st.prepared_since);
      } else {
        for (const auto& [pid, st] : mp_) scan(pid, st.prepared_since);
      }
    }
    return out;
  }

  /// Messages enqueued with extra latency that are not yet deliverable.
  bool has_unripe_work() const {
    for (const auto& [key, q] : chan_) {
      if (q.empty()) continue;
      if (held(key.first, key.second, q.front().msg)) continue;
      if (q.front().ready_step > step_) return true;
    }
    return false;
  }

  /// The retry policy fires only at live members of the current
  /// configuration that are done reconfiguring; a replica expelled from the
  /// system keeps its undecided slots but no longer drives recovery.
  bool retry_policy_applies(ProcessId pid) const {
    if (dead_.count(pid)) return false;
    if (cfg_.model == Model::Rdma) {
      const ProcessRdma& st = rdma_.at(pid);
      if (st.status == Status::Reconfiguring) return false;
      return cs_.get_last(kGlobalKey).all_members().count(pid) > 0;
    }
    const ProcessMp& st = mp_.at(pid);
    if (st.status == Status::Reconfiguring) return false;
    if (st.s0 == kNoShard || !cs_.has(st.s0)) return false;
    return cs_.get_last(st.s0).members_of(st.s0).count(pid) > 0;
  }

  bool pending_auto_retry_exists() {
    if (cfg_.retry_after == 0) return false;
    auto scan = [&](ProcessId pid, const std::map<Slot, std::uint64_t>& ps) {
      return !ps.empty() && retry_policy_applies(pid);
    };
    if (cfg_.model == Model::Rdma) {
      for (const auto& [pid, st] : rdma_)
        if (scan(pid, st.prepared_since)) return true;
    } else {
      for (const auto& [pid, st] : mp_)
        if (scan(pid, st.prepared_since)) return true;
    }
    return false;
  }

  const Cand& pick(const std::vector<Cand>& cands) {
    if (cfg_.fifo_scheduler || step_ % 4 == 0) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < cands.size(); ++i)
        if (cands[i].age < cands[best].age) best = i;
      return cands[best];
    }
    std::uniform_int_distribution<std::size_t> d(0, cands.size() - 1);
    return cands[d(sched_rng_)];
  }

  // ---- bootstrap & workload --------------------------------------------

  void bootstrap() {
    trace_.model = cfg_.model;
    trace_.shard_count = cfg_.shards;
    trace_.replicas_per_shard = cfg_.replicas_per_shard;
    trace_.seed = cfg_.seed;
    trace_.scenario_name = sc_.name;

    std::map<ShardId, std::set<ProcessId>> members;
    std::map<ShardId, ProcessId> leaders;
    for (ShardId s = 0; s < cfg_.shards; ++s) {
      for (std::uint32_t i = 0; i < cfg_.replicas_per_shard; ++i)
        members[s].insert(cfg_.initial_leader(s) + i);
      leaders[s] = cfg_.initial_leader(s);
    }

    if (cfg_.model == Model::Rdma) {
      Configuration c;
      c.epoch = 1;
      c.members = members;
      c.leaders = leaders;
      cs_.compare_and_swap(kGlobalKey, 0, c);
      trace_.introductions.push_back({kGlobalKey, c, 0});
    } else {
      for (ShardId s = 0; s < cfg_.shards; ++s) {
        Configuration c;
        c.epoch = 1;
        c.members[s] = members[s];
        c.leaders[s] = leaders[s];
        cs_.compare_and_swap(s, 0, c);
        trace_.introductions.push_back({s, c, 0});
      }
    }

    ProcessId n = cfg_.pool_first() + cfg_.pool_size;
    for (ProcessId p = 0; p < n; ++p) {
      bool is_replica = cfg_.is_replica(p);
      ShardId home = cfg_.home_shard(p);
      if (cfg_.model == Model::Rdma) {
        ProcessRdma st;
        st.pid = p;
        st.s0 = home;
        st.members = members;
        st.leader = leaders;
        if (is_replica) {
          st.status = p == leaders[home] ? Status::Leader : Status::Follower;
          st.initialized = true;
          st.epoch = 1;
          st.new_epoch = 1;
          std::set<ProcessId> all;
          for (const auto& [_, m] : members) all.insert(m.begin(), m.end());
          if (st.status == Status::Leader) {
            for (ProcessId q : all)
              if (q != p) st.connections.insert(q);
          } else {
            st.connections.insert(leaders[home]);
            for (ProcessId q : all)
              if (q != p && !members[home].count(q)) st.connections.insert(q);
          }
        }
        rdma_.emplace(p, std::move(st));
      } else {
        ProcessMp st;
        st.pid = p;
        st.s0 = home;
        // everyone, including the standby pool, starts with the bootstrap
        // view of all shards; only replicas are initialized
        for (ShardId s = 0; s < cfg_.shards; ++s) {
          st.epoch[s] = 1;
          st.members[s] = members[s];
          st.leader[s] = leaders[s];
        }
        if (is_replica) {
          st.status = p == leaders[home] ? Status::Leader : Status::Follower;
          st.initialized = true;
          st.new_epoch = 1;
        }
        mp_.emplace(p, std::move(st));
      }
      channel_.open(p, p);
    }
    if (cfg_.model != Model::Mp) {
      // connection state drives buffer access control
      auto open_from_connections = [&](ProcessId owner,
                                       const std::set<ProcessId>& conns) {
        for (ProcessId peer : conns) channel_.open(owner, peer);
      };
      if (cfg_.model == Model::Rdma) {
        for (const auto& [p, st] : rdma_)
          open_from_connections(p, st.connections);
      } else {
        // naive-rdma never manages connections: every pair stays open
        for (ProcessId a = 0; a < n; ++a)
          for (ProcessId b = 0; b < n; ++b) channel_.open(a, b);
      }
    }
    for (ProcessId p = 0; p < n; ++p) {
      TraceEvent ev;
      ev.seq = ++seq_counter_;
      ev.step = 0;
      ev.kind = EvKind::Init;
      ev.actor = p;
      ev.snap = snapshot(p);
      trace_.events.push_back(std::move(ev));
    }
  }

  void plan_workload() {
    if (sc_.workload_txns == 0) return;
    std::vector<ObjectId> prev;
    for (std::uint32_t i = 0; i < sc_.workload_txns; ++i) {
      Directive d;
      d.kind = Directive::Kind::Certify;
      d.at_step = 5 + i * 25 + work_rng_() % 10;
      TxnPlan& plan = d.plan;
      plan.txn = 1000 + i;
      std::uint32_t nobj = 1 + work_rng_() % 3;
      std::vector<ObjectId> objs;
      if (!prev.empty() &&
          std::uniform_real_distribution<double>(0, 1)(work_rng_) <
              sc_.conflict_rate) {
        objs.push_back(prev[work_rng_() % prev.size()]);
      }
      while (objs.size() < nobj) objs.push_back(fresh_obj_++);
      std::sort(objs.begin(), objs.end());
      objs.erase(std::unique(objs.begin(), objs.end()), objs.end());
      plan.reads = objs;
      for (ObjectId x : objs)
        if (objs.size() == 1 || work_rng_() % 10 < 7) plan.writes.push_back(x);
      plan.client = cfg_.client_first() + i % cfg_.client_count;
      plan.coordinator = kNoProcess;
      sc_.directives.push_back(std::move(d));
      prev = objs;
    }
  }

  // ---- directives --------------------------------------------------------

  void run_due_directives() {
    while (next_directive_ < directives_.size() &&
           directives_[next_directive_].at_step <= step_) {
      const Directive& d = directives_[next_directive_++];
      switch (d.kind) {
        case Directive::Kind::Certify: do_certify(d.plan); break;
        case Directive::Kind::Crash: do_crash(d.pid); break;
        case Directive::Kind::Reconfigure:
          do_reconfigure(d.pid, d.shard, d.exclude);
          break;
        case Directive::Kind::Retry: do_retry(d.pid, d.slot, true); break;
        case Directive::Kind::Hold:
          holds_.push_back({d.hold_id, d.hold_src, d.hold_dst, d.hold_kind});
          break;
        case Directive::Kind::Release:
          holds_.erase(std::remove_if(holds_.begin(), holds_.end(),
                                      [&](const Hold& h) {
                                        return h.id == d.hold_id;
                                      }),
                       holds_.end());
          break;
      }
    }
  }

  void do_certify(const TxnPlan& plan) {
    Payload l;
    Version maxv = 0;
    for (ObjectId x : plan.reads) {
      Version v = store_.count(x) ? store_[x] : 0;
      l.reads[x] = v;
      maxv = std::max(maxv, v);
    }
    for (ObjectId x : plan.writes)
      l.writes[x] = "w" + std::to_string(plan.txn) + "_" + std::to_string(x);
    vc_counter_ = std::max(vc_counter_ + 1, maxv + 1);
    l.commit_version = vc_counter_;

    std::set<ShardId> shards = shards_of(l, certifier_.shard_map());
    ProcessId coord = plan.coordinator;
    if (coord == kNoProcess || dead_.count(coord))
      coord = pick_coordinator(shards);
    if (coord == kNoProcess) {
      note_event("certify dropped: no live coordinator");
      return;
    }
    trace_.registry[plan.txn] = TxnInfo{l, shards, plan.client};

    std::uint64_t seq = ++seq_counter_;
    if (cfg_.model == Model::Rdma) {
      RdmaStepResult r;
      rdma::certify(rdma_.at(coord), make_ctx(seq), plan.txn, l, plan.client,
                    r);
      commit(seq, coord, EvKind::Certify, kNoProcess, std::nullopt, r, {},
             &r.channel_ops, plan.txn);
    } else {
      StepResult r;
      mp::certify(mp_.at(coord), make_ctx(seq), plan.txn, l, plan.client, r);
      commit(seq, coord, EvKind::Certify, kNoProcess, std::nullopt, r, {},
             nullptr, plan.txn);
    }
  }

  ProcessId pick_coordinator(const std::set<ShardId>& shards) {
    std::vector<ProcessId> eligible;
    auto consider = [&](ProcessId p, bool initialized) {
      if (dead_.count(p) || !initialized) return;
      if (cfg_.model == Model::Rdma || cfg_.model == Model::NaiveRdma) {
        // one-sided sends reach own-shard peers only from the shard leader
        for (ShardId s : shards) {
          CsKey key = cfg_.model == Model::Rdma ? kGlobalKey : s;
          const Configuration& c = cs_.get_last(key);
          if (c.members_of(s).count(p) && c.leader_of(s) != p) return;
        }
      }
      eligible.push_back(p);
    };
    if (cfg_.model == Model::Rdma) {
      for (const auto& [p, st] : rdma_) consider(p, st.initialized);
    } else {
      for (const auto& [p, st] : mp_) consider(p, st.initialized);
    }
    if (eligible.empty()) return kNoProcess;
    return eligible[work_rng_() % eligible.size()];
  }

  void do_crash(ProcessId pid) {
    if (dead_.count(pid) || pid >= cfg_.client_first()) {
      note_event("crash directive ignored");
      return;
    }
    dead_.insert(pid);
    parked_.erase(pid);
    for (auto& [key, q] : chan_)
      if (key.second == pid) q.clear();
    channel_.destroy_owner(pid);
    deliverable_since_.erase(pid);
    TraceEvent ev;
    ev.seq = ++seq_counter_;
    ev.step = step_;
    ev.kind = EvKind::Crash;
    ev.actor = pid;
    trace_.events.push_back(std::move(ev));
  }

  void do_reconfigure(ProcessId pid, ShardId shard,
                      const std::set<ProcessId>& exclude) {
    if (dead_.count(pid)) {
      note_event("reconfigure directive ignored: process crashed");
      return;
    }
    std::uint64_t seq = ++seq_counter_;
    if (cfg_.model == Model::Rdma) {
      RdmaStepResult r;
      rdma::reconfigure(rdma_.at(pid), make_ctx(seq), exclude, r);
      commit(seq, pid, EvKind::Reconfigure, kNoProcess, std::nullopt, r, {},
             &r.channel_ops);
    } else {
      StepResult r;
      mp::reconfigure(mp_.at(pid), make_ctx(seq), shard, exclude, r);
      commit(seq, pid, EvKind::Reconfigure, kNoProcess, std::nullopt, r, {});
    }
  }

  void do_retry(ProcessId pid, Slot k, bool scripted) {
    if (dead_.count(pid)) {
      if (scripted) note_event("retry directive ignored: process crashed");
      return;
    }
    last_retry_[{pid, k}] = step_;
    std::uint64_t seq = ++seq_counter_;
    if (cfg_.model == Model::Rdma) {
      RdmaStepResult r;
      rdma::retry(rdma_.at(pid), make_ctx(seq), k, r);
      commit(seq, pid, EvKind::Retry, kNoProcess, std::nullopt, r, {},
             &r.channel_ops);
    } else {
      StepResult r;
      mp::retry(mp_.at(pid), make_ctx(seq), k, r);
      commit(seq, pid, EvKind::Retry, kNoProcess, std::nullopt, r, {});
    }
    after_state_change(pid);
  }

  // ---- execution ---------------------------------------------------------

  void execute(const Cand& c) {
    switch (c.type) {
      case Cand::Type::Fifo: {
        auto& q = chan_[{c.a, c.b}];
        InFlight f = std::move(q.front());
        q.pop_front();
        route(c.a, c.b, std::move(f.msg), f.cause);
        break;
      }
      case Cand::Type::Ack: {
        auto& q = acks_[{c.a, c.b}];
        AckEvent a = std::move(q.front());
        q.pop_front();
        process_ack(a);
        break;
      }
      case Cand::Type::Pull:
        pull_deliver(c.a, false);
        break;
      case Cand::Type::Advance: {
        std::uint64_t seq = ++seq_counter_;
        if (cfg_.model == Model::Rdma) {
          RdmaStepResult r;
          rdma::advance_probing(rdma_.at(c.a), make_ctx(seq), c.shard, r);
          commit(seq, c.a, EvKind::AdvanceProbe, kNoProcess, std::nullopt, r,
                 {}, &r.channel_ops);
        } else {
          StepResult r;
          mp::advance_probing(mp_.at(c.a), make_ctx(seq), r);
          commit(seq, c.a, EvKind::AdvanceProbe, kNoProcess, std::nullopt, r,
                 {});
        }
        break;
      }
      case Cand::Type::EndProbe: {
        std::uint64_t seq = ++seq_counter_;
        if (cfg_.model == Model::Rdma) {
          RdmaStepResult r;
          rdma::end_probing(rdma_.at(c.a), make_ctx(seq), r);
          commit(seq, c.a, EvKind::Reconfigure, kNoProcess, std::nullopt, r,
                 {}, &r.channel_ops);
        } else {
          StepResult r;
          mp::end_probing(mp_.at(c.a), make_ctx(seq), r);
          commit(seq, c.a, EvKind::Reconfigure, kNoProcess, std::nullopt, r,
                 {});
        }
        break;
      }
      case Cand::Type::AutoRetry:
        do_retry(c.a, c.slot, false);
        break;
    }
  }

  void route(ProcessId src, ProcessId dst, Message msg, std::uint64_t cause) {
    if (dead_.count(dst)) return;
    if (dst == cfg_.cs_pid()) {
      cs_step(src, msg, cause);
      return;
    }
    if (msg.is<ClientDecision>()) {
      client_decide(src, dst, *msg.as<ClientDecision>(), cause);
      return;
    }
    deliver_to_process(src, dst, std::move(msg), cause);
    after_state_change(dst);
  }

  void deliver_to_process(ProcessId src, ProcessId dst, Message msg,
                          std::uint64_t cause, bool from_park = false) {
    if (cfg_.model == Model::Rdma) {
      ProcessRdma& st = rdma_.at(dst);
      Gate g = rdma::gate(st, msg);
      if (g == Gate::Drop) return;
      if (g == Gate::Park) {
        parked_[dst].push_back({src, std::move(msg), cause});
        return;
      }
      // a new leader or follower first drains what its NIC already admitted
      if (msg.is<NewConfig>() || msg.is<NewState>()) flush_deliver(dst);
      std::uint64_t seq = ++seq_counter_;
      RdmaStepResult r;
      if (from_park) r.note("deferred delivery");
      rdma::handle(st, make_ctx(seq), msg, src, r);
      commit(seq, dst, EvKind::Deliver, src, msg, r, {cause},
             &r.channel_ops);
    } else {
      ProcessMp& st = mp_.at(dst);
      Gate g = mp::gate(st, msg);
      if (g == Gate::Drop) return;
      if (g == Gate::Park) {
        parked_[dst].push_back({src, std::move(msg), cause});
        return;
      }
      std::uint64_t seq = ++seq_counter_;
      StepResult r;
      if (from_park) r.note("deferred delivery");
      mp::handle(st, make_ctx(seq), msg, src, r);
      commit(seq, dst, EvKind::Deliver, src, msg, r, {cause});
    }
  }

  /// Re-evaluates parked deliveries after any state change at `pid` until a
  /// full pass neither applies nor drops anything.
  void after_state_change(ProcessId pid) {
    auto it = parked_.find(pid);
    if (it == parked_.end()) return;
    bool progress = true;
    while (progress) {
      progress = false;
      auto& q = it->second;
      for (std::size_t i = 0; i < q.size(); ++i) {
        Gate g;
        if (cfg_.model == Model::Rdma)
          g = rdma::gate(rdma_.at(pid), q[i].msg);
        else
          g = mp::gate(mp_.at(pid), q[i].msg);
        if (g == Gate::Park) continue;
        Parked p = std::move(q[i]);
        q.erase(q.begin() + i);
        progress = true;
        if (g == Gate::Handle)
          deliver_to_process(p.src, pid, std::move(p.msg), p.cause, true);
        break;
      }
    }
  }

  void client_decide(ProcessId src, ProcessId dst, const ClientDecision& m,
                     std::uint64_t cause) {
    TraceEvent ev;
    ev.seq = ++seq_counter_;
    ev.step = step_;
    ev.kind = EvKind::ClientDecide;
    ev.actor = dst;
    ev.src = src;
    ev.msg = Message{m};
    ev.parents = {cause};
    ev.txn = m.txn;
    ev.dec = m.dec;
    if (!client_decided_.count(m.txn)) {
      client_decided_[m.txn] = m.dec;
      if (m.dec == Decision::Commit) {
        const TxnInfo& info = trace_.registry.at(m.txn);
        for (const auto& [x, _] : info.payload.writes)
          store_[x] = info.payload.commit_version;
      }
    } else {
      ev.notes.push_back("duplicate client decision");
    }
    trace_.events.push_back(std::move(ev));
  }

  void cs_step(ProcessId from, const Message& msg, std::uint64_t cause) {
    const CsRequest& req = *msg.as<CsRequest>();
    std::uint64_t seq = ++seq_counter_;
    TraceEvent ev;
    ev.seq = seq;
    ev.step = step_;
    ev.kind = EvKind::CsStep;
    ev.actor = cfg_.cs_pid();
    ev.src = from;
    ev.msg = msg;
    ev.parents = {cause};

    CsResponse resp;
    resp.op = req.op;
    resp.key = req.key;
    resp.token = req.token;
    std::vector<Emission> extra;
    switch (req.op) {
      case CsOpKind::GetLast:
        resp.cfg = cs_.get_last(req.key);
        resp.ok = true;
        break;
      case CsOpKind::Get: {
        auto c = cs_.get(req.key, req.epoch);
        resp.ok = c.has_value();
        if (c) resp.cfg = *c;
        break;
      }
      case CsOpKind::Cas: {
        resp.ok = cs_.compare_and_swap(req.key, req.epoch, req.cfg);
        auto draft = pending_drafts_.find(from);
        if (resp.ok) {
          trace_.introductions.push_back({req.key, req.cfg, seq});
          if (draft != pending_drafts_.end()) {
            // drafted standbys now belong to their shard, even before any
            // state transfer reaches them
            for (ProcessId p : draft->second)
              for (const auto& [s, mem] : req.cfg.members)
                if (mem.count(p)) assign_home_shard(p, s);
            pending_drafts_.erase(draft);
          }
          if (cfg_.model != Model::Rdma) {
            // the service announces the new shard configuration system-wide
            ShardId s = req.key;
            ConfigChange cc;
            cc.shard = s;
            cc.epoch = req.cfg.epoch;
            cc.members = req.cfg.members_of(s);
            cc.leader = req.cfg.leader_of(s);
            for (const auto& [other, seqs] : cs_.sequences()) {
              if (other == s) continue;
              for (ProcessId p : seqs.back().members_of(other))
                extra.push_back(Emission{p, Message{cc}, Via::Fifo});
              // and brings the installed members up to date on every other
              // shard, so processes added later see the whole system
              ConfigChange refresh;
              refresh.shard = other;
              refresh.epoch = seqs.back().epoch;
              refresh.members = seqs.back().members_of(other);
              refresh.leader = seqs.back().leader_of(other);
              for (ProcessId p : req.cfg.members_of(s))
                extra.push_back(Emission{p, Message{refresh}, Via::Fifo});
            }
          }
        } else if (draft != pending_drafts_.end()) {
          for (ProcessId p : draft->second) reserved_.erase(p);
          pending_drafts_.erase(draft);
        }
        break;
      }
    }
    enqueue_fifo(cfg_.cs_pid(), from, Message{resp}, seq, cs_extra_delay());
    ev.emissions.push_back(EmissionRec{from, Message{resp}, Via::Fifo});
    for (const auto& e : extra) {
      enqueue_fifo(cfg_.cs_pid(), e.dst, e.msg, seq, cs_extra_delay());
      ev.emissions.push_back(EmissionRec{e.dst, e.msg, e.via});
    }
    trace_.events.push_back(std::move(ev));
  }

  std::uint64_t cs_extra_delay() const {
    return cfg_.cs_latency > 0 ? cfg_.cs_latency - 1 : 0;
  }

  void assign_home_shard(ProcessId p, ShardId s) {
    if (cfg_.model == Model::Rdma) {
      auto it = rdma_.find(p);
      if (it != rdma_.end() && it->second.s0 == kNoShard) it->second.s0 = s;
    } else {
      auto it = mp_.find(p);
      if (it != mp_.end() && it->second.s0 == kNoShard) it->second.s0 = s;
    }
  }

  void process_ack(const AckEvent& a) {
    channel_.mark_acked(a.entry_id);
    if (!deliverable_since_.count(a.owner) && !dead_.count(a.owner) &&
        channel_.has_deliverable(a.owner))
      deliverable_since_[a.owner] = step_;

    std::uint64_t seq = ++seq_counter_;
    if (dead_.count(a.sender)) {
      TraceEvent ev;
      ev.seq = seq;
      ev.step = step_;
      ev.kind = EvKind::RdmaAck;
      ev.actor = a.sender;
      ev.src = a.owner;
      ev.msg = a.msg;
      ev.parents = {a.cause};
      ev.notes.push_back("sender crashed; write stays acked");
      trace_.events.push_back(std::move(ev));
      return;
    }
    if (cfg_.model == Model::Rdma) {
      RdmaStepResult r;
      if (auto* acc = a.msg.as<Accept>())
        rdma::on_accept_acked(rdma_.at(a.sender), make_ctx(seq), *acc, a.owner,
                              r);
      commit(seq, a.sender, EvKind::RdmaAck, a.owner, a.msg, r, {a.cause},
             &r.channel_ops);
    } else {
      StepResult r;
      if (auto* acc = a.msg.as<Accept>())
        mp::on_accept_acked_naive(mp_.at(a.sender), make_ctx(seq), *acc,
                                  a.owner, r);
      commit(seq, a.sender, EvKind::RdmaAck, a.owner, a.msg, r, {a.cause});
    }
    after_state_change(a.sender);
  }

  /// Applies every NIC-acked entry addressed to `pid`. `flushing` marks
  /// records produced by the flush that precedes NEW_CONFIG / NEW_STATE.
  void pull_deliver(ProcessId pid, bool flushing) {
    std::vector<RdmaEntry> admitted;
    std::vector<RdmaEntry> entries = channel_.pull(pid, &admitted);
    deliverable_since_.erase(pid);
    for (const RdmaEntry& e : admitted) schedule_ack(e);
    for (RdmaEntry& e : entries) {
      std::uint64_t seq = ++seq_counter_;
      if (cfg_.model == Model::Rdma) {
        RdmaStepResult r;
        if (flushing) r.note("delivered by flush");
        if (auto* acc = e.msg.as<Accept>())
          rdma::on_accept_delivered(rdma_.at(pid), make_ctx(seq), *acc, r);
        else if (auto* d = e.msg.as<ShardDecision>())
          rdma::on_decision_delivered(rdma_.at(pid), make_ctx(seq), *d, r);
        commit(seq, pid, EvKind::Deliver, e.sender, e.msg, r, {e.cause_seq},
               &r.channel_ops);
      } else {
        StepResult r;
        if (flushing) r.note("delivered by flush");
        if (auto* acc = e.msg.as<Accept>())
          mp::on_accept_delivered_naive(mp_.at(pid), make_ctx(seq), *acc, r);
        else if (auto* d = e.msg.as<ShardDecision>())
          mp::on_decision_delivered_naive(mp_.at(pid), make_ctx(seq), *d, r);
        commit(seq, pid, EvKind::Deliver, e.sender, e.msg, r, {e.cause_seq});
      }
    }
    if (!entries.empty() && !flushing) after_state_change(pid);
  }

  void flush_deliver(ProcessId pid) { pull_deliver(pid, true); }

  void schedule_ack(const RdmaEntry& e) {
    acks_[{e.owner, e.sender}].push_back(
        AckEvent{e.id, e.sender, e.owner, e.msg, step_, e.cause_seq});
  }

  // ---- plumbing ----------------------------------------------------------

  Ctx make_ctx(std::uint64_t seq) {
    Ctx ctx;
    ctx.certifier = &certifier_;
    ctx.shard_map = certifier_.shard_map();
    ctx.target_shard_size = cfg_.replicas_per_shard;
    ctx.registry = &trace_.registry;
    ctx.now = step_;
    ctx.seq = seq;
    for (ProcessId p = cfg_.pool_first(); p < cfg_.client_first(); ++p)
      if (!reserved_.count(p) && !dead_.count(p)) ctx.fresh_pool.push_back(p);
    return ctx;
  }

  void enqueue_fifo(ProcessId src, ProcessId dst, Message msg,
                    std::uint64_t cause, std::uint64_t extra_delay = 0) {
    if (dead_.count(dst)) return;
    InFlight f;
    f.msg = std::move(msg);
    f.enq_step = step_;
    f.ready_step = step_ + extra_delay;
    f.cause = cause;
    chan_[{src, dst}].push_back(std::move(f));
  }

  void commit(std::uint64_t seq, ProcessId actor, EvKind kind, ProcessId src,
              std::optional<Message> msg, StepResult& r,
              std::vector<std::uint64_t> parents,
              const std::vector<ChannelOp>* channel_ops = nullptr,
              TxnId txn = 0) {
    TraceEvent ev;
    ev.seq = seq;
    ev.step = step_;
    ev.kind = kind;
    ev.actor = actor;
    ev.src = src;
    ev.msg = std::move(msg);
    ev.parents = std::move(parents);
    ev.parents.insert(ev.parents.end(), r.parents.begin(), r.parents.end());
    ev.notes = std::move(r.notes);
    ev.txn = txn;

    if (channel_ops) {
      for (const ChannelOp& op : *channel_ops) {
        if (op.kind == ChannelOp::Kind::Open)
          channel_.open(actor, op.peer);
        else
          channel_.close(actor, op.peer);
      }
    }
    for (Emission& em : r.out) {
      if (em.dst == kNoProcess && !em.msg.is<CsRequest>()) {
        ev.notes.push_back(std::string("emission of ") + kind_name(em.msg) +
                           " to unknown destination dropped");
        continue;
      }
      ProcessId dst = em.dst == kNoProcess ? cfg_.cs_pid() : em.dst;
      // the naive variant persists votes and decisions one-sidedly
      if (cfg_.model == Model::NaiveRdma &&
          (em.msg.is<Accept>() || em.msg.is<ShardDecision>()))
        em.via = Via::Rdma;
      ev.emissions.push_back(EmissionRec{dst, em.msg, em.via});
      if (em.via == Via::Rdma && cfg_.model != Model::Mp) {
        std::uint64_t id = 0;
        switch (channel_.send(actor, dst, em.msg, seq, &id)) {
          case SendOutcome::Accepted:
            schedule_ack(RdmaEntry{id, actor, dst, em.msg, false, seq});
            break;
          case SendOutcome::Blocked:
            ev.notes.push_back("rdma send to " + std::to_string(dst) +
                               " blocked on full buffer");
            break;
          case SendOutcome::Rejected:
            ev.notes.push_back("rdma send to " + std::to_string(dst) +
                               " rejected: no open connection");
            break;
        }
      } else {
        enqueue_fifo(actor, dst, em.msg, seq);
      }
    }
    if (!r.drafted.empty()) {
      for (ProcessId p : r.drafted) reserved_.insert(p);
      pending_drafts_[actor] = r.drafted;
    }
    if (r.origin) trace_.origins.emplace(r.origin->id, *r.origin);
    ev.snap = snapshot(actor);
    trace_.events.push_back(std::move(ev));
  }

  std::optional<StateSnap> snapshot(ProcessId pid) const {
    StateSnap s;
    if (cfg_.model == Model::Rdma) {
      auto it = rdma_.find(pid);
      if (it == rdma_.end()) return std::nullopt;
      const ProcessRdma& st = it->second;
      s.pid = pid;
      s.s0 = st.s0;
      s.status = st.status;
      s.initialized = st.initialized;
      s.epoch[kGlobalKey] = st.epoch;
      s.new_epoch = st.new_epoch;
      s.next = st.next;
      s.log = st.log;
    } else {
      auto it = mp_.find(pid);
      if (it == mp_.end()) return std::nullopt;
      const ProcessMp& st = it->second;
      s.pid = pid;
      s.s0 = st.s0;
      s.status = st.status;
      s.initialized = st.initialized;
      s.epoch = st.epoch;
      s.new_epoch = st.new_epoch;
      s.next = st.next;
      s.log = st.log;
    }
    return s;
  }

  void note_event(std::string text) {
    TraceEvent ev;
    ev.seq = ++seq_counter_;
    ev.step = step_;
    ev.kind = EvKind::Note;
    ev.notes.push_back(std::move(text));
    trace_.events.push_back(std::move(ev));
  }

  void finish() {
    trace_.final_step = step_;
    auto cands = enumerate();
    bool pending = !cands.empty() || has_unripe_work() ||
                   pending_auto_retry_exists() ||
                   next_directive_ < directives_.size();
    if (step_ >= cfg_.max_steps && pending) {
      trace_.max_steps_exhausted = true;
      std::size_t fifo = 0, ack = 0, pull = 0, trig = 0;
      for (const auto& c : cands) {
        switch (c.type) {
          case Cand::Type::Fifo: ++fifo; break;
          case Cand::Type::Ack: ++ack; break;
          case Cand::Type::Pull: ++pull; break;
          default: ++trig; break;
        }
      }
      trace_.pending_obligations.push_back(
          "undelivered=" + std::to_string(fifo) + " acks=" +
          std::to_string(ack) + " pulls=" + std::to_string(pull) +
          " triggers=" + std::to_string(trig) +
          (pending_auto_retry_exists() ? " retries-pending" : ""));
    }
    for (const auto& h : holds_)
      trace_.pending_obligations.push_back("hold " + std::to_string(h.id) +
                                           " never released");
  }

  Scenario sc_;
  SimConfig cfg_;
  Trace trace_;
  CsState cs_;
  RdmaChannel channel_;
  SerializabilityCertifier certifier_;
  std::mt19937_64 sched_rng_;
  std::mt19937_64 work_rng_;

  std::map<ProcessId, ProcessMp> mp_;
  std::map<ProcessId, ProcessRdma> rdma_;
  std::set<ProcessId> dead_;
  std::set<ProcessId> reserved_;
  std::map<ProcessId, std::vector<ProcessId>> pending_drafts_;

  std::map<std::pair<ProcessId, ProcessId>, std::deque<InFlight>> chan_;
  std::map<std::pair<ProcessId, ProcessId>, std::deque<AckEvent>> acks_;
  std::map<ProcessId, std::uint64_t> deliverable_since_;
  std::map<ProcessId, std::deque<Parked>> parked_;
  std::vector<Hold> holds_;

  std::map<TxnId, Decision> client_decided_;
  std::map<ObjectId, Version> store_;
  Version vc_counter_ = 0;
  ObjectId fresh_obj_ = 0;
  std::map<std::pair<ProcessId, Slot>, std::uint64_t> last_retry_;

  std::vector<Directive> directives_;
  std::size_t next_directive_ = 0;
  std::uint64_t step_ = 0;
  std::uint64_t seq_counter_ = 0;
};

inline Trace run_scenario(const Scenario& sc) { return Engine(sc).run(); }

}  // namespace tcs
