// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tcs/check/extract.hpp"
#include "tcs/payload.hpp"
#include "tcs/sim/trace.hpp"

namespace tcs {

struct Violation {
  std::string check;        // e.g. "inv4b"
  std::string detail;
  std::vector<std::uint64_t> window;  // witnessing event seqs
};

inline std::string render(const Violation& v) {
  std::ostringstream os;
  os << v.check << ": " << v.detail << " [events";
  for (auto s : v.window) os << " #" << s;
  os << "]";
  return os.str();
}

/// The hole-tolerant prefix order on certification logs: true iff both
/// prefixes of length `k` have the same filled length and every filled slot
/// of `beta` agrees with `alpha` on (txn, vote, payload).
inline bool prefix_holes(const Log& beta, Slot k,
                         const std::map<Slot, LogSlot>& alpha) {
  Slot len_a = 0, len_b = 0;
  for (const auto& [j, s] : alpha)
    if (j <= k && s.txn != 0) len_a = std::max(len_a, j);
  for (const auto& [j, s] : beta)
    if (j <= k && s.txn != 0) len_b = std::max(len_b, j);
  if (len_a != len_b) return false;
  for (const auto& [j, s] : beta) {
    if (j > k || s.txn == 0) continue;
    auto it = alpha.find(j);
    if (it == alpha.end() || it->second.txn == 0) return false;
    if (s.txn != it->second.txn || s.vote != it->second.vote ||
        !(s.payload == it->second.payload))
      return false;
  }
  return true;
}

namespace check_detail {

inline std::string fmt(const char* what, ShardId s, Epoch e, Slot k) {
  std::ostringstream os;
  os << what << " shard=" << s << " epoch=" << e << " slot=" << k;
  return os.str();
}

/// Per-process timeline of state snapshots.
struct Timeline {
  std::vector<const TraceEvent*> events;  // events carrying a snap, in order
};

inline std::map<ProcessId, Timeline> timelines(const Trace& tr) {
  std::map<ProcessId, Timeline> out;
  for (const TraceEvent& ev : tr.events)
    if (ev.snap) out[ev.actor].events.push_back(&ev);
  return out;
}

}  // namespace check_detail

/// Invariants 1 and 2: follower logs stay hole-prefixes of the leader arrays
/// attached to the vote they confirmed, while in the epoch (1) and in every
/// higher epoch after full acceptance (2).
inline void check_inv1_inv2(const Trace& tr, std::vector<Violation>* out) {
  auto tls = check_detail::timelines(tr);

  // Invariant 1: from each confirmed ACCEPT forward, while the epoch holds.
  for (const auto& [pid, tl] : tls) {
    for (std::size_t i = 0; i < tl.events.size(); ++i) {
      const TraceEvent& ev = *tl.events[i];
      if (ev.kind != EvKind::Deliver || !ev.msg) continue;
      const Accept* a = ev.msg->as<Accept>();
      if (!a) continue;
      bool confirmed = tr.model != Model::Mp;  // one-sided writes can't nack
      for (const EmissionRec& em : ev.emissions)
        if (em.msg.is<AcceptAck>()) confirmed = true;
      if (!confirmed) continue;
      for (std::size_t j = i; j < tl.events.size(); ++j) {
        const StateSnap& snap = *tl.events[j]->snap;
        if (snap.epoch_for(a->shard) != a->epoch) break;
        if (!prefix_holes(snap.log, a->slot, a->leader_prefix.entries)) {
          out->push_back(
              {"inv1",
               check_detail::fmt("follower log diverges from leader prefix",
                                 a->shard, a->epoch, a->slot),
               {ev.seq, tl.events[j]->seq}});
          break;
        }
      }
    }
  }

  // Invariant 2: accepted entries persist into every higher epoch.
  std::vector<Acceptance> acc = acceptances(tr);
  for (const Acceptance& a : acc) {
    for (const auto& [pid, tl] : tls) {
      for (const TraceEvent* ev : tl.events) {
        const StateSnap& snap = *ev->snap;
        if (snap.s0 != a.shard) continue;
        if (snap.epoch_for(a.shard) <= a.epoch) continue;
        if (!prefix_holes(snap.log, a.slot, a.prefix.entries)) {
          out->push_back(
              {"inv2",
               check_detail::fmt("accepted entry lost in a higher epoch",
                                 a.shard, a.epoch, a.slot),
               {a.complete_seq, ev->seq}});
          break;  // one witness per (acceptance, process)
        }
      }
    }
  }
}

/// Invariant 3: after answering PROBE(e) a process never confirms a vote for
/// an epoch below e. Confirmation is the ACCEPT_ACK send in the
/// message-passing model and the unconditional application of a delivered
/// ACCEPT prepared at a lower epoch (while already at or past e) otherwise.
inline void check_inv3(const Trace& tr, std::vector<Violation>* out) {
  struct ProbeReply {
    Epoch epoch;
    ShardId shard;
    std::uint64_t seq;
  };
  std::map<ProcessId, std::vector<ProbeReply>> replies;
  for (const TraceEvent& ev : tr.events)
    for (const EmissionRec& em : ev.emissions)
      if (const ProbeAck* pa = em.msg.as<ProbeAck>())
        replies[ev.actor].push_back({pa->epoch, pa->shard, ev.seq});

  for (const TraceEvent& ev : tr.events) {
    if (tr.model == Model::Mp) {
      for (const EmissionRec& em : ev.emissions) {
        const AcceptAck* ack = em.msg.as<AcceptAck>();
        if (!ack) continue;
        for (const ProbeReply& pr : replies[ev.actor])
          if (pr.seq < ev.seq && pr.shard == ack->shard &&
              ack->epoch < pr.epoch)
            out->push_back({"inv3",
                            check_detail::fmt("vote confirmed below probed "
                                              "epoch",
                                              ack->shard, ack->epoch,
                                              ack->slot),
                            {pr.seq, ev.seq}});
      }
    } else {
      if (ev.kind != EvKind::Deliver || !ev.msg || !ev.snap) continue;
      const Accept* a = ev.msg->as<Accept>();
      if (!a) continue;
      Epoch now = ev.snap->epoch_for(a->shard);
      for (const ProbeReply& pr : replies[ev.actor])
        if (pr.seq < ev.seq && a->epoch < pr.epoch && now >= pr.epoch)
          out->push_back({"inv3",
                          check_detail::fmt("stale vote applied after probe",
                                            a->shard, a->epoch, a->slot),
                          {pr.seq, ev.seq}});
    }
  }
}

/// Invariant 4: all shard decisions for a slot agree (a) and all client
/// decisions for a transaction agree (b).
inline void check_inv4(const Trace& tr, std::vector<Violation>* out) {
  std::map<std::pair<ShardId, Slot>, std::pair<Decision, std::uint64_t>> shard_dec;
  std::map<TxnId, std::pair<Decision, std::uint64_t>> client_dec;
  for (const TraceEvent& ev : tr.events) {
    for (const EmissionRec& em : ev.emissions) {
      if (const ShardDecision* d = em.msg.as<ShardDecision>()) {
        auto key = std::make_pair(d->shard, d->slot);
        auto it = shard_dec.find(key);
        if (it == shard_dec.end())
          shard_dec.emplace(key, std::make_pair(d->dec, ev.seq));
        else if (it->second.first != d->dec)
          out->push_back({"inv4a",
                          check_detail::fmt("conflicting shard decisions",
                                            d->shard, d->epoch, d->slot),
                          {it->second.second, ev.seq}});
      }
      if (const ClientDecision* d = em.msg.as<ClientDecision>()) {
        auto it = client_dec.find(d->txn);
        if (it == client_dec.end())
          client_dec.emplace(d->txn, std::make_pair(d->dec, ev.seq));
        else if (it->second.first != d->dec)
          out->push_back({"inv4b",
                          "conflicting client decisions for txn " +
                              std::to_string(d->txn) + ": " +
                              to_string(it->second.first) + " vs " +
                              to_string(d->dec),
                          {it->second.second, ev.seq}});
      }
    }
  }
}

/// Invariant 5: a process skipped by an epoch that accepted a transaction
/// never rejoins the shard in a later epoch.
inline void check_inv5(const Trace& tr, std::vector<Violation>* out) {
  std::vector<Acceptance> acc = acceptances(tr);
  for (const Acceptance& a : acc) {
    const Configuration* at = tr.config_at(a.shard, a.epoch);
    if (!at) continue;
    // candidate processes: members of any earlier epoch of this shard
    std::set<ProcessId> earlier;
    for (const CsIntroduction& intro : tr.introductions) {
      if (intro.cfg.epoch >= a.epoch) continue;
      if (tr.model != Model::Rdma && intro.key != a.shard) continue;
      for (ProcessId p : intro.cfg.members_of(a.shard)) earlier.insert(p);
    }
    for (ProcessId p : earlier) {
      if (at->members_of(a.shard).count(p)) continue;
      for (const CsIntroduction& intro : tr.introductions) {
        if (intro.cfg.epoch <= a.epoch) continue;
        if (tr.model != Model::Rdma && intro.key != a.shard) continue;
        if (intro.cfg.members_of(a.shard).count(p))
          out->push_back(
              {"inv5",
               "process " + std::to_string(p) + " rejoined shard " +
                   std::to_string(a.shard) + " at epoch " +
                   std::to_string(intro.cfg.epoch) + " after being skipped at " +
                   std::to_string(a.epoch),
               {a.complete_seq, intro.seq}});
      }
    }
  }
}

/// Invariant 6: ACCEPTs for the same shard, epoch and slot carry the same
/// transaction, payload and vote. Invariant 9: the same transaction is never
/// accepted at two slots within an epoch.
inline void check_inv6_inv9(const Trace& tr, std::vector<Violation>* out) {
  std::map<std::tuple<ShardId, Epoch, Slot>, std::pair<const Accept*, std::uint64_t>>
      by_slot;
  std::map<std::tuple<ShardId, Epoch, TxnId>, std::pair<Slot, std::uint64_t>>
      by_txn;
  for (const TraceEvent& ev : tr.events) {
    for (const EmissionRec& em : ev.emissions) {
      const Accept* a = em.msg.as<Accept>();
      if (!a) continue;
      auto k1 = std::make_tuple(a->shard, a->epoch, a->slot);
      auto it1 = by_slot.find(k1);
      if (it1 == by_slot.end()) {
        by_slot.emplace(k1, std::make_pair(a, ev.seq));
      } else {
        const Accept* b = it1->second.first;
        if (b->txn != a->txn || !(b->payload == a->payload) ||
            b->vote != a->vote)
          out->push_back({"inv6",
                          check_detail::fmt("diverging ACCEPT content",
                                            a->shard, a->epoch, a->slot),
                          {it1->second.second, ev.seq}});
      }
      auto k2 = std::make_tuple(a->shard, a->epoch, a->txn);
      auto it2 = by_txn.find(k2);
      if (it2 == by_txn.end()) {
        by_txn.emplace(k2, std::make_pair(a->slot, ev.seq));
      } else if (it2->second.first != a->slot) {
        out->push_back({"inv9",
                        "txn " + std::to_string(a->txn) +
                            " accepted at two slots in epoch " +
                            std::to_string(a->epoch),
                        {it2->second.second, ev.seq}});
      }
    }
  }
}

/// Invariant 7: a slot's stored payload is the shard projection of the
/// certified payload when the vote is commit, and that or the empty payload
/// when the vote is abort.
inline void check_inv7(const Trace& tr, std::vector<Violation>* out) {
  ShardMap map = tr.shard_map();
  std::set<std::pair<ProcessId, Slot>> reported;
  for (const TraceEvent& ev : tr.events) {
    if (!ev.snap) continue;
    const StateSnap& snap = *ev.snap;
    if (snap.s0 == kNoShard) continue;
    for (const auto& [k, slot] : snap.log) {
      if (slot.txn == 0) continue;
      auto info = tr.registry.find(slot.txn);
      if (info == tr.registry.end()) continue;
      Payload expect = project(info->second.payload, snap.s0, map);
      bool ok = slot.vote == Decision::Commit
                    ? slot.payload == expect
                    : (slot.payload == expect || slot.payload.empty());
      if (!ok && reported.insert({ev.actor, k}).second)
        out->push_back({"inv7",
                        "slot " + std::to_string(k) + " at process " +
                            std::to_string(ev.actor) +
                            " stores a foreign payload",
                        {ev.seq}});
    }
  }
}

/// Invariant 8: new_epoch never falls below the process's own epoch.
inline void check_inv8(const Trace& tr, std::vector<Violation>* out) {
  for (const TraceEvent& ev : tr.events) {
    if (!ev.snap || ev.snap->s0 == kNoShard) continue;
    if (ev.snap->new_epoch < ev.snap->epoch_for(ev.snap->s0))
      out->push_back({"inv8",
                      "new_epoch below epoch at process " +
                          std::to_string(ev.actor),
                      {ev.seq}});
  }
}

/// Invariant 10: transactions in a log are distinct.
inline void check_inv10(const Trace& tr, std::vector<Violation>* out) {
  std::set<ProcessId> reported;
  for (const TraceEvent& ev : tr.events) {
    if (!ev.snap) continue;
    std::set<TxnId> seen;
    for (const auto& [k, slot] : ev.snap->log) {
      if (slot.txn == 0) continue;
      if (!seen.insert(slot.txn).second && reported.insert(ev.actor).second)
        out->push_back({"inv10",
                        "duplicate txn " + std::to_string(slot.txn) +
                            " in log of process " + std::to_string(ev.actor),
                        {ev.seq}});
    }
  }
}

/// Invariant 11: acceptances agree across epochs, per slot (a) and per
/// transaction (b).
inline void check_inv11(const Trace& tr, std::vector<Violation>* out) {
  std::vector<Acceptance> acc = acceptances(tr);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    for (std::size_t j = i + 1; j < acc.size(); ++j) {
      const Acceptance& a = acc[i];
      const Acceptance& b = acc[j];
      if (a.shard != b.shard) continue;
      if (a.slot == b.slot &&
          (a.txn != b.txn || !(a.payload == b.payload) || a.vote != b.vote))
        out->push_back({"inv11a",
                        check_detail::fmt("slot accepted with diverging "
                                          "content across epochs",
                                          a.shard, b.epoch, a.slot),
                        {a.complete_seq, b.complete_seq}});
      if (a.txn == b.txn &&
          (a.slot != b.slot || !(a.payload == b.payload) || a.vote != b.vote))
        out->push_back({"inv11b",
                        "txn " + std::to_string(a.txn) +
                            " accepted inconsistently across epochs",
                        {a.complete_seq, b.complete_seq}});
    }
  }
}

/// Invariant 12: a decided slot is backed by a sent DECISION no newer than
/// the process's epoch (a), and a commit decision implies a commit vote (b).
inline void check_inv12(const Trace& tr, std::vector<Violation>* out) {
  struct SentDec {
    Epoch epoch;
    Decision dec;
    std::uint64_t seq;
  };
  std::map<std::pair<ShardId, Slot>, std::vector<SentDec>> sent;
  for (const TraceEvent& ev : tr.events)
    for (const EmissionRec& em : ev.emissions)
      if (const ShardDecision* d = em.msg.as<ShardDecision>())
        sent[{d->shard, d->slot}].push_back({d->epoch, d->dec, ev.seq});

  std::set<std::pair<ProcessId, Slot>> reported_a, reported_b;
  for (const TraceEvent& ev : tr.events) {
    if (!ev.snap || ev.snap->s0 == kNoShard) continue;
    const StateSnap& snap = *ev.snap;
    Epoch now = snap.epoch_for(snap.s0);
    for (const auto& [k, slot] : snap.log) {
      if (slot.phase != Phase::Decided || !slot.dec) continue;
      bool backed = false;
      for (const SentDec& sd : sent[{snap.s0, k}])
        if (sd.seq < ev.seq && sd.dec == *slot.dec && sd.epoch <= now)
          backed = true;
      if (!backed && reported_a.insert({ev.actor, k}).second)
        out->push_back({"inv12a",
                        "decided slot " + std::to_string(k) + " at process " +
                            std::to_string(ev.actor) +
                            " lacks a matching sent DECISION",
                        {ev.seq}});
      if (*slot.dec == Decision::Commit && slot.vote != Decision::Commit &&
          reported_b.insert({ev.actor, k}).second)
        out->push_back({"inv12b",
                        "slot " + std::to_string(k) + " at process " +
                            std::to_string(ev.actor) +
                            " decided commit over a non-commit vote",
                        {ev.seq}});
    }
  }
}

/// Invariant 13 (RDMA models): a delivered ACCEPT is applied exactly at the
/// epoch the leader prepared the transaction at.
inline void check_inv13(const Trace& tr, std::vector<Violation>* out) {
  if (tr.model == Model::Mp) return;
  for (const TraceEvent& ev : tr.events) {
    if (ev.kind != EvKind::Deliver || !ev.msg || !ev.snap) continue;
    const Accept* a = ev.msg->as<Accept>();
    if (!a) continue;
    Epoch now = ev.snap->epoch_for(a->shard);
    if (now != a->epoch)
      out->push_back({"inv13",
                      check_detail::fmt("vote applied outside its epoch",
                                        a->shard, a->epoch, a->slot) +
                          " (process at epoch " + std::to_string(now) + ")",
                      {ev.seq}});
  }
}

/// Epoch/new_epoch monotonicity; next only resets on leadership or state
/// transfer; phases regress only on state transfer (message-passing model).
inline void check_monotonic(const Trace& tr, std::vector<Violation>* out) {
  auto tls = check_detail::timelines(tr);
  for (const auto& [pid, tl] : tls) {
    for (std::size_t i = 1; i < tl.events.size(); ++i) {
      const TraceEvent& prev_ev = *tl.events[i - 1];
      const TraceEvent& ev = *tl.events[i];
      const StateSnap& a = *prev_ev.snap;
      const StateSnap& b = *ev.snap;
      for (const auto& [s, e] : a.epoch) {
        auto it = b.epoch.find(s);
        if (it != b.epoch.end() && it->second < e)
          out->push_back({"monotonic",
                          "epoch decreased at process " + std::to_string(pid),
                          {prev_ev.seq, ev.seq}});
      }
      if (b.new_epoch < a.new_epoch)
        out->push_back({"monotonic",
                        "new_epoch decreased at process " +
                            std::to_string(pid),
                        {prev_ev.seq, ev.seq}});
      bool transfer =
          ev.msg && (ev.msg->is<NewConfig>() || ev.msg->is<NewState>());
      if (!transfer && b.next < a.next)
        out->push_back({"monotonic",
                        "next decreased at process " + std::to_string(pid),
                        {prev_ev.seq, ev.seq}});
      if (tr.model == Model::Mp && !transfer) {
        for (const auto& [k, slot] : a.log) {
          auto it = b.log.find(k);
          Phase now = it == b.log.end() ? Phase::Start : it->second.phase;
          if (static_cast<int>(now) < static_cast<int>(slot.phase))
            out->push_back({"monotonic",
                            "phase regressed at slot " + std::to_string(k) +
                                " of process " + std::to_string(pid),
                            {prev_ev.seq, ev.seq}});
        }
      }
    }
  }
}

/// RDMA handshake sanity: nobody receives a CONNECT_ACK it never solicited
/// with a CONNECT.
inline void check_handshake(const Trace& tr, std::vector<Violation>* out) {
  if (tr.model != Model::Rdma) return;
  std::set<std::pair<ProcessId, ProcessId>> connects;  // (from, to)
  for (const TraceEvent& ev : tr.events) {
    for (const EmissionRec& em : ev.emissions)
      if (em.msg.is<Connect>()) connects.insert({ev.actor, em.dst});
    if (ev.kind == EvKind::Deliver && ev.msg && ev.msg->is<ConnectAck>() &&
        !connects.count({ev.actor, ev.src}))
      out->push_back({"handshake",
                      "process " + std::to_string(ev.actor) +
                          " received an unsolicited CONNECT_ACK from " +
                          std::to_string(ev.src),
                      {ev.seq}});
  }
}

/// Runs invariants 1-13 plus the structural monotonicity checks.
inline std::vector<Violation> check_invariants(const Trace& tr) {
  std::vector<Violation> out;
  check_inv1_inv2(tr, &out);
  check_inv3(tr, &out);
  check_inv4(tr, &out);
  check_inv5(tr, &out);
  check_inv6_inv9(tr, &out);
  check_inv7(tr, &out);
  check_inv8(tr, &out);
  check_inv10(tr, &out);
  check_inv11(tr, &out);
  check_inv12(tr, &out);
  check_inv13(tr, &out);
  check_monotonic(tr, &out);
  check_handshake(tr, &out);
  return out;
}

/// Invariant 4 in isolation (the unique-decision property).
inline std::vector<Violation> check_unique_decisions(const Trace& tr) {
  std::vector<Violation> out;
  check_inv4(tr, &out);
  return out;
}

}  // namespace tcs
