// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tcs/certification.hpp"
#include "tcs/check/extract.hpp"
#include "tcs/check/invariants.hpp"
#include "tcs/sim/trace.hpp"

namespace tcs {

/// The per-(transaction, shard) assignment extracted from a trace: the
/// accepted certification-order position, payload and vote, plus the
/// decided-commit (T) and prepared-commit (P) sets recorded when the vote was
/// computed. P is restricted to transactions that themselves got accepted,
/// matching how the vote-bound constraints are stated.
struct TcsLlAssignment {
  struct PerShard {
    Slot pos = 0;
    Decision vote = Decision::Abort;
    Payload payload;
    std::set<TxnId> t_set;
    std::set<TxnId> p_set;
    bool origin_known = false;
  };
  // key: (txn, shard)
  std::map<std::pair<TxnId, ShardId>, PerShard> entries;

  const PerShard* find(TxnId t, ShardId s) const {
    auto it = entries.find({t, s});
    return it == entries.end() ? nullptr : &it->second;
  }
};

inline TcsLlAssignment extract_assignment(const Trace& tr) {
  TcsLlAssignment out;
  for (const Acceptance& a : acceptances(tr)) {
    auto key = std::make_pair(a.txn, a.shard);
    if (out.entries.count(key)) continue;  // earliest acceptance wins
    TcsLlAssignment::PerShard e;
    e.pos = a.slot;
    e.vote = a.vote;
    e.payload = a.payload;
    auto origin = tr.origins.find(a.origin);
    if (origin != tr.origins.end()) {
      e.origin_known = true;
      e.t_set = origin->second.decided_commit;
      e.p_set = origin->second.prepared_commit;
    }
    out.entries.emplace(key, std::move(e));
  }
  // Restrict P to transactions that were themselves accepted at the shard,
  // at an earlier position and with a commit vote. Members dropped here were
  // either lost outright or re-prepared into later slots after a state
  // transfer missed them; distributivity keeps the vote bound valid for the
  // smaller set.
  for (auto& [key, e] : out.entries) {
    ShardId s = key.second;
    for (auto it = e.p_set.begin(); it != e.p_set.end();) {
      const auto* other = out.find(*it, s);
      if (!other || other->pos >= e.pos || other->vote != Decision::Commit)
        it = e.p_set.erase(it);
      else
        ++it;
    }
  }
  return out;
}

/// Checks the constraint system relating votes, positions and provenance
/// sets. Any violated constraint is reported with its witnessing
/// transaction and shard.
inline std::vector<Violation> check_tcsll(const Trace& tr,
                                          const TcsLlAssignment& asg) {
  std::vector<Violation> out;
  ShardMap map = tr.shard_map();
  SerializabilityCertifier cert(map);
  std::map<TxnId, Decision> d = client_decisions(tr);
  std::map<TxnId, Decision> d_sent = sent_client_decisions(tr);

  auto fail = [&](const std::string& name, TxnId t, ShardId s,
                  const std::string& why) {
    std::ostringstream os;
    os << "txn " << t;
    if (s != kNoShard) os << " shard " << s;
    os << ": " << why;
    out.push_back({name, os.str(), {}});
  };

  // (1) the client decision is the meet of the shard votes
  for (const auto& [t, dec] : d) {
    auto info = tr.registry.find(t);
    if (info == tr.registry.end()) continue;
    Decision m = Decision::Commit;
    bool all = true;
    for (ShardId s : info->second.shards) {
      const auto* e = asg.find(t, s);
      if (!e) {
        fail("tcsll-decision", t, s, "decided txn has no accepted vote here");
        all = false;
        continue;
      }
      m = meet(m, e->vote);
    }
    if (all && m != dec)
      fail("tcsll-decision", t, kNoShard,
           std::string("client decision ") + to_string(dec) +
               " is not the meet of shard votes");
  }

  // (2) positions are unique per shard
  std::map<std::pair<ShardId, Slot>, TxnId> pos_owner;
  for (const auto& [key, e] : asg.entries) {
    auto [t, s] = key;
    auto ins = pos_owner.emplace(std::make_pair(s, e.pos), t);
    if (!ins.second && ins.first->second != t)
      fail("tcsll-unique-pos", t, s,
           "position " + std::to_string(e.pos) + " shared with txn " +
               std::to_string(ins.first->second));
  }

  // (3) accepted payloads are the certified payload's projection
  for (const auto& [key, e] : asg.entries) {
    auto [t, s] = key;
    auto info = tr.registry.find(t);
    if (info == tr.registry.end()) continue;
    Payload expect = project(info->second.payload, s, map);
    bool ok = e.vote == Decision::Commit
                  ? e.payload == expect
                  : (e.payload == expect || e.payload.empty());
    if (!ok) fail("tcsll-payload", t, s, "accepted payload mismatch");
  }

  // (4) the vote is bounded by the certification functions over T and P
  for (const auto& [key, e] : asg.entries) {
    auto [t, s] = key;
    if (!e.origin_known) {
      fail("tcsll-vote-bound", t, s, "vote has no recorded provenance");
      continue;
    }
    PayloadSet t_payloads, p_payloads;
    for (TxnId t2 : e.t_set)
      if (const auto* e2 = asg.find(t2, s)) t_payloads.push_back(e2->payload);
    for (TxnId t2 : e.p_set)
      if (const auto* e2 = asg.find(t2, s)) p_payloads.push_back(e2->payload);
    Decision bound = meet(cert.committed_local(s, t_payloads, e.payload),
                          cert.prepared_local(s, p_payloads, e.payload));
    if (!decision_le(e.vote, bound))
      fail("tcsll-vote-bound", t, s,
           std::string("vote ") + to_string(e.vote) +
               " exceeds certification bound " + to_string(bound));
  }

  // (5) T is exactly the committed transactions positioned earlier, minus P
  for (const auto& [key, e] : asg.entries) {
    auto [t, s] = key;
    if (!e.origin_known) continue;
    std::set<TxnId> expect;
    for (const auto& [key2, e2] : asg.entries) {
      auto [t2, s2] = key2;
      if (s2 != s || t2 == t || e2.pos >= e.pos) continue;
      auto dit = d_sent.find(t2);
      if (dit != d_sent.end() && dit->second == Decision::Commit &&
          !e.p_set.count(t2))
        expect.insert(t2);
    }
    if (e.t_set != expect)
      fail("tcsll-t-set", t, s,
           "recorded decided-commit set differs from the positioned "
           "committed transactions");
  }

  // (6) P only holds commit-voted transactions positioned earlier
  for (const auto& [key, e] : asg.entries) {
    auto [t, s] = key;
    for (TxnId t2 : e.p_set) {
      const auto* e2 = asg.find(t2, s);
      if (!e2 || e2->pos >= e.pos || e2->vote != Decision::Commit)
        fail("tcsll-p-set", t, s,
             "prepared-commit set member " + std::to_string(t2) +
                 " is not an earlier commit-voted transaction");
    }
  }

  // (7) real-time order is reflected in certification positions
  History h = build_history(tr);
  std::map<TxnId, std::uint64_t> certify_at, decide_at;
  for (const HistoryAction& a : h)
    (a.is_certify ? certify_at : decide_at)[a.txn] = a.seq;
  for (const auto& [t2, dseq] : decide_at) {
    for (const auto& [t, cseq] : certify_at) {
      if (dseq >= cseq) continue;  // want decide(t2) before certify(t)
      auto i2 = tr.registry.find(t2);
      auto i1 = tr.registry.find(t);
      if (i2 == tr.registry.end() || i1 == tr.registry.end()) continue;
      for (ShardId s : i2->second.shards) {
        if (!i1->second.shards.count(s)) continue;
        const auto* e2 = asg.find(t2, s);
        const auto* e1 = asg.find(t, s);
        if (e2 && e1 && e2->pos >= e1->pos)
          fail("tcsll-rt", t, s,
               "real-time predecessor " + std::to_string(t2) +
                   " positioned after " + std::to_string(t));
      }
    }
  }

  // (8) the union of real-time and decision dependencies is acyclic
  std::map<TxnId, std::set<TxnId>> edges;  // t' -> t
  for (const auto& [t2, dseq] : decide_at)
    for (const auto& [t, cseq] : certify_at)
      if (dseq < cseq) edges[t2].insert(t);
  for (const auto& [key, e] : asg.entries) {
    auto [t, s] = key;
    if (!e.origin_known) continue;
    for (TxnId t2 : e.t_set) edges[t2].insert(t);
    for (const auto& [key2, e2] : asg.entries) {
      auto [t2, s2] = key2;
      if (s2 != s || t2 == t || e2.pos >= e.pos) continue;
      if (e2.vote != Decision::Commit) continue;
      auto dit = d_sent.find(t2);
      if (dit != d_sent.end() && dit->second == Decision::Abort &&
          !e.p_set.count(t2))
        edges[t2].insert(t);
    }
  }
  {
    std::map<TxnId, int> color;  // 0 white, 1 grey, 2 black
    bool cyclic = false;
    std::vector<std::pair<TxnId, bool>> stack;
    for (const auto& [root, _] : edges) {
      if (color[root]) continue;
      stack.push_back({root, false});
      while (!stack.empty() && !cyclic) {
        auto [n, done] = stack.back();
        stack.pop_back();
        if (done) {
          color[n] = 2;
          continue;
        }
        if (color[n] != 0) continue;
        color[n] = 1;
        stack.push_back({n, true});
        for (TxnId m : edges[n]) {
          if (color[m] == 1) cyclic = true;
          if (color[m] == 0) stack.push_back({m, false});
        }
      }
      if (cyclic) break;
    }
    if (cyclic)
      out.push_back({"tcsll-acyclic",
                     "real-time and decision dependencies form a cycle",
                     {}});
  }

  return out;
}

inline std::vector<Violation> check_tcsll(const Trace& tr) {
  return check_tcsll(tr, extract_assignment(tr));
}

}  // namespace tcs
