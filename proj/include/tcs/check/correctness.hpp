// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tcs/certification.hpp"
#include "tcs/check/extract.hpp"
#include "tcs/sim/trace.hpp"

namespace tcs {

enum class CorrectnessVerdict : std::uint8_t { Correct, Incorrect, Skipped };

inline const char* to_string(CorrectnessVerdict v) {
  switch (v) {
    case CorrectnessVerdict::Correct: return "correct";
    case CorrectnessVerdict::Incorrect: return "incorrect";
    default: return "skipped (too large)";
  }
}

/// Decides whether the committed projection of a history has a legal
/// linearization: an order of the committed transactions that respects every
/// decide-before-certify precedence and in which each transaction certifies
/// (per the global function) against exactly its predecessors' payloads.
///
/// The search walks subsets of committed transactions with memoized dead
/// ends; histories above `oracle_bound` committed transactions are skipped,
/// never guessed.
inline CorrectnessVerdict check_correct(
    const History& h, const std::map<TxnId, TxnInfo>& registry,
    const CertificationFunction& cert, std::size_t oracle_bound = 10) {
  std::vector<TxnId> committed;
  std::map<TxnId, std::size_t> index;
  for (const HistoryAction& a : h)
    if (!a.is_certify && a.dec == Decision::Commit) {
      index[a.txn] = committed.size();
      committed.push_back(a.txn);
    }
  if (committed.size() > oracle_bound) return CorrectnessVerdict::Skipped;
  if (committed.empty()) return CorrectnessVerdict::Correct;

  const std::size_t n = committed.size();
  std::vector<Payload> payload(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = registry.find(committed[i]);
    if (it == registry.end()) return CorrectnessVerdict::Incorrect;
    payload[i] = it->second.payload;
  }

  // precedence: decide(a) before certify(b) forces a before b
  std::vector<std::uint32_t> preds(n, 0);
  {
    std::map<TxnId, std::uint64_t> cseq, dseq;
    for (const HistoryAction& a : h) {
      if (!index.count(a.txn)) continue;
      (a.is_certify ? cseq : dseq)[a.txn] = a.seq;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && dseq.count(committed[i]) && cseq.count(committed[j]) &&
            dseq[committed[i]] < cseq[committed[j]])
          preds[j] |= 1u << i;
  }

  std::set<std::uint32_t> dead;
  const std::uint32_t full = n == 32 ? ~0u : (1u << n) - 1;

  std::vector<std::uint32_t> stack{0};
  std::set<std::uint32_t> seen{0};
  while (!stack.empty()) {
    std::uint32_t mask = stack.back();
    stack.pop_back();
    if (mask == full) return CorrectnessVerdict::Correct;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) continue;
      if ((preds[i] & mask) != preds[i]) continue;
      PayloadSet before;
      for (std::size_t j = 0; j < n; ++j)
        if (mask & (1u << j)) before.push_back(payload[j]);
      if (cert.global(before, payload[i]) != Decision::Commit) continue;
      std::uint32_t next = mask | (1u << i);
      if (seen.insert(next).second) stack.push_back(next);
    }
  }
  return CorrectnessVerdict::Incorrect;
}

inline CorrectnessVerdict check_correct(const Trace& tr,
                                        const CertificationFunction& cert,
                                        std::size_t oracle_bound = 10) {
  return check_correct(build_history(tr), tr.registry, cert, oracle_bound);
}

/// Longest causal hop chain from the certify invocation to the client
/// learning the decision, with unit-latency links; self-deliveries cost
/// nothing. Returns no value for undecided transactions.
inline std::optional<std::uint64_t> count_delays(const Trace& tr, TxnId t) {
  std::uint64_t certify_seq = 0, decide_seq = 0;
  for (const TraceEvent& ev : tr.events) {
    if (ev.kind == EvKind::Certify && ev.txn == t) certify_seq = ev.seq;
    if (ev.kind == EvKind::ClientDecide && ev.txn == t && decide_seq == 0)
      decide_seq = ev.seq;
  }
  if (certify_seq == 0 || decide_seq == 0) return std::nullopt;

  constexpr std::int64_t kUnreach = -1;
  std::map<std::uint64_t, std::int64_t> dist;
  for (const TraceEvent& ev : tr.events) {
    std::int64_t d = kUnreach;
    if (ev.seq == certify_seq) d = 0;
    bool delivery = ev.kind == EvKind::Deliver ||
                    ev.kind == EvKind::ClientDecide ||
                    ev.kind == EvKind::RdmaAck || ev.kind == EvKind::CsStep;
    for (std::size_t i = 0; i < ev.parents.size(); ++i) {
      auto it = dist.find(ev.parents[i]);
      if (it == dist.end() || it->second == kUnreach) continue;
      // the first parent is the message whose delivery this event is; the
      // rest are state dependencies and add no hop
      std::int64_t hop =
          (i == 0 && delivery && ev.src != ev.actor) ? 1 : 0;
      d = std::max(d, it->second + hop);
    }
    if (d != kUnreach) dist[ev.seq] = d;
  }
  auto it = dist.find(decide_seq);
  if (it == dist.end() || it->second == kUnreach) return std::nullopt;
  return static_cast<std::uint64_t>(it->second);
}

}  // namespace tcs
