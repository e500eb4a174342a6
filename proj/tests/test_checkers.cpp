// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#include <algorithm>
#include <random>

#include "catch2/catch_amalgamated.hpp"
#include "tcs/check/correctness.hpp"
#include "tcs/check/report.hpp"
#include "tcs/check/tcsll.hpp"
#include "tcs/sim/builtins.hpp"
#include "tcs/sim/engine.hpp"

using namespace tcs;

namespace {

// Test-only exhaustive oracle: tries every permutation of the committed
// transactions.
CorrectnessVerdict naive_check_correct(const History& h,
                                       const std::map<TxnId, TxnInfo>& reg,
                                       const CertificationFunction& cert) {
  std::vector<TxnId> committed;
  for (const HistoryAction& a : h)
    if (!a.is_certify && a.dec == Decision::Commit) committed.push_back(a.txn);
  if (committed.empty()) return CorrectnessVerdict::Correct;

  std::map<TxnId, std::uint64_t> cseq, dseq;
  for (const HistoryAction& a : h) (a.is_certify ? cseq : dseq)[a.txn] = a.seq;

  std::sort(committed.begin(), committed.end());
  do {
    bool ok = true;
    for (std::size_t i = 0; ok && i < committed.size(); ++i)
      for (std::size_t j = i + 1; ok && j < committed.size(); ++j)
        if (dseq.count(committed[j]) && cseq.count(committed[i]) &&
            dseq[committed[j]] < cseq[committed[i]])
          ok = false;  // j really decided before i certified
    if (ok) {
      PayloadSet before;
      for (TxnId t : committed) {
        if (cert.global(before, reg.at(t).payload) != Decision::Commit) {
          ok = false;
          break;
        }
        before.push_back(reg.at(t).payload);
      }
    }
    if (ok) return CorrectnessVerdict::Correct;
  } while (std::next_permutation(committed.begin(), committed.end()));
  return CorrectnessVerdict::Incorrect;
}

HistoryAction certify(TxnId t, std::uint64_t seq) {
  return HistoryAction{true, t, seq, Decision::Commit};
}
HistoryAction decide(TxnId t, std::uint64_t seq, Decision d) {
  return HistoryAction{false, t, seq, d};
}

Payload rw(std::initializer_list<std::pair<ObjectId, Version>> reads,
           std::initializer_list<ObjectId> writes, Version vc) {
  Payload l;
  for (auto [x, v] : reads) l.reads[x] = v;
  for (ObjectId x : writes) l.writes[x] = "w";
  l.commit_version = vc;
  return l;
}

}  // namespace

TEST_CASE("prefix order with holes") {
  std::map<Slot, LogSlot> alpha;
  alpha[1] = LogSlot{1, {}, Decision::Commit, std::nullopt, Phase::Prepared,
                     kNoOrigin};
  alpha[2] = LogSlot{2, {}, Decision::Commit, std::nullopt, Phase::Prepared,
                     kNoOrigin};

  SECTION("identical sequences") {
    Log beta(alpha.begin(), alpha.end());
    CHECK(prefix_holes(beta, 2, alpha));
  }
  SECTION("holes anywhere below the top are tolerated") {
    Log beta;
    beta[2] = alpha[2];
    CHECK(prefix_holes(beta, 2, alpha));
  }
  SECTION("an all-holes prefix fails the length condition") {
    Log beta;
    CHECK_FALSE(prefix_holes(beta, 2, alpha));
  }
  SECTION("a mismatched filled entry fails") {
    Log beta;
    beta[1] = alpha[1];
    beta[2] = alpha[2];
    beta[1].txn = 99;
    CHECK_FALSE(prefix_holes(beta, 2, alpha));
  }
  SECTION("an entry beyond the reference length fails") {
    Log beta;
    beta[2] = alpha[2];
    beta[3] =
        LogSlot{3, {}, Decision::Commit, std::nullopt, Phase::Prepared, 0};
    CHECK_FALSE(prefix_holes(beta, 3, alpha));
  }
}

TEST_CASE("legal linearization search") {
  ShardMap map{2};
  SerializabilityCertifier cert(map);

  SECTION("a single committed transaction is correct") {
    std::map<TxnId, TxnInfo> reg;
    reg[1] = TxnInfo{rw({{0, 0}}, {0}, 1), {0}, 9};
    History h{certify(1, 1), decide(1, 2, Decision::Commit)};
    CHECK(check_correct(h, reg, cert) == CorrectnessVerdict::Correct);
  }

  SECTION("real-time order pins conflicting commits") {
    // txn 2 read version 1 of x, written by txn 1; decided after 1 decided
    std::map<TxnId, TxnInfo> reg;
    reg[1] = TxnInfo{rw({{0, 0}}, {0}, 1), {0}, 9};
    reg[2] = TxnInfo{rw({{0, 1}}, {0}, 2), {0}, 9};
    History h{certify(1, 1), decide(1, 2, Decision::Commit), certify(2, 3),
              decide(2, 4, Decision::Commit)};
    CHECK(check_correct(h, reg, cert) == CorrectnessVerdict::Correct);
    // flipping the real-time order makes txn 1 a lost update: after txn 2
    // committed with a write at version 2, txn 1's read of version 0 is stale
    History bad{certify(2, 1), decide(2, 2, Decision::Commit), certify(1, 3),
                decide(1, 4, Decision::Commit)};
    CHECK(check_correct(bad, reg, cert) == CorrectnessVerdict::Incorrect);
  }

  SECTION("mutually conflicting commits have no legal order") {
    std::map<TxnId, TxnInfo> reg;
    reg[1] = TxnInfo{rw({{0, 0}, {1, 0}}, {0, 1}, 1), {0, 1}, 9};
    reg[2] = TxnInfo{rw({{0, 0}, {1, 0}}, {0, 1}, 2), {0, 1}, 9};
    History h{certify(1, 1), certify(2, 2), decide(1, 3, Decision::Commit),
              decide(2, 4, Decision::Commit)};
    CHECK(check_correct(h, reg, cert) == CorrectnessVerdict::Incorrect);
  }

  SECTION("histories above the bound are skipped, not guessed") {
    std::map<TxnId, TxnInfo> reg;
    History h;
    for (TxnId t = 1; t <= 4; ++t) {
      reg[t] = TxnInfo{rw({{t, 0}}, {t}, 1), {t % 2}, 9};
      h.push_back(certify(t, t * 2));
      h.push_back(decide(t, t * 2 + 1, Decision::Commit));
    }
    CHECK(check_correct(h, reg, cert, 3) == CorrectnessVerdict::Skipped);
    CHECK(check_correct(h, reg, cert, 4) == CorrectnessVerdict::Correct);
  }

  SECTION("agrees with the exhaustive oracle on random histories") {
    std::mt19937_64 rng(99);
    for (int round = 0; round < 400; ++round) {
      std::map<TxnId, TxnInfo> reg;
      History h;
      std::uint32_t n = 2 + rng() % 5;  // up to 6 committed transactions
      std::uint64_t seq = 1;
      std::vector<TxnId> open;
      for (TxnId t = 1; t <= n; ++t) {
        Payload l;
        std::uint32_t k = 1 + rng() % 2;
        Version maxv = 0;
        for (std::uint32_t i = 0; i < k; ++i) {
          ObjectId x = rng() % 4;
          Version v = rng() % 3;
          l.reads[x] = v;
          maxv = std::max(maxv, v);
        }
        for (const auto& [x, _] : l.reads)
          if (rng() % 2) l.writes[x] = "w";
        l.commit_version = maxv + 1 + rng() % 2;
        reg[t] = TxnInfo{l, shards_of(l, map), 9};
        h.push_back(certify(t, seq++));
        open.push_back(t);
        while (!open.empty() && rng() % 2) {
          TxnId done = open[rng() % open.size()];
          open.erase(std::find(open.begin(), open.end(), done));
          h.push_back(decide(done, seq++, Decision::Commit));
        }
      }
      for (TxnId done : open) h.push_back(decide(done, seq++, Decision::Commit));
      CHECK(check_correct(h, reg, cert) == naive_check_correct(h, reg, cert));
    }
  }
}

TEST_CASE("constraint checking on extracted assignments") {
  SECTION("an empty trace passes") {
    Trace tr;
    tr.model = Model::Mp;
    tr.shard_count = 2;
    CHECK(check_tcsll(tr).empty());
  }
  SECTION("protocol traces pass; corrupting a position breaks uniqueness") {
    Trace tr = run_scenario(fuzz_scenario(Model::Mp, 17));
    TcsLlAssignment asg = extract_assignment(tr);
    REQUIRE(check_tcsll(tr, asg).empty());
    // swap two positions within one shard
    std::vector<std::pair<TxnId, ShardId>> keys;
    for (auto& [key, e] : asg.entries)
      if (key.second == 0) keys.push_back(key);
    REQUIRE(keys.size() >= 2);
    asg.entries.at(keys[0]).pos = asg.entries.at(keys[1]).pos;
    auto violations = check_tcsll(tr, asg);
    bool unique_violated = false;
    for (const Violation& v : violations)
      if (v.check == "tcsll-unique-pos") unique_violated = true;
    CHECK(unique_violated);
  }
}

TEST_CASE("invariant checking over traces") {
  SECTION("a failure-free run passes everything") {
    Scenario sc = fuzz_scenario(Model::Mp, 33);
    sc.directives.clear();
    Trace tr = run_scenario(sc);
    CHECK(check_invariants(tr).empty());
  }
  SECTION("crash and reconfiguration fuzz passes") {
    for (std::uint64_t seed : {101, 202, 303}) {
      Trace tr = run_scenario(fuzz_scenario(Model::Mp, seed));
      CAPTURE(seed);
      CHECK(check_invariants(tr).empty());
      CHECK(check_tcsll(tr).empty());
    }
  }
  SECTION("the naive one-sided variant trips the decision invariants") {
    Trace tr = run_scenario(*builtin_scenario("fig4a", Model::NaiveRdma));
    std::vector<Violation> v = check_invariants(tr);
    bool inv4b = false, inv13 = false;
    for (const Violation& each : v) {
      if (each.check == "inv4b") inv4b = true;
      if (each.check == "inv13") inv13 = true;
      CHECK_FALSE(each.window.empty());  // counterexample window attached
    }
    CHECK(inv4b);
    CHECK(inv13);
  }
}

TEST_CASE("unique decisions") {
  SECTION("empty trace passes") {
    Trace tr;
    CHECK(check_unique_decisions(tr).empty());
  }
  SECTION("fuzz traces pass") {
    Trace tr = run_scenario(fuzz_scenario(Model::Mp, 55));
    CHECK(check_unique_decisions(tr).empty());
  }
  SECTION("the stale-coordinator schedule is caught") {
    Trace tr = run_scenario(*builtin_scenario("fig4a", Model::NaiveRdma));
    auto v = check_unique_decisions(tr);
    bool contradictory_client_decisions = false;
    for (const Violation& each : v)
      if (each.check == "inv4b") contradictory_client_decisions = true;
    CHECK(contradictory_client_decisions);
  }
}

TEST_CASE("checkers are pure over traces") {
  Trace tr = run_scenario(fuzz_scenario(Model::Rdma, 77));
  CheckReport a = run_checks(tr);
  CheckReport b = run_checks(tr);
  CHECK(a.pass() == b.pass());
  CHECK(a.invariant_violations.size() == b.invariant_violations.size());
  CHECK(a.tcsll_violations.size() == b.tcsll_violations.size());
  CHECK(a.correctness == b.correctness);
}
