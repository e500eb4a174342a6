// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#include <random>

#include "catch2/catch_amalgamated.hpp"
#include "tcs/rdma_channel.hpp"

using namespace tcs;

namespace {

Message probe(Epoch e) { return Message{Probe{e}}; }

std::vector<RdmaEntry> drain(RdmaChannel& ch, ProcessId owner) {
  std::vector<RdmaEntry> admitted;
  auto out = ch.pull(owner, &admitted);
  for (const RdmaEntry& e : admitted) {
    ch.mark_acked(e.id);
    auto more = ch.pull(owner, &admitted);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

}  // namespace

TEST_CASE("open and close") {
  RdmaChannel ch(4);

  SECTION("a send into an unopened buffer is rejected") {
    std::uint64_t id = 0;
    CHECK(ch.send(1, 2, probe(1), 0, &id) == SendOutcome::Rejected);
  }
  SECTION("open admits, close rejects, reopen admits again") {
    ch.open(2, 1);
    std::uint64_t id = 0;
    CHECK(ch.send(1, 2, probe(1), 0, &id) == SendOutcome::Accepted);
    ch.close(2, 1);
    CHECK(ch.send(1, 2, probe(2), 0, &id) == SendOutcome::Rejected);
    ch.close(2, 1);  // idempotent
    ch.open(2, 1);
    CHECK(ch.send(1, 2, probe(3), 0, &id) == SendOutcome::Accepted);
  }
  SECTION("entries acked before close stay deliverable") {
    ch.open(2, 1);
    std::uint64_t id = 0;
    REQUIRE(ch.send(1, 2, probe(1), 0, &id) == SendOutcome::Accepted);
    ch.mark_acked(id);
    ch.close(2, 1);
    std::vector<RdmaEntry> admitted;
    auto got = ch.pull(2, &admitted);
    REQUIRE(got.size() == 1);
    CHECK(got[0].msg.is<Probe>());
  }
}

TEST_CASE("send blocks on a full buffer until the owner pulls") {
  RdmaChannel ch(2);
  ch.open(2, 1);
  std::uint64_t a = 0, b = 0, c = 0;
  REQUIRE(ch.send(1, 2, probe(1), 0, &a) == SendOutcome::Accepted);
  REQUIRE(ch.send(1, 2, probe(2), 0, &b) == SendOutcome::Accepted);
  CHECK(ch.send(1, 2, probe(3), 0, &c) == SendOutcome::Blocked);
  ch.mark_acked(a);
  ch.mark_acked(b);
  std::vector<RdmaEntry> admitted;
  auto got = ch.pull(2, &admitted);
  CHECK(got.size() == 2);
  REQUIRE(admitted.size() == 1);  // the blocked write landed
  CHECK(admitted[0].msg.as<Probe>()->epoch == 3);
}

TEST_CASE("pull") {
  RdmaChannel ch(8);
  ch.open(5, 1);
  ch.open(5, 2);

  SECTION("nothing pending yields nothing") {
    std::vector<RdmaEntry> admitted;
    CHECK(ch.pull(5, &admitted).empty());
    CHECK(ch.quiescent(5));
  }
  SECTION("only acked entries are delivered, in send order per sender") {
    std::uint64_t ids[4];
    REQUIRE(ch.send(1, 5, probe(1), 0, &ids[0]) == SendOutcome::Accepted);
    REQUIRE(ch.send(1, 5, probe(2), 0, &ids[1]) == SendOutcome::Accepted);
    REQUIRE(ch.send(2, 5, probe(3), 0, &ids[2]) == SendOutcome::Accepted);
    ch.mark_acked(ids[0]);
    ch.mark_acked(ids[2]);
    std::vector<RdmaEntry> admitted;
    auto got = ch.pull(5, &admitted);
    REQUIRE(got.size() == 2);
    CHECK(got[0].sender == 1);
    CHECK(got[0].msg.as<Probe>()->epoch == 1);
    CHECK(got[1].sender == 2);
    // the unacked entry from sender 1 stays behind
    CHECK_FALSE(ch.has_deliverable(5));
    ch.mark_acked(ids[1]);
    got = ch.pull(5, &admitted);
    REQUIRE(got.size() == 1);
    CHECK(got[0].msg.as<Probe>()->epoch == 2);
  }
}

TEST_CASE("per-sender FIFO holds under random traffic") {
  std::mt19937_64 rng(7);
  RdmaChannel ch(64);
  for (ProcessId s = 1; s <= 3; ++s) ch.open(0, s);
  std::map<ProcessId, Epoch> next_sent, next_seen;
  std::vector<std::uint64_t> unacked;
  for (int round = 0; round < 500; ++round) {
    ProcessId s = 1 + rng() % 3;
    std::uint64_t id = 0;
    if (ch.send(s, 0, probe(++next_sent[s]), 0, &id) == SendOutcome::Accepted)
      unacked.push_back(id);
    if (!unacked.empty() && rng() % 2) {
      // acks fire in id order, mirroring the per-pair ack queues
      ch.mark_acked(unacked.front());
      unacked.erase(unacked.begin());
    }
    if (rng() % 4 == 0) {
      std::vector<RdmaEntry> admitted;
      for (const RdmaEntry& e : ch.pull(0, &admitted)) {
        Epoch expect = ++next_seen[e.sender];
        REQUIRE(e.msg.as<Probe>()->epoch == expect);
      }
    }
  }
}

TEST_CASE("flush leaves no acked entry undelivered") {
  RdmaChannel ch(8);
  ch.open(9, 1);
  ch.open(9, 2);
  std::uint64_t ids[3];
  REQUIRE(ch.send(1, 9, probe(1), 0, &ids[0]) == SendOutcome::Accepted);
  REQUIRE(ch.send(2, 9, probe(2), 0, &ids[1]) == SendOutcome::Accepted);
  REQUIRE(ch.send(2, 9, probe(3), 0, &ids[2]) == SendOutcome::Accepted);
  ch.mark_acked(ids[0]);
  ch.mark_acked(ids[1]);
  // ids[2] is written but not acked: flush need not deliver it
  std::vector<RdmaEntry> admitted;
  auto got = ch.pull(9, &admitted);
  CHECK(got.size() == 2);
  CHECK(ch.quiescent(9));
}

TEST_CASE("crash asymmetry") {
  RdmaChannel ch(8);
  ch.open(3, 1);
  std::uint64_t id = 0;
  REQUIRE(ch.send(1, 3, probe(1), 0, &id) == SendOutcome::Accepted);
  ch.mark_acked(id);

  SECTION("destroying the owner loses undelivered entries") {
    ch.destroy_owner(3);
    CHECK_FALSE(ch.has_deliverable(3));
  }
  SECTION("a dead sender's acked entries stay deliverable") {
    // nothing to do for the sender: the entry lives in the owner's memory
    std::vector<RdmaEntry> admitted;
    CHECK(ch.pull(3, &admitted).size() == 1);
  }
}
