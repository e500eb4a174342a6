// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#include "catch2/catch_amalgamated.hpp"
#include "tcs/process_mp.hpp"

using namespace tcs;

namespace {

// Two shards, two replicas each: shard 0 = {0 (leader), 1}, shard 1 =
// {2 (leader), 3}; pids 4+ form the fresh pool.
struct Fixture {
  SerializabilityCertifier cert{ShardMap{2}};
  std::map<TxnId, TxnInfo> registry;
  Ctx ctx;

  Fixture() {
    ctx.certifier = &cert;
    ctx.shard_map = ShardMap{2};
    ctx.registry = &registry;
    ctx.target_shard_size = 2;
    ctx.fresh_pool = {4, 5};
  }

  ProcessMp replica(ProcessId pid, ShardId s0, bool leader) {
    ProcessMp st;
    st.pid = pid;
    st.s0 = s0;
    st.status = leader ? Status::Leader : Status::Follower;
    st.initialized = true;
    st.new_epoch = 1;
    for (ShardId s = 0; s < 2; ++s) {
      st.epoch[s] = 1;
      st.members[s] = s == 0 ? std::set<ProcessId>{0, 1}
                             : std::set<ProcessId>{2, 3};
      st.leader[s] = s == 0 ? 0 : 2;
    }
    return st;
  }

  Payload both_shards(Version v = 0) {
    Payload l;
    l.reads = {{0, v}, {1, v}};
    l.writes = {{0, "a"}, {1, "b"}};
    l.commit_version = v + 1;
    return l;
  }

  void register_txn(TxnId t, const Payload& l, ProcessId client) {
    registry[t] = TxnInfo{l, shards_of(l, ctx.shard_map), client};
  }
};

template <typename T>
std::vector<const T*> emitted(const StepResult& r) {
  std::vector<const T*> out;
  for (const Emission& e : r.out)
    if (const T* m = e.msg.as<T>()) out.push_back(m);
  return out;
}

}  // namespace

TEST_CASE("certify sends one PREPARE per involved shard") {
  Fixture f;
  ProcessMp st = f.replica(0, 0, true);

  SECTION("two shards") {
    StepResult r;
    mp::certify(st, f.ctx, 1, f.both_shards(), 9, r);
    auto prepares = emitted<Prepare>(r);
    REQUIRE(prepares.size() == 2);
    CHECK(r.out[0].dst == 0);  // leader of shard 0 (self)
    CHECK(r.out[1].dst == 2);  // leader of shard 1
    // each leader gets only its own projection
    CHECK(prepares[0]->payload->reads.count(0) == 1);
    CHECK(prepares[0]->payload->reads.count(1) == 0);
    CHECK(prepares[1]->payload->reads.count(1) == 1);
  }
  SECTION("single shard") {
    Payload l;
    l.reads = {{0, 0}};
    l.writes = {{0, "a"}};
    l.commit_version = 1;
    StepResult r;
    mp::certify(st, f.ctx, 1, l, 9, r);
    CHECK(emitted<Prepare>(r).size() == 1);
  }
}

TEST_CASE("PREPARE handling at a leader") {
  Fixture f;
  ProcessMp st = f.replica(0, 0, true);
  Payload l = project(f.both_shards(), 0, f.ctx.shard_map);

  SECTION("fresh transaction fills the next slot and votes commit") {
    StepResult r;
    mp::on_prepare(st, f.ctx, Prepare{1, l}, 9, r);
    REQUIRE(st.next == 1);
    CHECK(st.log.at(1).txn == 1);
    CHECK(st.log.at(1).vote == Decision::Commit);
    CHECK(st.log.at(1).phase == Phase::Prepared);
    auto acks = emitted<PrepareAck>(r);
    REQUIRE(acks.size() == 1);
    CHECK(acks[0]->epoch == 1);
    CHECK(acks[0]->shard == 0);
    CHECK(acks[0]->slot == 1);
    CHECK(acks[0]->txn == 1);
    CHECK(acks[0]->vote == Decision::Commit);
    REQUIRE(r.origin.has_value());
    CHECK(r.origin->decided_commit.empty());
    CHECK(r.origin->prepared_commit.empty());
  }

  SECTION("duplicate PREPARE re-sends the stored answer unchanged") {
    StepResult r1;
    mp::on_prepare(st, f.ctx, Prepare{1, l}, 9, r1);
    ProcessMp before = st;
    StepResult r2;
    mp::on_prepare(st, f.ctx, Prepare{1, l}, 7, r2);
    CHECK(st.log == before.log);
    CHECK(st.next == before.next);
    auto acks = emitted<PrepareAck>(r2);
    REQUIRE(acks.size() == 1);
    CHECK(acks[0]->slot == 1);
    CHECK(acks[0]->vote == Decision::Commit);
    CHECK_FALSE(r2.origin.has_value());
  }

  SECTION("missing payload prepares the transaction as aborted") {
    StepResult r;
    mp::on_prepare(st, f.ctx, Prepare{1, std::nullopt}, 9, r);
    CHECK(st.log.at(1).vote == Decision::Abort);
    CHECK(st.log.at(1).payload.empty());
    auto acks = emitted<PrepareAck>(r);
    REQUIRE(acks.size() == 1);
    CHECK(acks[0]->vote == Decision::Abort);
  }

  SECTION("conflict with a prepared-commit transaction votes abort") {
    StepResult r1;
    mp::on_prepare(st, f.ctx, Prepare{1, l}, 9, r1);
    Payload rival;  // reads the object txn 1 wrote on shard 0
    rival.reads = {{0, 0}};
    rival.commit_version = 1;
    StepResult r2;
    mp::on_prepare(st, f.ctx, Prepare{2, rival}, 9, r2);
    CHECK(st.log.at(2).vote == Decision::Abort);
    REQUIRE(r2.origin.has_value());
    CHECK(r2.origin->prepared_commit == std::set<TxnId>{1});
  }
}

TEST_CASE("PREPARE_ACK handling at a coordinator") {
  Fixture f;
  ProcessMp st = f.replica(2, 1, true);  // shard-1 leader coordinates
  Payload l = f.both_shards();
  f.register_txn(1, l, 9);
  StepResult r0;
  mp::certify(st, f.ctx, 1, l, 9, r0);

  PrepareAck ack;
  ack.epoch = 1;
  ack.shard = 0;
  ack.slot = 1;
  ack.txn = 1;
  ack.payload = project(l, 0, f.ctx.shard_map);
  ack.vote = Decision::Commit;

  SECTION("matching epoch forwards an ACCEPT to the followers") {
    StepResult r;
    mp::on_prepare_ack(st, f.ctx, ack, r);
    auto accepts = emitted<Accept>(r);
    REQUIRE(accepts.size() == 1);
    CHECK(r.out[0].dst == 1);  // the only follower of shard 0
    CHECK(accepts[0]->epoch == 1);
    CHECK(accepts[0]->slot == 1);
    CHECK(accepts[0]->vote == Decision::Commit);
  }

  SECTION("gate drops a stale epoch and parks a future one") {
    st.epoch[0] = 2;
    CHECK(mp::gate(st, Message{ack}) == Gate::Drop);
    st.epoch[0] = 1;
    PrepareAck future = ack;
    future.epoch = 3;
    CHECK(mp::gate(st, Message{future}) == Gate::Park);
  }
}

TEST_CASE("ACCEPT handling at a follower") {
  Fixture f;
  ProcessMp st = f.replica(1, 0, false);
  Accept a;
  a.epoch = 1;
  a.slot = 1;
  a.txn = 1;
  a.payload.reads = {{0, 0}};
  a.payload.writes = {{0, "a"}};
  a.payload.commit_version = 1;
  a.vote = Decision::Commit;
  a.shard = 0;

  SECTION("fills a hole and acknowledges") {
    StepResult r;
    mp::on_accept(st, f.ctx, a, 2, r);
    CHECK(st.log.at(1).txn == 1);
    CHECK(st.log.at(1).phase == Phase::Prepared);
    auto acks = emitted<AcceptAck>(r);
    REQUIRE(acks.size() == 1);
    CHECK(acks[0]->shard == 0);
    CHECK(acks[0]->epoch == 1);
    CHECK(acks[0]->slot == 1);
  }

  SECTION("duplicate leaves the slot alone but still acknowledges") {
    StepResult r1;
    mp::on_accept(st, f.ctx, a, 2, r1);
    Accept dup = a;
    dup.payload.writes = {{0, "zzz"}};  // never happens; proves no overwrite
    StepResult r2;
    mp::on_accept(st, f.ctx, dup, 2, r2);
    CHECK(st.log.at(1).payload.writes.at(0) == "a");
    CHECK(emitted<AcceptAck>(r2).size() == 1);
  }

  SECTION("permanently stale epochs never acknowledge") {
    st.epoch[0] = 2;
    CHECK(mp::gate(st, Message{a}) == Gate::Drop);
  }
  SECTION("a follower ahead of the message parks it") {
    Accept future = a;
    future.epoch = 2;
    CHECK(mp::gate(st, Message{future}) == Gate::Park);
  }
  SECTION("reconfiguring processes defer") {
    st.status = Status::Reconfiguring;
    CHECK(mp::gate(st, Message{a}) == Gate::Park);
  }
}

TEST_CASE("completion trigger") {
  Fixture f;
  ProcessMp st = f.replica(0, 0, true);
  Payload l = f.both_shards();
  f.register_txn(1, l, 9);
  StepResult r0;
  mp::certify(st, f.ctx, 1, l, 9, r0);

  auto feed_prepare_ack = [&](ShardId s, Decision d, StepResult* r) {
    PrepareAck ack;
    ack.epoch = 1;
    ack.shard = s;
    ack.slot = 1;
    ack.txn = 1;
    ack.payload = project(l, s, f.ctx.shard_map);
    ack.vote = d;
    mp::on_prepare_ack(st, f.ctx, ack, *r);
  };
  auto feed_accept_ack = [&](ShardId s, ProcessId from, Decision d,
                             StepResult* r) {
    mp::on_accept_ack(st, f.ctx, AcceptAck{s, 1, 1, 1, d}, from, *r);
  };

  SECTION("fires once every follower of every shard acknowledged") {
    StepResult r1, r2, r3;
    feed_prepare_ack(0, Decision::Commit, &r1);
    feed_prepare_ack(1, Decision::Commit, &r2);
    feed_accept_ack(0, 1, Decision::Commit, &r3);
    CHECK(emitted<ClientDecision>(r3).empty());
    StepResult r4;
    feed_accept_ack(1, 3, Decision::Commit, &r4);
    auto clients = emitted<ClientDecision>(r4);
    REQUIRE(clients.size() == 1);
    CHECK(clients[0]->dec == Decision::Commit);
    CHECK(emitted<ShardDecision>(r4).size() == 4);  // both shards, 2 members
    // second evaluation never re-fires
    StepResult r5;
    feed_accept_ack(1, 3, Decision::Commit, &r5);
    CHECK(emitted<ClientDecision>(r5).empty());
  }

  SECTION("one abort vote aborts the transaction") {
    StepResult r1, r2, r3, r4;
    feed_prepare_ack(0, Decision::Commit, &r1);
    feed_prepare_ack(1, Decision::Abort, &r2);
    feed_accept_ack(0, 1, Decision::Commit, &r3);
    feed_accept_ack(1, 3, Decision::Abort, &r4);
    auto clients = emitted<ClientDecision>(r4);
    REQUIRE(clients.size() == 1);
    CHECK(clients[0]->dec == Decision::Abort);
  }

  SECTION("acknowledgements overtaken by a configuration change never count") {
    StepResult r1, r2, r3;
    feed_prepare_ack(0, Decision::Commit, &r1);
    feed_prepare_ack(1, Decision::Commit, &r2);
    feed_accept_ack(0, 1, Decision::Commit, &r3);
    StepResult rc;
    ConfigChange cc;
    cc.shard = 1;
    cc.epoch = 2;
    cc.members = {2, 4};
    cc.leader = 2;
    mp::on_config_change(st, f.ctx, cc, rc);
    CHECK(emitted<ClientDecision>(rc).empty());
    StepResult r4;
    feed_accept_ack(1, 3, Decision::Commit, &r4);  // stale epoch-1 ack
    CHECK(emitted<ClientDecision>(r4).empty());
  }

  SECTION("a shard without followers completes on the vote alone") {
    st.members[0] = {0};
    st.members[1] = {2};
    StepResult r1;
    feed_prepare_ack(0, Decision::Commit, &r1);
    CHECK(emitted<Accept>(r1).empty());
    CHECK(emitted<ClientDecision>(r1).empty());
    StepResult r2;
    feed_prepare_ack(1, Decision::Commit, &r2);
    auto clients = emitted<ClientDecision>(r2);
    REQUIRE(clients.size() == 1);
    CHECK(clients[0]->dec == Decision::Commit);
  }
}

TEST_CASE("DECISION handling") {
  Fixture f;
  ProcessMp st = f.replica(1, 0, false);
  StepResult r0;
  Accept a;
  a.epoch = 1;
  a.slot = 1;
  a.txn = 1;
  a.vote = Decision::Commit;
  a.shard = 0;
  mp::on_accept(st, f.ctx, a, 2, r0);

  SECTION("stores the decision and advances the phase") {
    StepResult r;
    mp::on_decision(st, f.ctx, ShardDecision{1, 1, Decision::Commit, 0, 1}, r);
    CHECK(st.log.at(1).phase == Phase::Decided);
    CHECK(st.log.at(1).dec == Decision::Commit);
  }
  SECTION("duplicates are idempotent") {
    StepResult r1, r2;
    mp::on_decision(st, f.ctx, ShardDecision{1, 1, Decision::Commit, 0, 1}, r1);
    mp::on_decision(st, f.ctx, ShardDecision{1, 1, Decision::Commit, 0, 1}, r2);
    CHECK(st.log.at(1).phase == Phase::Decided);
    CHECK(st.log.at(1).dec == Decision::Commit);
  }
  SECTION("reconfiguring processes defer decisions") {
    st.status = Status::Reconfiguring;
    Message m{ShardDecision{1, 1, Decision::Commit, 0, 1}};
    CHECK(mp::gate(st, m) == Gate::Park);
  }
}

TEST_CASE("probing") {
  Fixture f;
  ProcessMp st = f.replica(1, 0, false);

  SECTION("PROBE moves the process to reconfiguring and answers") {
    StepResult r;
    mp::on_probe(st, f.ctx, Probe{2}, 4, r);
    CHECK(st.status == Status::Reconfiguring);
    CHECK(st.new_epoch == 2);
    auto acks = emitted<ProbeAck>(r);
    REQUIRE(acks.size() == 1);
    CHECK(acks[0]->initialized);
    CHECK(acks[0]->epoch == 2);
    CHECK(acks[0]->shard == 0);
  }
  SECTION("an uninitialized member answers false") {
    st.initialized = false;
    StepResult r;
    mp::on_probe(st, f.ctx, Probe{2}, 4, r);
    CHECK_FALSE(emitted<ProbeAck>(r)[0]->initialized);
  }
  SECTION("stale probes are ignored") {
    st.new_epoch = 3;
    CHECK(mp::gate(st, Message{Probe{2}}) == Gate::Drop);
  }
}

TEST_CASE("reconfiguration round trip") {
  Fixture f;
  ProcessMp st = f.replica(1, 0, false);

  StepResult r1;
  mp::reconfigure(st, f.ctx, 0, {}, r1);
  REQUIRE(st.probing);
  auto reqs = emitted<CsRequest>(r1);
  REQUIRE(reqs.size() == 1);
  CHECK(reqs[0]->op == CsOpKind::GetLast);

  SECTION("a concurrent local call is rejected by the precondition") {
    StepResult r2;
    mp::reconfigure(st, f.ctx, 0, {}, r2);
    CHECK(r2.rejected);
  }

  // the service answers with the current epoch-1 configuration
  CsResponse resp;
  resp.op = CsOpKind::GetLast;
  resp.key = 0;
  resp.ok = true;
  resp.cfg.epoch = 1;
  resp.cfg.members[0] = {0, 1};
  resp.cfg.leaders[0] = 0;
  StepResult r3;
  mp::on_cs_response(st, f.ctx, resp, r3);
  CHECK(st.recon_epoch == 2);
  CHECK(emitted<Probe>(r3).size() == 2);

  SECTION("a true answer ends probing and installs via compare-and-swap") {
    StepResult r4;
    mp::on_probe_ack(st, f.ctx, ProbeAck{true, 2, 0}, 1, r4);
    REQUIRE(mp::can_end_probing(st));
    StepResult r5;
    mp::end_probing(st, f.ctx, r5);
    CHECK_FALSE(st.probing);
    auto cas = emitted<CsRequest>(r5);
    REQUIRE(cas.size() == 1);
    CHECK(cas[0]->op == CsOpKind::Cas);
    CHECK(cas[0]->epoch == 1);  // expected epoch
    CHECK(cas[0]->cfg.epoch == 2);
    CHECK(cas[0]->cfg.leaders.at(0) == 1);
    CHECK(cas[0]->cfg.members_of(0).count(1) == 1);

    SECTION("success sends NEW_CONFIG to the new leader") {
      CsResponse casr;
      casr.op = CsOpKind::Cas;
      casr.key = 0;
      casr.ok = true;
      StepResult r6;
      mp::on_cs_response(st, f.ctx, casr, r6);
      auto nc = emitted<NewConfig>(r6);
      REQUIRE(nc.size() == 1);
      CHECK(nc[0]->epoch == 2);
    }
    SECTION("losing the race abandons the attempt") {
      CsResponse casr;
      casr.op = CsOpKind::Cas;
      casr.key = 0;
      casr.ok = false;
      StepResult r6;
      mp::on_cs_response(st, f.ctx, casr, r6);
      CHECK(emitted<NewConfig>(r6).empty());
      REQUIRE_FALSE(r6.notes.empty());
    }
  }

  SECTION("uninitialized answers alone enable the descent") {
    st.probed_epoch = 3;  // pretend the probing started at epoch 3
    st.probed_members = {0, 1};
    StepResult r4;
    mp::on_probe_ack(st, f.ctx, ProbeAck{false, 2, 0}, 1, r4);
    CHECK_FALSE(mp::can_end_probing(st));
    REQUIRE(mp::can_advance_probing(st));
    StepResult r5;
    mp::advance_probing(st, f.ctx, r5);
    CHECK(st.probed_epoch == 2);
    auto reqs2 = emitted<CsRequest>(r5);
    REQUIRE(reqs2.size() == 1);
    CHECK(reqs2[0]->op == CsOpKind::Get);
    CHECK(reqs2[0]->epoch == 2);
  }

  SECTION("a true answer halts the descent") {
    st.probed_epoch = 3;
    st.probed_members = {0, 1};
    StepResult r4;
    mp::on_probe_ack(st, f.ctx, ProbeAck{false, 2, 0}, 0, r4);
    mp::on_probe_ack(st, f.ctx, ProbeAck{true, 2, 0}, 1, r4);
    CHECK_FALSE(mp::can_advance_probing(st));
    CHECK(mp::can_end_probing(st));
  }
}

TEST_CASE("membership computation") {
  Fixture f;
  ProcessMp st = f.replica(1, 0, false);
  st.probing = true;
  st.recon_epoch = 2;
  st.recon_shard = 0;

  SECTION("responders alone suffice") {
    st.probe_acks.push_back({1, true, 2, 0});
    st.probe_acks.push_back({0, true, 2, 0});
    std::vector<ProcessId> drafted;
    auto m = mp::compute_membership(st, f.ctx, 1, &drafted);
    REQUIRE(m.has_value());
    CHECK(*m == std::set<ProcessId>{0, 1});
    CHECK(drafted.empty());
  }
  SECTION("fresh processes top up the membership") {
    st.probe_acks.push_back({1, true, 2, 0});
    std::vector<ProcessId> drafted;
    auto m = mp::compute_membership(st, f.ctx, 1, &drafted);
    REQUIRE(m.has_value());
    CHECK(m->count(1) == 1);
    CHECK(m->size() == 2);
    CHECK(drafted == std::vector<ProcessId>{4});
  }
  SECTION("pool exhaustion fails explicitly, never shrinking the quorum") {
    Ctx ctx = f.ctx;
    ctx.fresh_pool.clear();
    st.probe_acks.push_back({1, true, 2, 0});
    std::vector<ProcessId> drafted;
    CHECK_FALSE(mp::compute_membership(st, ctx, 1, &drafted).has_value());
  }
}

TEST_CASE("leadership transfer") {
  Fixture f;

  SECTION("NEW_CONFIG promotes, renumbers next and ships the state") {
    ProcessMp st = f.replica(1, 0, false);
    st.log[1] = LogSlot{7, {}, Decision::Commit, std::nullopt, Phase::Prepared,
                        kNoOrigin};
    st.log[3] = LogSlot{9, {}, Decision::Commit, std::nullopt, Phase::Prepared,
                        kNoOrigin};  // hole at slot 2 stays a hole
    StepResult r;
    mp::on_new_config(st, f.ctx, NewConfig{2, {1, 4}}, 6, r);
    CHECK(st.status == Status::Leader);
    CHECK(st.epoch[0] == 2);
    CHECK(st.leader[0] == 1);
    CHECK(st.next == 3);
    auto ns = emitted<NewState>(r);
    REQUIRE(ns.size() == 1);
    CHECK(r.out[0].dst == 4);
    CHECK(ns[0]->log.size() == 2);
  }
  SECTION("an empty log restarts at zero") {
    ProcessMp st = f.replica(1, 0, false);
    StepResult r;
    mp::on_new_config(st, f.ctx, NewConfig{2, {1, 4}}, 6, r);
    CHECK(st.next == 0);
  }
  SECTION("NEW_STATE initializes a fresh process as a follower") {
    ProcessMp st;  // fresh pool process
    st.pid = 4;
    StepResult r;
    NewState ns;
    ns.epoch = 2;
    ns.shard = 0;
    ns.members = {1, 4};
    ns.log[1] = LogSlot{7, {}, Decision::Commit, Decision::Commit,
                        Phase::Decided, kNoOrigin};
    mp::on_new_state(st, f.ctx, ns, 1, r);
    CHECK(st.initialized);
    CHECK(st.status == Status::Follower);
    CHECK(st.s0 == 0);
    CHECK(st.epoch[0] == 2);
    CHECK(st.leader[0] == 1);
    CHECK(st.log.size() == 1);
    CHECK(st.new_epoch == 2);
  }
  SECTION("NEW_STATE from a superseded leader is dropped") {
    ProcessMp st = f.replica(1, 0, false);
    st.new_epoch = 3;
    NewState ns;
    ns.epoch = 2;
    CHECK(mp::gate(st, Message{ns}) == Gate::Drop);
  }
  SECTION("state replacement erases slots the new leader never saw") {
    ProcessMp st = f.replica(1, 0, false);
    st.log[1] = LogSlot{7, {}, Decision::Commit, std::nullopt, Phase::Prepared,
                        kNoOrigin};
    NewState ns;
    ns.epoch = 2;
    ns.shard = 0;
    ns.members = {1, 4};
    StepResult r;
    mp::on_new_state(st, f.ctx, ns, 4, r);
    CHECK(st.log.empty());
  }
}

TEST_CASE("CONFIG_CHANGE handling") {
  Fixture f;
  ProcessMp st = f.replica(0, 0, true);
  ConfigChange cc;
  cc.shard = 1;
  cc.epoch = 2;
  cc.members = {2, 4};
  cc.leader = 2;

  SECTION("fresh updates apply") {
    CHECK(mp::gate(st, Message{cc}) == Gate::Handle);
    StepResult r;
    mp::on_config_change(st, f.ctx, cc, r);
    CHECK(st.epoch[1] == 2);
    CHECK(st.members[1] == std::set<ProcessId>{2, 4});
  }
  SECTION("stale updates drop") {
    st.epoch[1] = 2;
    CHECK(mp::gate(st, Message{cc}) == Gate::Drop);
  }
  SECTION("own-shard updates drop") {
    cc.shard = 0;
    CHECK(mp::gate(st, Message{cc}) == Gate::Drop);
  }
}

TEST_CASE("retry") {
  Fixture f;
  ProcessMp st = f.replica(1, 0, false);
  Payload l = f.both_shards();
  f.register_txn(1, l, 9);
  StepResult r0;
  Accept a;
  a.epoch = 1;
  a.slot = 1;
  a.txn = 1;
  a.payload = project(l, 0, f.ctx.shard_map);
  a.vote = Decision::Commit;
  a.shard = 0;
  mp::on_accept(st, f.ctx, a, 2, r0);

  SECTION("a stuck prepared slot re-prepares with an empty payload") {
    StepResult r;
    mp::retry(st, f.ctx, 1, r);
    auto prepares = emitted<Prepare>(r);
    REQUIRE(prepares.size() == 2);
    CHECK_FALSE(prepares[0]->payload.has_value());
    CHECK_FALSE(prepares[1]->payload.has_value());
    CHECK(r.out[0].dst == 0);
    CHECK(r.out[1].dst == 2);
  }
  SECTION("only prepared slots may be retried") {
    StepResult rd;
    mp::on_decision(st, f.ctx, ShardDecision{1, 1, Decision::Commit, 0, 1},
                    rd);
    StepResult r;
    mp::retry(st, f.ctx, 1, r);
    CHECK(r.rejected);
  }
}
