// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#include <random>

#include "catch2/catch_amalgamated.hpp"
#include "tcs/certification.hpp"
#include "tcs/payload.hpp"

using namespace tcs;

namespace {

// Independent oracle: evaluates the serializability predicates by brute
// force over every (object, version) pair, structured differently from the
// library implementation.
Decision oracle_global(const PayloadSet& committed, const Payload& l) {
  bool ok = true;
  for (const Payload& prev : committed)
    for (const auto& [wx, _] : prev.writes)
      for (const auto& [rx, rv] : l.reads)
        if (wx == rx && prev.commit_version > rv) ok = false;
  return ok ? Decision::Commit : Decision::Abort;
}

Decision oracle_fs(ShardId s, const ShardMap& m, const PayloadSet& committed,
                   const Payload& l) {
  PayloadSet proj;
  for (const Payload& p : committed) proj.push_back(project(p, s, m));
  return oracle_global(proj, project(l, s, m));
}

Decision oracle_gs(ShardId s, const ShardMap& m, const PayloadSet& prepared,
                   const Payload& l) {
  bool ok = true;
  for (const Payload& p : prepared) {
    for (const auto& [x, _] : l.reads)
      if (m.shard_of(x) == s && p.writes.count(x)) ok = false;
    for (const auto& [x, _] : l.writes)
      if (m.shard_of(x) == s && p.reads.count(x)) ok = false;
  }
  return ok ? Decision::Commit : Decision::Abort;
}

struct Gen {
  std::mt19937_64 rng{20260809};
  ShardMap map{3};

  Payload payload(std::uint32_t max_obj = 8) {
    Payload l;
    std::uint32_t n = 1 + rng() % 3;
    Version maxv = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
      ObjectId x = rng() % max_obj;
      Version v = rng() % 5;
      l.reads[x] = v;
      maxv = std::max(maxv, v);
    }
    for (const auto& [x, _] : l.reads)
      if (rng() % 2) l.writes[x] = "v" + std::to_string(rng() % 100);
    l.commit_version = maxv + 1 + rng() % 3;
    return l;
  }

  PayloadSet payload_set(std::uint32_t max_size = 4) {
    PayloadSet s;
    std::uint32_t n = rng() % (max_size + 1);
    for (std::uint32_t i = 0; i < n; ++i) s.push_back(payload());
    return s;
  }
};

}  // namespace

TEST_CASE("decision meet operator") {
  CHECK(meet(Decision::Commit, Decision::Commit) == Decision::Commit);
  CHECK(meet(Decision::Commit, Decision::Abort) == Decision::Abort);
  CHECK(meet(Decision::Abort, Decision::Abort) == Decision::Abort);
  SECTION("commutative, associative, idempotent over all inputs") {
    for (Decision a : {Decision::Commit, Decision::Abort})
      for (Decision b : {Decision::Commit, Decision::Abort}) {
        CHECK(meet(a, b) == meet(b, a));
        CHECK(meet(a, a) == a);
        for (Decision c : {Decision::Commit, Decision::Abort})
          CHECK(meet(meet(a, b), c) == meet(a, meet(b, c)));
      }
  }
}

TEST_CASE("payload projection") {
  ShardMap m{2};  // objects 0,2,4.. on shard 0; 1,3,5.. on shard 1
  Payload l;
  l.reads = {{0, 1}, {1, 2}};
  l.writes = {{0, "a"}};
  l.commit_version = 3;

  SECTION("keeps only owned objects") {
    Payload p = project(l, 0, m);
    CHECK(p.reads == std::map<ObjectId, Version>{{0, 1}});
    CHECK(p.writes == std::map<ObjectId, Value>{{0, "a"}});
    CHECK(p.commit_version == 3);
  }
  SECTION("empty payload projects to empty") {
    CHECK(project(Payload{}, 0, m).empty());
    CHECK(project(Payload{}, 1, m).empty());
  }
  SECTION("payload touching no object of the shard is empty-shaped") {
    Payload only1;
    only1.reads = {{1, 1}};
    only1.commit_version = 2;
    CHECK(project(only1, 0, m).empty());
  }
  SECTION("idempotent") {
    Gen g;
    for (int i = 0; i < 200; ++i) {
      Payload x = g.payload();
      for (ShardId s = 0; s < 3; ++s) {
        Payload once = project(x, s, g.map);
        CHECK(project(once, s, g.map) == once);
      }
    }
  }
}

TEST_CASE("shards_of") {
  ShardMap m{2};
  Payload l;
  l.reads = {{0, 1}, {1, 1}};
  l.commit_version = 2;
  CHECK(shards_of(l, m) == std::set<ShardId>{0, 1});
  CHECK(shards_of(Payload{}, m).empty());
  Payload one;
  one.reads = {{2, 0}};
  one.commit_version = 1;
  CHECK(shards_of(one, m) == std::set<ShardId>{0});
}

TEST_CASE("global certification") {
  ShardMap m{3};
  SerializabilityCertifier cert(m);

  SECTION("empty set commits anything") {
    Gen g;
    for (int i = 0; i < 50; ++i)
      CHECK(cert.global({}, g.payload()) == Decision::Commit);
  }
  SECTION("overwritten read version aborts") {
    Payload l;
    l.reads = {{0, 1}};
    l.commit_version = 2;
    Payload w;
    w.reads = {{0, 1}};
    w.writes = {{0, "b"}};
    w.commit_version = 2;
    CHECK(cert.global({w}, l) == Decision::Abort);
  }
  SECTION("writer of an unrelated object does not conflict") {
    Payload l;
    l.reads = {{0, 1}};
    l.commit_version = 2;
    Payload w;
    w.reads = {{1, 0}};
    w.writes = {{1, "y"}};
    w.commit_version = 5;
    CHECK(cert.global({w}, l) == oracle_global({w}, l));
    CHECK(cert.global({w}, l) == Decision::Commit);
  }
  SECTION("agrees with the brute-force oracle") {
    Gen g;
    for (int i = 0; i < 2000; ++i) {
      PayloadSet L = g.payload_set();
      Payload l = g.payload();
      CHECK(cert.global(L, l) == oracle_global(L, l));
    }
  }
}

TEST_CASE("shard-local certification against committed (f_s)") {
  ShardMap m{3};
  SerializabilityCertifier cert(m);
  Gen g;

  SECTION("empty payload always commits") {
    for (int i = 0; i < 100; ++i)
      for (ShardId s = 0; s < 3; ++s)
        CHECK(cert.committed_local(s, g.payload_set(), Payload{}) ==
              Decision::Commit);
  }
  SECTION("conflicting writer inside the shard aborts") {
    Payload l;
    l.reads = {{3, 1}};  // shard 0 of 3
    l.commit_version = 2;
    Payload w;
    w.reads = {{3, 1}};
    w.writes = {{3, "x"}};
    w.commit_version = 2;
    CHECK(cert.committed_local(0, {w}, l) == Decision::Abort);
  }
  SECTION("same conflict outside the shard commits") {
    Payload l;
    l.reads = {{4, 1}};  // shard 1
    l.commit_version = 2;
    Payload w;
    w.reads = {{4, 1}};
    w.writes = {{4, "x"}};
    w.commit_version = 2;
    CHECK(cert.committed_local(0, {w}, l) == oracle_fs(0, m, {w}, l));
    CHECK(cert.committed_local(0, {w}, l) == Decision::Commit);
  }
  SECTION("agrees with the brute-force oracle") {
    for (int i = 0; i < 2000; ++i) {
      PayloadSet L = g.payload_set();
      Payload l = g.payload();
      for (ShardId s = 0; s < 3; ++s)
        CHECK(cert.committed_local(s, L, l) == oracle_fs(s, m, L, l));
    }
  }
}

TEST_CASE("shard-local certification against prepared (g_s)") {
  ShardMap m{3};
  SerializabilityCertifier cert(m);
  Gen g;

  SECTION("reading an object written by a prepared txn aborts") {
    Payload p;
    p.reads = {{0, 0}};
    p.writes = {{0, "w"}};
    p.commit_version = 1;
    Payload l;
    l.reads = {{0, 0}};
    l.commit_version = 1;
    CHECK(cert.prepared_local(0, {p}, l) == Decision::Abort);
  }
  SECTION("writing an object read by a prepared txn aborts") {
    Payload p;
    p.reads = {{0, 0}};
    p.commit_version = 1;
    Payload l;
    l.reads = {{0, 0}};
    l.writes = {{0, "w"}};
    l.commit_version = 1;
    CHECK(cert.prepared_local(0, {p}, l) == Decision::Abort);
  }
  SECTION("disjoint object sets commit") {
    for (int i = 0; i < 500; ++i) {
      Payload p = g.payload(4);
      Payload l;
      l.reads = {{100, 0}};
      l.writes = {{100, "w"}};
      l.commit_version = 1;
      for (ShardId s = 0; s < 3; ++s)
        CHECK(cert.prepared_local(s, {p}, l) == oracle_gs(s, m, {p}, l));
    }
  }
  SECTION("agrees with the brute-force oracle") {
    for (int i = 0; i < 2000; ++i) {
      PayloadSet L = g.payload_set();
      Payload l = g.payload();
      for (ShardId s = 0; s < 3; ++s)
        CHECK(cert.prepared_local(s, L, l) == oracle_gs(s, m, L, l));
    }
  }
}

TEST_CASE("certification algebra properties") {
  ShardMap m{3};
  SerializabilityCertifier cert(m);
  Gen g;
  const int kRounds = 12000;

  SECTION("distributivity of f, f_s and g_s") {
    for (int i = 0; i < kRounds; ++i) {
      PayloadSet L1 = g.payload_set(3);
      PayloadSet L2 = g.payload_set(3);
      Payload l = g.payload();
      PayloadSet uni = L1;
      uni.insert(uni.end(), L2.begin(), L2.end());
      REQUIRE(cert.global(uni, l) ==
              meet(cert.global(L1, l), cert.global(L2, l)));
      ShardId s = i % 3;
      REQUIRE(cert.committed_local(s, uni, l) ==
              meet(cert.committed_local(s, L1, l),
                   cert.committed_local(s, L2, l)));
      REQUIRE(cert.prepared_local(s, uni, l) ==
              meet(cert.prepared_local(s, L1, l),
                   cert.prepared_local(s, L2, l)));
    }
  }
  SECTION("global and shard-local checks match") {
    for (int i = 0; i < kRounds; ++i) {
      PayloadSet L = g.payload_set(3);
      Payload l = g.payload();
      bool locals = true;
      for (ShardId s = 0; s < 3; ++s) {
        PayloadSet proj;
        for (const Payload& p : L) proj.push_back(project(p, s, m));
        if (cert.committed_local(s, proj, project(l, s, m)) !=
            Decision::Commit)
          locals = false;
      }
      REQUIRE((cert.global(L, l) == Decision::Commit) == locals);
    }
  }
  SECTION("prepared check is no weaker than the committed check") {
    for (int i = 0; i < kRounds; ++i) {
      PayloadSet L = g.payload_set(3);
      Payload l = g.payload();
      ShardId s = i % 3;
      if (cert.prepared_local(s, L, l) == Decision::Commit)
        REQUIRE(cert.committed_local(s, L, l) == Decision::Commit);
    }
  }
  SECTION("prepared check commutes") {
    for (int i = 0; i < kRounds; ++i) {
      Payload l = g.payload();
      Payload l2 = g.payload();
      ShardId s = i % 3;
      if (cert.prepared_local(s, {l}, l2) == Decision::Commit)
        REQUIRE(cert.committed_local(s, {l2}, l) == Decision::Commit);
    }
  }
}
