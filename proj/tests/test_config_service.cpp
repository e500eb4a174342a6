// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#include "catch2/catch_amalgamated.hpp"
#include "tcs/config_service.hpp"

using namespace tcs;

namespace {

Configuration make_cfg(ShardId s, Epoch e, std::set<ProcessId> members,
                       ProcessId leader) {
  Configuration c;
  c.epoch = e;
  c.members[s] = std::move(members);
  c.leaders[s] = leader;
  return c;
}

}  // namespace

TEST_CASE("compare_and_swap") {
  CsState cs;
  REQUIRE(cs.compare_and_swap(0, 0, make_cfg(0, 1, {0, 1}, 0)));

  SECTION("succeeds against the last epoch and appends") {
    CHECK(cs.compare_and_swap(0, 1, make_cfg(0, 2, {1, 2}, 1)));
    CHECK(cs.get_last(0).epoch == 2);
  }
  SECTION("fails on mismatch and leaves the sequence unchanged") {
    REQUIRE(cs.compare_and_swap(0, 1, make_cfg(0, 2, {1, 2}, 1)));
    CHECK_FALSE(cs.compare_and_swap(0, 1, make_cfg(0, 3, {2, 3}, 2)));
    CHECK(cs.get_last(0).epoch == 2);
    CHECK(cs.sequences().at(0).size() == 2);
  }
  SECTION("two attempts with the same expected epoch: exactly one wins") {
    bool a = cs.compare_and_swap(0, 1, make_cfg(0, 2, {1, 2}, 1));
    bool b = cs.compare_and_swap(0, 1, make_cfg(0, 2, {0, 3}, 0));
    CHECK(a);
    CHECK_FALSE(b);
    CHECK(cs.get_last(0).members_of(0) == std::set<ProcessId>{1, 2});
  }
}

TEST_CASE("get_last and get") {
  CsState cs;
  REQUIRE(cs.compare_and_swap(0, 0, make_cfg(0, 1, {0, 1}, 0)));
  REQUIRE(cs.compare_and_swap(1, 0, make_cfg(1, 1, {2, 3}, 2)));

  SECTION("bootstrap lookups") {
    CHECK(cs.get_last(0).epoch == 1);
    CHECK(cs.get(0, 1).has_value());
    CHECK(cs.get(0, 1)->leader_of(0) == 0);
  }
  SECTION("after an installation") {
    REQUIRE(cs.compare_and_swap(0, 1, make_cfg(0, 2, {1, 4}, 1)));
    CHECK(cs.get_last(0).epoch == 2);
    CHECK(cs.get(0, 2)->members_of(0) == std::set<ProcessId>{1, 4});
    CHECK(cs.get(0, 1)->members_of(0) == std::set<ProcessId>{0, 1});
  }
  SECTION("an unrelated shard's reconfiguration does not disturb lookups") {
    REQUIRE(cs.compare_and_swap(1, 1, make_cfg(1, 2, {3, 4}, 3)));
    CHECK(cs.get_last(0).epoch == 1);
    CHECK(cs.get(0, 1).has_value());
  }
  SECTION("unknown epoch lookup fails explicitly") {
    CHECK_FALSE(cs.get(0, 7).has_value());
  }
}

TEST_CASE("epoch sequences are strictly increasing and append-only") {
  CsState cs;
  REQUIRE(cs.compare_and_swap(0, 0, make_cfg(0, 1, {0, 1}, 0)));
  Epoch e = 1;
  for (int i = 0; i < 5; ++i) {
    REQUIRE(cs.compare_and_swap(0, e, make_cfg(0, e + 1, {0, 1}, 0)));
    e += 1;
  }
  const auto& seq = cs.sequences().at(0);
  for (std::size_t i = 1; i < seq.size(); ++i)
    CHECK(seq[i].epoch > seq[i - 1].epoch);
  CHECK(seq.size() == 6);
}

TEST_CASE("configuration well-formedness") {
  Configuration c = make_cfg(0, 1, {0, 1}, 0);
  CHECK(c.well_formed());
  c.leaders[0] = 5;  // leader outside the membership
  CHECK_FALSE(c.well_formed());
  c = make_cfg(0, 0, {0}, 0);  // epoch below 1
  CHECK_FALSE(c.well_formed());
}
