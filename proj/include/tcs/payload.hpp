// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <algorithm>
#include <map>
#include <set>

#include "tcs/types.hpp"

namespace tcs {

/// Result of a transaction's optimistic execution: the versions it read, the
/// values it wrote and the version its writes are to be installed at.
///
/// Invariants: one entry per object in each set; every written object is also
/// read; commit_version is strictly greater than every read version. The
/// empty payload has both sets empty.
struct Payload {
  std::map<ObjectId, Version> reads;
  std::map<ObjectId, Value> writes;
  Version commit_version = 0;

  bool empty() const { return reads.empty() && writes.empty(); }

  bool operator==(const Payload&) const = default;

  bool valid() const {
    for (const auto& [x, _] : writes)
      if (!reads.count(x)) return false;
    for (const auto& [_, v] : reads)
      if (!empty() && commit_version <= v) return false;
    return true;
  }
};

/// Assigns each object to exactly one shard.
struct ShardMap {
  std::uint32_t shard_count = 1;

  ShardId shard_of(ObjectId x) const { return x % shard_count; }
};

/// l | s: keeps only the reads and writes on objects of shard s. The commit
/// version is unchanged, so a projection that empties both sets is
/// empty-shaped but not structurally equal to a default Payload.
inline Payload project(const Payload& l, ShardId s, const ShardMap& m) {
  Payload out;
  out.commit_version = l.commit_version;
  for (const auto& [x, v] : l.reads)
    if (m.shard_of(x) == s) out.reads.emplace(x, v);
  for (const auto& [x, val] : l.writes)
    if (m.shard_of(x) == s) out.writes.emplace(x, val);
  return out;
}

/// Shards whose objects the payload touches; empty iff the payload is empty.
inline std::set<ShardId> shards_of(const Payload& l, const ShardMap& m) {
  std::set<ShardId> out;
  for (const auto& [x, _] : l.reads) out.insert(m.shard_of(x));
  for (const auto& [x, _] : l.writes) out.insert(m.shard_of(x));
  return out;
}

}  // namespace tcs
