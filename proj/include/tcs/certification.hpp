// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <memory>
#include <vector>

#include "tcs/payload.hpp"
#include "tcs/types.hpp"

namespace tcs {

using PayloadSet = std::vector<Payload>;

/// Concurrency-control policy plugged into the commit protocol: a global
/// check plus the two shard-local checks used when voting. global() decides
/// against previously committed payloads; committed_local (f_s) is its
/// shard-restricted form; prepared_local (g_s) checks against payloads merely
/// prepared to commit and must be no weaker than f_s.
///
/// All three are required to be distributive:
///   f(L1 ∪ L2, l) = f(L1, l) ⊓ f(L2, l).
class CertificationFunction {
 public:
  virtual ~CertificationFunction() = default;
  virtual Decision global(const PayloadSet& committed,
                          const Payload& l) const = 0;
  virtual Decision committed_local(ShardId s, const PayloadSet& committed,
                                   const Payload& l) const = 0;
  virtual Decision prepared_local(ShardId s, const PayloadSet& prepared,
                                  const Payload& l) const = 0;
};

/// Classical backward/forward validation for serializability: a transaction
/// commits iff none of its read versions has been overwritten by a committed
/// transaction, and it neither reads anything written nor writes anything
/// read by a transaction prepared to commit.
class SerializabilityCertifier final : public CertificationFunction {
 public:
  explicit SerializabilityCertifier(ShardMap map) : map_(map) {}

  Decision global(const PayloadSet& committed,
                  const Payload& l) const override {
    for (const auto& [x, v] : l.reads)
      for (const Payload& prev : committed) {
        auto w = prev.writes.find(x);
        if (w != prev.writes.end() && prev.commit_version > v)
          return Decision::Abort;
      }
    return Decision::Commit;
  }

  Decision committed_local(ShardId s, const PayloadSet& committed,
                           const Payload& l) const override {
    for (const auto& [x, v] : l.reads) {
      if (map_.shard_of(x) != s) continue;
      for (const Payload& prev : committed) {
        auto w = prev.writes.find(x);
        if (w != prev.writes.end() && prev.commit_version > v)
          return Decision::Abort;
      }
    }
    return Decision::Commit;
  }

  Decision prepared_local(ShardId s, const PayloadSet& prepared,
                          const Payload& l) const override {
    for (const auto& [x, _] : l.reads) {
      if (map_.shard_of(x) != s) continue;
      for (const Payload& p : prepared)
        if (p.writes.count(x)) return Decision::Abort;
    }
    for (const auto& [x, _] : l.writes) {
      if (map_.shard_of(x) != s) continue;
      for (const Payload& p : prepared)
        if (p.reads.count(x)) return Decision::Abort;
    }
    return Decision::Commit;
  }

  const ShardMap& shard_map() const { return map_; }

 private:
  ShardMap map_;
};

}  // namespace tcs
