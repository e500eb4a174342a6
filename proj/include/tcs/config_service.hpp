// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cassert>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "tcs/types.hpp"

namespace tcs {

/// One numbered membership incarnation. In per-shard mode a configuration
/// covers a single shard and `leader[s]` has one entry; in global mode it
/// carries every shard's members and leader.
struct Configuration {
  Epoch epoch = 0;
  std::map<ShardId, std::set<ProcessId>> members;
  std::map<ShardId, ProcessId> leaders;

  const std::set<ProcessId>& members_of(ShardId s) const {
    static const std::set<ProcessId> kEmpty;
    auto it = members.find(s);
    return it == members.end() ? kEmpty : it->second;
  }
  ProcessId leader_of(ShardId s) const {
    auto it = leaders.find(s);
    return it == leaders.end() ? kNoProcess : it->second;
  }
  std::set<ProcessId> all_members() const {
    std::set<ProcessId> out;
    for (const auto& [_, m] : members) out.insert(m.begin(), m.end());
    return out;
  }

  bool well_formed() const {
    if (epoch < 1) return false;
    for (const auto& [s, l] : leaders)
      if (!members_of(s).count(l)) return false;
    return true;
  }
};

/// Per-shard key in message-passing mode, the single global key in RDMA mode.
using CsKey = ShardId;
constexpr CsKey kGlobalKey = UINT32_MAX;

/// Configuration sequences held by the reliable configuration service.
/// Epochs within a sequence are strictly increasing and sequences only grow.
class CsState {
 public:
  /// Succeeds iff the last stored epoch for `key` equals `expected_epoch`;
  /// appends `cfg` on success, leaves the state untouched on failure.
  bool compare_and_swap(CsKey key, Epoch expected_epoch,
                        const Configuration& cfg) {
    assert(cfg.epoch > expected_epoch);
    assert(cfg.well_formed());
    auto& seq = sequences_[key];
    Epoch last = seq.empty() ? 0 : seq.back().epoch;
    if (last != expected_epoch) return false;
    seq.push_back(cfg);
    return true;
  }

  const Configuration& get_last(CsKey key) const {
    auto it = sequences_.find(key);
    assert(it != sequences_.end() && !it->second.empty());
    return it->second.back();
  }

  std::optional<Configuration> get(CsKey key, Epoch e) const {
    auto it = sequences_.find(key);
    if (it == sequences_.end()) return std::nullopt;
    for (const auto& cfg : it->second)
      if (cfg.epoch == e) return cfg;
    return std::nullopt;
  }

  bool has(CsKey key) const {
    auto it = sequences_.find(key);
    return it != sequences_.end() && !it->second.empty();
  }

  const std::map<CsKey, std::vector<Configuration>>& sequences() const {
    return sequences_;
  }

 private:
  std::map<CsKey, std::vector<Configuration>> sequences_;
};

}  // namespace tcs
