// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "tcs/messages.hpp"
#include "tcs/types.hpp"

namespace tcs {

/// One message written into a receiver's circular buffer. `acked` flips when
/// the NIC-level acknowledgement fires; only acked entries are deliverable,
/// and acks fire in send order per sender, so deliverable entries always form
/// a prefix of the buffer.
struct RdmaEntry {
  std::uint64_t id = 0;
  ProcessId sender = kNoProcess;
  ProcessId owner = kNoProcess;
  Message msg;
  bool acked = false;
  std::uint64_t cause_seq = 0;  // trace event that issued the send
};

enum class SendOutcome : std::uint8_t { Accepted, Rejected, Blocked };

/// Simulated one-sided messaging: senders append into per-sender buffers
/// owned by the receiver, subject to open/close access control and a bounded
/// capacity. Crash asymmetry: destroying an owner loses its undelivered
/// entries, while a dead sender's already-acked entries stay deliverable.
class RdmaChannel {
 public:
  explicit RdmaChannel(std::uint32_t capacity) : capacity_(capacity) {}

  void open(ProcessId owner, ProcessId peer) {
    buffers_[{owner, peer}].open = true;
  }

  /// Pending (never-written) sends are lost on close; entries already in the
  /// owner's memory stay deliverable.
  void close(ProcessId owner, ProcessId peer) {
    auto& b = buffers_[{owner, peer}];
    b.open = false;
    b.pending.clear();
  }

  bool is_open(ProcessId owner, ProcessId peer) const {
    auto it = buffers_.find({owner, peer});
    return it != buffers_.end() && it->second.open;
  }

  /// Returns the entry id to schedule an ack for when the write lands;
  /// Blocked sends park until the owner pulls, Rejected ones vanish.
  SendOutcome send(ProcessId sender, ProcessId owner, Message msg,
                   std::uint64_t cause_seq, std::uint64_t* entry_id) {
    auto it = buffers_.find({owner, sender});
    if (it == buffers_.end() || !it->second.open) return SendOutcome::Rejected;
    Buffer& b = it->second;
    if (b.entries.size() >= capacity_) {
      b.pending.push_back(Pending{std::move(msg), cause_seq});
      return SendOutcome::Blocked;
    }
    *entry_id = append(b, sender, owner, std::move(msg), cause_seq);
    return SendOutcome::Accepted;
  }

  void mark_acked(std::uint64_t entry_id) {
    for (auto& [_, b] : buffers_)
      for (auto& e : b.entries)
        if (e.id == entry_id) {
          e.acked = true;
          return;
        }
  }

  bool has_deliverable(ProcessId owner) const {
    for (const auto& [key, b] : buffers_) {
      if (key.first != owner) continue;
      if (!b.entries.empty() && b.entries.front().acked) return true;
    }
    return false;
  }

  /// Drains every acked prefix for `owner` in per-sender FIFO order, senders
  /// ascending. Frees capacity and admits blocked sends; the admitted writes
  /// are returned so the caller can schedule their acks.
  std::vector<RdmaEntry> pull(ProcessId owner,
                              std::vector<RdmaEntry>* admitted) {
    std::vector<RdmaEntry> out;
    for (auto& [key, b] : buffers_) {
      if (key.first != owner) continue;
      while (!b.entries.empty() && b.entries.front().acked) {
        out.push_back(std::move(b.entries.front()));
        b.entries.pop_front();
      }
      while (b.open && !b.pending.empty() && b.entries.size() < capacity_) {
        Pending p = std::move(b.pending.front());
        b.pending.pop_front();
        append(b, key.second, owner, std::move(p.msg), p.cause_seq);
        admitted->push_back(b.entries.back());
      }
    }
    return out;
  }

  void destroy_owner(ProcessId owner) {
    for (auto it = buffers_.begin(); it != buffers_.end();) {
      if (it->first.first == owner)
        it = buffers_.erase(it);
      else
        ++it;
    }
  }

  /// True when no acked entry addressed to `owner` awaits delivery.
  bool quiescent(ProcessId owner) const { return !has_deliverable(owner); }

 private:
  struct Pending {
    Message msg;
    std::uint64_t cause_seq = 0;
  };
  struct Buffer {
    bool open = false;
    std::deque<RdmaEntry> entries;
    std::deque<Pending> pending;
  };

  std::uint64_t append(Buffer& b, ProcessId sender, ProcessId owner,
                       Message msg, std::uint64_t cause_seq) {
    RdmaEntry e;
    e.id = ++next_id_;
    e.sender = sender;
    e.owner = owner;
    e.msg = std::move(msg);
    e.cause_seq = cause_seq;
    b.entries.push_back(std::move(e));
    return next_id_;
  }

  std::uint32_t capacity_;
  std::uint64_t next_id_ = 0;
  std::map<std::pair<ProcessId, ProcessId>, Buffer> buffers_;
};

}  // namespace tcs
