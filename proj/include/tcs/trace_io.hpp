// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "tcs/sim/trace.hpp"

namespace tcs {

// Line-delimited trace files: a version header line, then one record per
// line ("txn", "intro", "origin", "ev"), then an "end" line. Event records
// carry step/kind/src/dst plus a payload digest and the full event body, so
// replays re-run every checker offline.

namespace io {

using nlohmann::json;

inline json to_json(const Payload& p) {
  json r = json::array(), w = json::array();
  for (const auto& [x, v] : p.reads) r.push_back({x, v});
  for (const auto& [x, val] : p.writes) w.push_back({x, val});
  return json{{"r", r}, {"w", w}, {"vc", p.commit_version}};
}

inline Payload payload_from(const json& j) {
  Payload p;
  for (const auto& e : j.at("r"))
    p.reads[e.at(0).get<ObjectId>()] = e.at(1).get<Version>();
  for (const auto& e : j.at("w"))
    p.writes[e.at(0).get<ObjectId>()] = e.at(1).get<Value>();
  p.commit_version = j.at("vc").get<Version>();
  return p;
}

inline json to_json(const LogSlot& s) {
  json j{{"t", s.txn},
         {"pl", to_json(s.payload)},
         {"v", static_cast<int>(s.vote)},
         {"ph", static_cast<int>(s.phase)},
         {"o", s.origin}};
  if (s.dec) j["d"] = static_cast<int>(*s.dec);
  return j;
}

inline LogSlot slot_from(const json& j) {
  LogSlot s;
  s.txn = j.at("t").get<TxnId>();
  s.payload = payload_from(j.at("pl"));
  s.vote = static_cast<Decision>(j.at("v").get<int>());
  s.phase = static_cast<Phase>(j.at("ph").get<int>());
  s.origin = j.at("o").get<VoteOriginId>();
  if (j.contains("d")) s.dec = static_cast<Decision>(j.at("d").get<int>());
  return s;
}

inline json to_json(const Log& log) {
  json j = json::array();
  for (const auto& [k, s] : log) j.push_back({k, to_json(s)});
  return j;
}

inline Log log_from(const json& j) {
  Log log;
  for (const auto& e : j) log.emplace(e.at(0).get<Slot>(), slot_from(e.at(1)));
  return log;
}

inline json to_json(const LeaderPrefix& p) {
  json entries = json::array();
  for (const auto& [k, s] : p.entries) entries.push_back({k, to_json(s)});
  return json{{"k", p.upto}, {"e", entries}};
}

inline LeaderPrefix prefix_from(const json& j) {
  LeaderPrefix p;
  p.upto = j.at("k").get<Slot>();
  for (const auto& e : j.at("e"))
    p.entries.emplace(e.at(0).get<Slot>(), slot_from(e.at(1)));
  return p;
}

inline json to_json(const Configuration& c) {
  json m = json::array(), l = json::array();
  for (const auto& [s, mem] : c.members) m.push_back({s, json(mem)});
  for (const auto& [s, lead] : c.leaders) l.push_back({s, lead});
  return json{{"e", c.epoch}, {"m", m}, {"l", l}};
}

inline Configuration config_from(const json& j) {
  Configuration c;
  c.epoch = j.at("e").get<Epoch>();
  for (const auto& e : j.at("m"))
    c.members[e.at(0).get<ShardId>()] =
        e.at(1).get<std::set<ProcessId>>();
  for (const auto& e : j.at("l"))
    c.leaders[e.at(0).get<ShardId>()] = e.at(1).get<ProcessId>();
  return c;
}

inline json to_json(const Message& m);
inline Message message_from(const json& j);

inline json to_json(const Message& m) {
  json j;
  j["k"] = kind_name(m);
  if (const auto* p = m.as<Prepare>()) {
    j["t"] = p->txn;
    if (p->payload) j["pl"] = to_json(*p->payload);
  } else if (const auto* p = m.as<PrepareAck>()) {
    j["e"] = p->epoch;
    j["s"] = p->shard;
    j["sl"] = p->slot;
    j["t"] = p->txn;
    j["pl"] = to_json(p->payload);
    j["v"] = static_cast<int>(p->vote);
    j["o"] = p->origin;
    j["pre"] = to_json(p->leader_prefix);
  } else if (const auto* p = m.as<Accept>()) {
    j["e"] = p->epoch;
    j["sl"] = p->slot;
    j["t"] = p->txn;
    j["pl"] = to_json(p->payload);
    j["v"] = static_cast<int>(p->vote);
    j["s"] = p->shard;
    j["o"] = p->origin;
    j["pre"] = to_json(p->leader_prefix);
  } else if (const auto* p = m.as<AcceptAck>()) {
    j["s"] = p->shard;
    j["e"] = p->epoch;
    j["sl"] = p->slot;
    j["t"] = p->txn;
    j["v"] = static_cast<int>(p->vote);
  } else if (const auto* p = m.as<ShardDecision>()) {
    j["e"] = p->epoch;
    j["sl"] = p->slot;
    j["d"] = static_cast<int>(p->dec);
    j["s"] = p->shard;
    j["t"] = p->txn;
  } else if (const auto* p = m.as<ClientDecision>()) {
    j["t"] = p->txn;
    j["d"] = static_cast<int>(p->dec);
  } else if (const auto* p = m.as<Probe>()) {
    j["e"] = p->epoch;
  } else if (const auto* p = m.as<ProbeAck>()) {
    j["i"] = p->initialized;
    j["e"] = p->epoch;
    j["s"] = p->shard;
  } else if (const auto* p = m.as<NewConfig>()) {
    j["e"] = p->epoch;
    j["m"] = json(p->members);
  } else if (const auto* p = m.as<NewState>()) {
    j["e"] = p->epoch;
    j["s"] = p->shard;
    j["m"] = json(p->members);
    j["log"] = to_json(p->log);
  } else if (const auto* p = m.as<ConfigChange>()) {
    j["s"] = p->shard;
    j["e"] = p->epoch;
    j["m"] = json(p->members);
    j["l"] = p->leader;
  } else if (const auto* p = m.as<ConfigPrepare>()) {
    Configuration c;
    c.epoch = p->epoch;
    c.members = p->members;
    c.leaders = p->leaders;
    j["c"] = to_json(c);
  } else if (const auto* p = m.as<ConfigPrepareAck>()) {
    j["e"] = p->epoch;
  } else if (const auto* p = m.as<Connect>()) {
    j["e"] = p->epoch;
  } else if (const auto* p = m.as<ConnectAck>()) {
    j["e"] = p->epoch;
  } else if (const auto* p = m.as<CsRequest>()) {
    j["op"] = static_cast<int>(p->op);
    j["key"] = p->key;
    j["e"] = p->epoch;
    j["c"] = to_json(p->cfg);
    j["tok"] = p->token;
  } else if (const auto* p = m.as<CsResponse>()) {
    j["op"] = static_cast<int>(p->op);
    j["key"] = p->key;
    j["ok"] = p->ok;
    j["c"] = to_json(p->cfg);
    j["tok"] = p->token;
  }
  return j;
}

inline Message message_from(const json& j) {
  std::string k = j.at("k").get<std::string>();
  if (k == "PREPARE") {
    Prepare p;
    p.txn = j.at("t").get<TxnId>();
    if (j.contains("pl")) p.payload = payload_from(j.at("pl"));
    return Message{p};
  }
  if (k == "PREPARE_ACK") {
    PrepareAck p;
    p.epoch = j.at("e").get<Epoch>();
    p.shard = j.at("s").get<ShardId>();
    p.slot = j.at("sl").get<Slot>();
    p.txn = j.at("t").get<TxnId>();
    p.payload = payload_from(j.at("pl"));
    p.vote = static_cast<Decision>(j.at("v").get<int>());
    p.origin = j.at("o").get<VoteOriginId>();
    p.leader_prefix = prefix_from(j.at("pre"));
    return Message{p};
  }
  if (k == "ACCEPT") {
    Accept p;
    p.epoch = j.at("e").get<Epoch>();
    p.slot = j.at("sl").get<Slot>();
    p.txn = j.at("t").get<TxnId>();
    p.payload = payload_from(j.at("pl"));
    p.vote = static_cast<Decision>(j.at("v").get<int>());
    p.shard = j.at("s").get<ShardId>();
    p.origin = j.at("o").get<VoteOriginId>();
    p.leader_prefix = prefix_from(j.at("pre"));
    return Message{p};
  }
  if (k == "ACCEPT_ACK") {
    AcceptAck p;
    p.shard = j.at("s").get<ShardId>();
    p.epoch = j.at("e").get<Epoch>();
    p.slot = j.at("sl").get<Slot>();
    p.txn = j.at("t").get<TxnId>();
    p.vote = static_cast<Decision>(j.at("v").get<int>());
    return Message{p};
  }
  if (k == "DECISION") {
    ShardDecision p;
    p.epoch = j.at("e").get<Epoch>();
    p.slot = j.at("sl").get<Slot>();
    p.dec = static_cast<Decision>(j.at("d").get<int>());
    p.shard = j.at("s").get<ShardId>();
    p.txn = j.at("t").get<TxnId>();
    return Message{p};
  }
  if (k == "DECISION_CLIENT") {
    ClientDecision p;
    p.txn = j.at("t").get<TxnId>();
    p.dec = static_cast<Decision>(j.at("d").get<int>());
    return Message{p};
  }
  if (k == "PROBE") return Message{Probe{j.at("e").get<Epoch>()}};
  if (k == "PROBE_ACK") {
    ProbeAck p;
    p.initialized = j.at("i").get<bool>();
    p.epoch = j.at("e").get<Epoch>();
    p.shard = j.at("s").get<ShardId>();
    return Message{p};
  }
  if (k == "NEW_CONFIG") {
    NewConfig p;
    p.epoch = j.at("e").get<Epoch>();
    p.members = j.at("m").get<std::set<ProcessId>>();
    return Message{p};
  }
  if (k == "NEW_STATE") {
    NewState p;
    p.epoch = j.at("e").get<Epoch>();
    p.shard = j.at("s").get<ShardId>();
    p.members = j.at("m").get<std::set<ProcessId>>();
    p.log = log_from(j.at("log"));
    return Message{p};
  }
  if (k == "CONFIG_CHANGE") {
    ConfigChange p;
    p.shard = j.at("s").get<ShardId>();
    p.epoch = j.at("e").get<Epoch>();
    p.members = j.at("m").get<std::set<ProcessId>>();
    p.leader = j.at("l").get<ProcessId>();
    return Message{p};
  }
  if (k == "CONFIG_PREPARE") {
    Configuration c = config_from(j.at("c"));
    ConfigPrepare p;
    p.epoch = c.epoch;
    p.members = c.members;
    p.leaders = c.leaders;
    return Message{p};
  }
  if (k == "CONFIG_PREPARE_ACK")
    return Message{ConfigPrepareAck{j.at("e").get<Epoch>()}};
  if (k == "CONNECT") return Message{Connect{j.at("e").get<Epoch>()}};
  if (k == "CONNECT_ACK") return Message{ConnectAck{j.at("e").get<Epoch>()}};
  if (k == "CS_REQUEST") {
    CsRequest p;
    p.op = static_cast<CsOpKind>(j.at("op").get<int>());
    p.key = j.at("key").get<CsKey>();
    p.epoch = j.at("e").get<Epoch>();
    p.cfg = config_from(j.at("c"));
    p.token = j.at("tok").get<std::uint32_t>();
    return Message{p};
  }
  if (k == "CS_RESPONSE") {
    CsResponse p;
    p.op = static_cast<CsOpKind>(j.at("op").get<int>());
    p.key = j.at("key").get<CsKey>();
    p.ok = j.at("ok").get<bool>();
    p.cfg = config_from(j.at("c"));
    p.token = j.at("tok").get<std::uint32_t>();
    return Message{p};
  }
  throw std::runtime_error("trace parse: unknown message kind " + k);
}

inline json to_json(const StateSnap& s) {
  json epoch = json::array();
  for (const auto& [sh, e] : s.epoch) epoch.push_back({sh, e});
  return json{{"pid", s.pid},
              {"s0", s.s0},
              {"st", static_cast<int>(s.status)},
              {"init", s.initialized},
              {"ep", epoch},
              {"ne", s.new_epoch},
              {"nx", s.next},
              {"log", to_json(s.log)}};
}

inline StateSnap snap_from(const json& j) {
  StateSnap s;
  s.pid = j.at("pid").get<ProcessId>();
  s.s0 = j.at("s0").get<ShardId>();
  s.status = static_cast<Status>(j.at("st").get<int>());
  s.initialized = j.at("init").get<bool>();
  for (const auto& e : j.at("ep"))
    s.epoch[e.at(0).get<ShardId>()] = e.at(1).get<Epoch>();
  s.new_epoch = j.at("ne").get<Epoch>();
  s.next = j.at("nx").get<Slot>();
  s.log = log_from(j.at("log"));
  return s;
}

inline std::uint64_t digest(const json& j) {
  std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace io

inline void write_trace(const Trace& tr, std::ostream& os) {
  using io::json;
  json header{{"format", "tcsim-trace"},
              {"version", tr.format_version},
              {"model", to_string(tr.model)},
              {"shards", tr.shard_count},
              {"replicas", tr.replicas_per_shard},
              {"seed", tr.seed},
              {"scenario", tr.scenario_name}};
  os << header.dump() << "\n";
  for (const auto& [t, info] : tr.registry) {
    json j{{"rec", "txn"},
           {"t", t},
           {"pl", io::to_json(info.payload)},
           {"sh", json(info.shards)},
           {"cl", info.client}};
    os << j.dump() << "\n";
  }
  for (const auto& intro : tr.introductions) {
    json j{{"rec", "intro"},
           {"key", intro.key},
           {"c", io::to_json(intro.cfg)},
           {"seq", intro.seq}};
    os << j.dump() << "\n";
  }
  for (const auto& [id, o] : tr.origins) {
    json j{{"rec", "origin"},
           {"id", id},
           {"ldr", o.leader},
           {"s", o.shard},
           {"e", o.epoch},
           {"sl", o.slot},
           {"t", o.txn},
           {"pl", io::to_json(o.payload)},
           {"v", static_cast<int>(o.vote)},
           {"fa", o.forced_abort},
           {"T", json(o.decided_commit)},
           {"P", json(o.prepared_commit)}};
    os << j.dump() << "\n";
  }
  for (const TraceEvent& ev : tr.events) {
    json j{{"rec", "ev"},
           {"seq", ev.seq},
           {"step", ev.step},
           {"kind", to_string(ev.kind)},
           {"actor", ev.actor},
           {"src", ev.src},
           {"dst", ev.actor}};
    if (ev.msg) {
      json m = io::to_json(*ev.msg);
      j["msg"] = m;
      j["digest"] = io::digest(m);
    } else {
      j["digest"] = 0;
    }
    if (!ev.parents.empty()) j["par"] = json(ev.parents);
    if (!ev.emissions.empty()) {
      json ems = json::array();
      for (const EmissionRec& em : ev.emissions)
        ems.push_back(json{{"dst", em.dst},
                           {"via", em.via == Via::Rdma ? 1 : 0},
                           {"msg", io::to_json(em.msg)}});
      j["out"] = ems;
    }
    if (ev.snap) j["snap"] = io::to_json(*ev.snap);
    if (!ev.notes.empty()) j["notes"] = json(ev.notes);
    if (ev.txn) j["txn"] = ev.txn;
    if (ev.kind == EvKind::ClientDecide) j["dec"] = static_cast<int>(ev.dec);
    os << j.dump() << "\n";
  }
  json end{{"rec", "end"},
           {"final_step", tr.final_step},
           {"exhausted", tr.max_steps_exhausted},
           {"pending", io::json(tr.pending_obligations)}};
  os << end.dump() << "\n";
}

inline void write_trace_file(const Trace& tr, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  write_trace(tr, f);
}

inline Trace read_trace(std::istream& is) {
  using io::json;
  Trace tr;
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("trace parse: empty file");
  json header = json::parse(line);
  if (header.value("format", "") != "tcsim-trace")
    throw std::runtime_error("trace parse: not a tcsim trace file");
  if (header.at("version").get<std::uint32_t>() != 1)
    throw std::runtime_error("trace parse: unsupported format version");
  std::string model = header.at("model").get<std::string>();
  tr.model = model == "mp"     ? Model::Mp
             : model == "rdma" ? Model::Rdma
                               : Model::NaiveRdma;
  tr.shard_count = header.at("shards").get<std::uint32_t>();
  tr.replicas_per_shard = header.at("replicas").get<std::uint32_t>();
  tr.seed = header.at("seed").get<std::uint64_t>();
  tr.scenario_name = header.at("scenario").get<std::string>();

  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    std::string rec = j.at("rec").get<std::string>();
    if (rec == "txn") {
      TxnInfo info;
      info.payload = io::payload_from(j.at("pl"));
      info.shards = j.at("sh").get<std::set<ShardId>>();
      info.client = j.at("cl").get<ProcessId>();
      tr.registry.emplace(j.at("t").get<TxnId>(), std::move(info));
    } else if (rec == "intro") {
      CsIntroduction intro;
      intro.key = j.at("key").get<CsKey>();
      intro.cfg = io::config_from(j.at("c"));
      intro.seq = j.at("seq").get<std::uint64_t>();
      tr.introductions.push_back(std::move(intro));
    } else if (rec == "origin") {
      VoteOrigin o;
      o.id = j.at("id").get<VoteOriginId>();
      o.leader = j.at("ldr").get<ProcessId>();
      o.shard = j.at("s").get<ShardId>();
      o.epoch = j.at("e").get<Epoch>();
      o.slot = j.at("sl").get<Slot>();
      o.txn = j.at("t").get<TxnId>();
      o.payload = io::payload_from(j.at("pl"));
      o.vote = static_cast<Decision>(j.at("v").get<int>());
      o.forced_abort = j.at("fa").get<bool>();
      o.decided_commit = j.at("T").get<std::set<TxnId>>();
      o.prepared_commit = j.at("P").get<std::set<TxnId>>();
      tr.origins.emplace(o.id, std::move(o));
    } else if (rec == "ev") {
      TraceEvent ev;
      ev.seq = j.at("seq").get<std::uint64_t>();
      ev.step = j.at("step").get<std::uint64_t>();
      std::string kind = j.at("kind").get<std::string>();
      for (int k = 0; k <= static_cast<int>(EvKind::Note); ++k)
        if (kind == to_string(static_cast<EvKind>(k)))
          ev.kind = static_cast<EvKind>(k);
      ev.actor = j.at("actor").get<ProcessId>();
      ev.src = j.at("src").get<ProcessId>();
      if (j.contains("msg")) ev.msg = io::message_from(j.at("msg"));
      if (j.contains("par"))
        ev.parents = j.at("par").get<std::vector<std::uint64_t>>();
      if (j.contains("out"))
        for (const auto& em : j.at("out"))
          ev.emissions.push_back(
              EmissionRec{em.at("dst").get<ProcessId>(),
                          io::message_from(em.at("msg")),
                          em.at("via").get<int>() ? Via::Rdma : Via::Fifo});
      if (j.contains("snap")) ev.snap = io::snap_from(j.at("snap"));
      if (j.contains("notes"))
        ev.notes = j.at("notes").get<std::vector<std::string>>();
      if (j.contains("txn")) ev.txn = j.at("txn").get<TxnId>();
      if (j.contains("dec"))
        ev.dec = static_cast<Decision>(j.at("dec").get<int>());
      tr.events.push_back(std::move(ev));
    } else if (rec == "end") {
      tr.final_step = j.at("final_step").get<std::uint64_t>();
      tr.max_steps_exhausted = j.at("exhausted").get<bool>();
      tr.pending_obligations =
          j.at("pending").get<std::vector<std::string>>();
    } else {
      throw std::runtime_error("trace parse: unknown record type " + rec);
    }
  }
  return tr;
}

inline Trace read_trace_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  return read_trace(f);
}

}  // namespace tcs
