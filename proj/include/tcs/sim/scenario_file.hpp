// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcs/sim/scenario.hpp"

namespace tcs {

// Structured-text scenario files: a version header, then [system],
// [workload] and [faults] sections.
//
//   # tcsim-scenario v1
//   [system]
//   model = mp
//   shards = 3
//   replicas = 2
//   pool = 4
//   clients = 2
//   seed = 7
//   max_steps = 30000
//   rdma_capacity = 64
//   retry_after = 50
//   scheduler = random
//
//   [workload]
//   txns = 8
//   conflict = 0.3
//
//   [faults]
//   at 60 crash 2
//   at 90 reconfigure 3 shard=1 exclude=2,5
//   at 400 retry 0 slot=1

class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(std::size_t line, const std::string& what)
      : std::runtime_error("scenario line " + std::to_string(line) + ": " +
                           what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace scenario_detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::uint64_t parse_u64(const std::string& s, std::size_t line,
                               const std::string& field) {
  try {
    std::size_t pos = 0;
    std::uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ScenarioParseError(line, "invalid number for " + field + ": '" +
                                       s + "'");
  }
}

inline double parse_double(const std::string& s, std::size_t line,
                           const std::string& field) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ScenarioParseError(line, "invalid number for " + field + ": '" +
                                       s + "'");
  }
}

}  // namespace scenario_detail

inline Scenario parse_scenario(std::istream& is, const std::string& name) {
  using scenario_detail::parse_double;
  using scenario_detail::parse_u64;
  using scenario_detail::trim;

  Scenario sc;
  sc.name = name;
  std::string raw;
  std::size_t lineno = 0;
  std::string section;
  bool saw_header = false;

  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!saw_header && line.find("tcsim-scenario") != std::string::npos) {
        saw_header = true;
        if (line.find("v1") == std::string::npos)
          throw ScenarioParseError(lineno, "unsupported scenario version");
      }
      continue;
    }
    if (!saw_header)
      throw ScenarioParseError(lineno,
                               "missing '# tcsim-scenario v1' header line");
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      if (section != "system" && section != "workload" && section != "faults")
        throw ScenarioParseError(lineno, "unknown section [" + section + "]");
      continue;
    }
    if (section == "system" || section == "workload") {
      std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ScenarioParseError(lineno, "expected 'key = value'");
      std::string key = trim(line.substr(0, eq));
      std::string val = trim(line.substr(eq + 1));
      if (section == "system") {
        if (key == "model") {
          if (val == "mp")
            sc.config.model = Model::Mp;
          else if (val == "rdma")
            sc.config.model = Model::Rdma;
          else if (val == "naive-rdma")
            sc.config.model = Model::NaiveRdma;
          else
            throw ScenarioParseError(lineno, "unknown model '" + val + "'");
        } else if (key == "shards") {
          sc.config.shards = parse_u64(val, lineno, key);
        } else if (key == "replicas") {
          sc.config.replicas_per_shard = parse_u64(val, lineno, key);
        } else if (key == "pool") {
          sc.config.pool_size = parse_u64(val, lineno, key);
        } else if (key == "clients") {
          sc.config.client_count = parse_u64(val, lineno, key);
        } else if (key == "seed") {
          sc.config.seed = parse_u64(val, lineno, key);
        } else if (key == "max_steps") {
          sc.config.max_steps = parse_u64(val, lineno, key);
        } else if (key == "rdma_capacity") {
          sc.config.rdma_capacity = parse_u64(val, lineno, key);
        } else if (key == "retry_after") {
          sc.config.retry_after = parse_u64(val, lineno, key);
        } else if (key == "scheduler") {
          if (val == "fifo")
            sc.config.fifo_scheduler = true;
          else if (val == "random")
            sc.config.fifo_scheduler = false;
          else
            throw ScenarioParseError(lineno, "scheduler must be fifo|random");
        } else {
          throw ScenarioParseError(lineno, "unknown system key '" + key + "'");
        }
      } else {
        if (key == "txns")
          sc.workload_txns = parse_u64(val, lineno, key);
        else if (key == "conflict")
          sc.conflict_rate = parse_double(val, lineno, key);
        else
          throw ScenarioParseError(lineno, "unknown workload key '" + key +
                                               "'");
      }
      continue;
    }
    if (section == "faults") {
      std::istringstream ls(line);
      std::string at_kw;
      std::uint64_t step;
      std::string verb;
      ls >> at_kw >> step >> verb;
      if (!ls || at_kw != "at")
        throw ScenarioParseError(lineno, "expected 'at <step> <action> ...'");
      Directive d;
      d.at_step = step;
      std::uint64_t pid;
      if (!(ls >> pid))
        throw ScenarioParseError(lineno, "expected a process id after '" +
                                             verb + "'");
      d.pid = static_cast<ProcessId>(pid);
      if (verb == "crash") {
        d.kind = Directive::Kind::Crash;
      } else if (verb == "reconfigure") {
        d.kind = Directive::Kind::Reconfigure;
        d.shard = kNoShard;
        std::string opt;
        while (ls >> opt) {
          if (opt.rfind("shard=", 0) == 0)
            d.shard = parse_u64(opt.substr(6), lineno, "shard");
          else if (opt.rfind("exclude=", 0) == 0) {
            std::istringstream ex(opt.substr(8));
            std::string p;
            while (std::getline(ex, p, ','))
              d.exclude.insert(parse_u64(p, lineno, "exclude"));
          } else {
            throw ScenarioParseError(lineno, "unknown option '" + opt + "'");
          }
        }
      } else if (verb == "retry") {
        d.kind = Directive::Kind::Retry;
        std::string opt;
        if (!(ls >> opt) || opt.rfind("slot=", 0) != 0)
          throw ScenarioParseError(lineno, "retry needs slot=<k>");
        d.slot = parse_u64(opt.substr(5), lineno, "slot");
      } else {
        throw ScenarioParseError(lineno, "unknown fault action '" + verb +
                                             "'");
      }
      sc.directives.push_back(std::move(d));
      continue;
    }
    throw ScenarioParseError(lineno, "content outside any section");
  }
  if (!saw_header)
    throw ScenarioParseError(1, "missing '# tcsim-scenario v1' header line");
  return sc;
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scenario file " + path);
  std::string name = path;
  std::size_t slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  return parse_scenario(f, name);
}

}  // namespace tcs
