// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Scenario runner and checker front-end for the reconfigurable atomic commit
// simulator. `tcsim run fig2a`, `tcsim replay trace.jsonl`, `tcsim fuzz -n
// 500 --model rdma`.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "tcs/check/report.hpp"
#include "tcs/sim/builtins.hpp"
#include "tcs/sim/engine.hpp"
#include "tcs/sim/scenario_file.hpp"
#include "tcs/trace_io.hpp"

namespace {

using namespace tcs;

std::optional<Model> parse_model(const std::string& m) {
  if (m.empty()) return std::nullopt;
  if (m == "mp") return Model::Mp;
  if (m == "rdma") return Model::Rdma;
  if (m == "naive-rdma") return Model::NaiveRdma;
  throw CLI::ValidationError("--model", "expected mp|rdma|naive-rdma");
}

Scenario resolve_scenario(const std::string& ref, const std::string& model,
                          std::optional<std::uint64_t> seed,
                          std::optional<std::uint64_t> max_steps) {
  std::optional<Model> m = parse_model(model);
  Scenario sc;
  if (auto b = builtin_scenario(ref, m)) {
    sc = *b;
  } else if (std::filesystem::exists(ref)) {
    sc = load_scenario_file(ref);
    if (m) sc.config.model = *m;
  } else {
    std::ostringstream os;
    os << "unknown scenario '" << ref << "' (builtins:";
    for (const auto& n : builtin_names()) os << " " << n;
    os << ")";
    throw std::runtime_error(os.str());
  }
  if (seed) sc.config.seed = *seed;
  if (max_steps) sc.config.max_steps = *max_steps;
  return sc;
}

void print_delay_stats(std::ostream& os, const Trace& tr) {
  std::vector<std::pair<TxnId, std::uint64_t>> delays;
  for (const auto& [t, _] : tr.registry)
    if (auto d = count_delays(tr, t)) delays.push_back({t, *d});
  if (delays.empty()) {
    os << "delays: none measurable (no failure-free decision path)\n";
    return;
  }
  std::uint64_t mn = UINT64_MAX, mx = 0, sum = 0;
  for (auto& [t, d] : delays) {
    mn = std::min(mn, d);
    mx = std::max(mx, d);
    sum += d;
  }
  os << "delays: decided=" << delays.size() << " min=" << mn << " max=" << mx
     << " avg=" << (static_cast<double>(sum) / delays.size()) << "\n";
  for (auto& [t, d] : delays)
    os << "  txn " << t << ": " << d << " message delays\n";
}

int run_and_report(const Scenario& sc, const std::string& emit_trace,
                   const CheckSelection& sel, bool quiet) {
  Trace tr = run_scenario(sc);
  if (!emit_trace.empty()) write_trace_file(tr, emit_trace);
  CheckReport rep = run_checks(tr, sel);
  if (!quiet) {
    std::cout << "scenario " << sc.name << " model "
              << to_string(sc.config.model) << " seed " << sc.config.seed
              << ": " << tr.events.size() << " events, " << tr.final_step
              << " steps\n";
    std::map<TxnId, Decision> dec = client_decisions(tr);
    std::cout << "decisions:";
    if (dec.empty()) std::cout << " none";
    for (auto& [t, d] : dec) std::cout << " " << t << "=" << to_string(d);
    std::cout << "\n";
    print_delay_stats(std::cout, tr);
    print_report(std::cout, rep);
    if (!emit_trace.empty()) std::cout << "trace written to " << emit_trace
                                       << "\n";
  }
  return rep.pass() ? 0 : 1;
}

int cmd_run(const std::string& ref, const std::string& model,
            std::optional<std::uint64_t> seed,
            std::optional<std::uint64_t> max_steps,
            const std::string& emit_trace, const std::string& check,
            std::size_t oracle_bound) {
  Scenario sc = resolve_scenario(ref, model, seed, max_steps);
  CheckSelection sel = CheckSelection::only(check);
  sel.oracle_bound = oracle_bound;
  return run_and_report(sc, emit_trace, sel, false);
}

int cmd_replay(const std::string& path, const std::string& check,
               std::size_t oracle_bound) {
  Trace tr = read_trace_file(path);
  CheckSelection sel = CheckSelection::only(check);
  sel.oracle_bound = oracle_bound;
  CheckReport rep = run_checks(tr, sel);
  std::cout << "replay of " << path << " (scenario " << tr.scenario_name
            << ", model " << to_string(tr.model) << ", seed " << tr.seed
            << ")\n";
  print_report(std::cout, rep);
  return rep.pass() ? 0 : 1;
}

int cmd_fuzz(std::uint64_t n, std::uint64_t first_seed,
             const std::string& base, const std::string& model,
             const std::string& check, std::size_t oracle_bound,
             std::size_t jobs, const std::string& fail_dir) {
  Model m = parse_model(model).value_or(Model::Mp);
  CheckSelection sel = CheckSelection::only(check);
  sel.oracle_bound = oracle_bound;

  auto make = [&](std::uint64_t seed) {
    if (base.empty()) return fuzz_scenario(m, seed);
    Scenario sc = resolve_scenario(base, model, seed, std::nullopt);
    sc.config.fifo_scheduler = false;
    return sc;
  };

  std::vector<std::uint64_t> failing(n, 0);
  std::vector<bool> failed(n, false);
  std::mutex io_mu;
  std::atomic<std::uint64_t> next{0};
  std::size_t workers = std::max<std::size_t>(1, jobs);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::uint64_t i = next.fetch_add(1);
        if (i >= n) return;
        std::uint64_t seed = first_seed + i;
        Trace tr = run_scenario(make(seed));
        CheckReport rep = run_checks(tr, sel);
        if (!rep.pass()) {
          failed[i] = true;
          failing[i] = seed;
          std::lock_guard<std::mutex> lk(io_mu);
          std::cout << "seed " << seed << ": FAIL\n";
          for (const auto& v : rep.invariant_violations)
            std::cout << "  " << render(v) << "\n";
          for (const auto& v : rep.tcsll_violations)
            std::cout << "  " << render(v) << "\n";
          if (rep.correctness == CorrectnessVerdict::Incorrect)
            std::cout << "  correctness: incorrect\n";
          if (rep.liveness_exhausted)
            std::cout << "  liveness: step budget exhausted\n";
          if (!fail_dir.empty()) {
            std::filesystem::create_directories(fail_dir);
            write_trace_file(tr, fail_dir + "/seed-" + std::to_string(seed) +
                                     ".trace.jsonl");
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();

  std::size_t nfail = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (failed[i]) ++nfail;
  std::cout << "fuzz: " << n << " runs, " << (n - nfail) << " passed, "
            << nfail << " failed";
  if (nfail) {
    std::cout << "; failing seeds:";
    for (std::size_t i = 0; i < n; ++i)
      if (failed[i]) std::cout << " " << failing[i];
  }
  std::cout << "\n";
  return nfail ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reconfigurable atomic commit simulator and checkers"};
  app.require_subcommand(1);

  std::string scenario_ref, model, emit_trace, check = "all";
  std::optional<std::uint64_t> seed, max_steps;
  std::size_t oracle_bound = 10;

  CLI::App* run = app.add_subcommand("run", "run a scenario and check it");
  run->add_option("name", scenario_ref, "builtin name or scenario file path");
  run->add_option("--scenario", scenario_ref,
                  "scenario file path (same as the positional)");
  run->add_option("--model", model, "mp|rdma|naive-rdma (override)");
  run->add_option("--seed", seed, "scheduler seed");
  run->add_option("--max-steps", max_steps, "step budget");
  run->add_option("--emit-trace", emit_trace, "write the trace to a file");
  run->add_option("--check", check, "all|invariants|tcsll|correctness");
  run->add_option("--oracle-bound", oracle_bound,
                  "max committed txns for the linearization search");

  std::string trace_path;
  CLI::App* replay = app.add_subcommand("replay", "re-check a stored trace");
  replay->add_option("trace", trace_path, "trace file")->required();
  replay->add_option("--check", check, "all|invariants|tcsll|correctness");
  replay->add_option("--oracle-bound", oracle_bound,
                     "max committed txns for the linearization search");

  std::uint64_t n_seeds = 100, first_seed = 1;
  std::size_t jobs = std::thread::hardware_concurrency();
  std::string base, fail_dir;
  CLI::App* fuzz = app.add_subcommand("fuzz", "run many seeded simulations");
  fuzz->add_option("-n,--seeds", n_seeds, "number of seeds");
  fuzz->add_option("--first-seed", first_seed, "first seed value");
  fuzz->add_option("--scenario", base,
                   "base scenario (default: crash/reconfiguration workload)");
  fuzz->add_option("--model", model, "mp|rdma|naive-rdma");
  fuzz->add_option("--check", check, "all|invariants|tcsll|correctness");
  fuzz->add_option("--oracle-bound", oracle_bound, "linearization bound");
  fuzz->add_option("-j,--jobs", jobs, "worker threads");
  fuzz->add_option("--fail-dir", fail_dir, "store failing traces here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (scenario_ref.empty())
        throw std::runtime_error("run: missing scenario name or path");
      return cmd_run(scenario_ref, model, seed, max_steps, emit_trace, check,
                     oracle_bound);
    }
    if (replay->parsed()) return cmd_replay(trace_path, check, oracle_bound);
    if (fuzz->parsed())
      return cmd_fuzz(n_seeds, first_seed, base, model, check, oracle_bound,
                      jobs, fail_dir);
  } catch (const ScenarioParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
