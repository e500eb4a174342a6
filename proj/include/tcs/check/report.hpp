// Copyright 2026 the tcsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "tcs/check/correctness.hpp"
#include "tcs/check/extract.hpp"
#include "tcs/check/invariants.hpp"
#include "tcs/check/tcsll.hpp"
#include "tcs/sim/trace.hpp"

namespace tcs {

struct CheckSelection {
  bool invariants = true;
  bool tcsll = true;
  bool correctness = true;
  std::size_t oracle_bound = 10;

  static CheckSelection only(const std::string& what) {
    CheckSelection s;
    if (what == "all") return s;
    s.invariants = what == "invariants";
    s.tcsll = what == "tcsll";
    s.correctness = what == "correctness";
    return s;
  }
};

struct CheckReport {
  std::vector<Violation> invariant_violations;
  std::vector<Violation> tcsll_violations;
  CorrectnessVerdict correctness = CorrectnessVerdict::Correct;
  bool ran_invariants = false;
  bool ran_tcsll = false;
  bool ran_correctness = false;
  bool liveness_exhausted = false;

  bool pass() const {
    return invariant_violations.empty() && tcsll_violations.empty() &&
           correctness != CorrectnessVerdict::Incorrect && !liveness_exhausted;
  }
};

inline CheckReport run_checks(const Trace& tr,
                              const CheckSelection& sel = CheckSelection{}) {
  CheckReport rep;
  rep.liveness_exhausted = tr.max_steps_exhausted;
  if (sel.invariants) {
    rep.ran_invariants = true;
    rep.invariant_violations = check_invariants(tr);
  }
  if (sel.tcsll) {
    rep.ran_tcsll = true;
    rep.tcsll_violations = check_tcsll(tr);
  }
  if (sel.correctness) {
    rep.ran_correctness = true;
    SerializabilityCertifier cert(tr.shard_map());
    rep.correctness = check_correct(tr, cert, sel.oracle_bound);
  }
  return rep;
}

inline void print_report(std::ostream& os, const CheckReport& rep) {
  if (rep.ran_invariants) {
    os << "invariants: "
       << (rep.invariant_violations.empty() ? "pass" : "FAIL") << "\n";
    for (const Violation& v : rep.invariant_violations)
      os << "  " << render(v) << "\n";
  }
  if (rep.ran_tcsll) {
    os << "tcsll: " << (rep.tcsll_violations.empty() ? "pass" : "FAIL")
       << "\n";
    for (const Violation& v : rep.tcsll_violations)
      os << "  " << render(v) << "\n";
  }
  if (rep.ran_correctness)
    os << "correctness: " << to_string(rep.correctness) << "\n";
  if (rep.liveness_exhausted)
    os << "liveness: FAIL (step budget exhausted with pending events)\n";
}

}  // namespace tcs
