#pragma once

#include <cstdint>

#include "satlab/cnf.hpp"

namespace satlab {

enum class SolveStatus { Sat, Unsat, BudgetExceeded };

struct SolveResult {
  SolveStatus status = SolveStatus::BudgetExceeded;
  Assignment model;  // total over 1..num_vars when status == Sat
  int64_t nodes = 0;
};

// DPLL with unit propagation and pure-literal elimination, branching on the
// highest-occurrence variable. No clause learning. Variables absent from
// every clause are set to true in the returned model.
SolveResult dpll_solve(const Cnf& cnf, int64_t node_budget = 10'000'000);

struct MaxSatResult {
  int optimum = 0;
  Assignment witness;
};

// Exhaustive enumeration; requires num_vars <= 24.
MaxSatResult brute_force_max_sat(const Cnf& cnf);

struct CountResult {
  int64_t count = 0;
  bool exact = true;  // false when capped-mode cap was reached
};

// Exact count for num_vars <= 24 (enumeration); otherwise DPLL with
// blocking clauses capped at 2 solutions (enough for uniqueness checks).
CountResult count_solutions(const Cnf& cnf, int64_t node_budget = 10'000'000);

}  // namespace satlab
