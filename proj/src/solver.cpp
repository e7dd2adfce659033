#include "satlab/solver.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>
#include <vector>

namespace satlab {

namespace {

class DpllSearch {
 public:
  DpllSearch(const Cnf& cnf, int64_t budget) : cnf_(cnf), budget_(budget) {}

  SolveResult run() {
    SolveResult res;
    std::vector<int8_t> vals(cnf_.num_vars + 1, kUnset);
    int8_t status = search(vals);
    res.nodes = nodes_;
    if (status == kBudget) {
      res.status = SolveStatus::BudgetExceeded;
    } else if (status == kSat) {
      res.status = SolveStatus::Sat;
      res.model = Assignment(cnf_.num_vars);
      for (int v = 1; v <= cnf_.num_vars; ++v)
        res.model.set(v, model_[v] == kTrue || model_[v] == kUnset);  // absent vars -> true
      assert(evaluate(cnf_, res.model).all_satisfied);
    } else {
      res.status = SolveStatus::Unsat;
    }
    return res;
  }

 private:
  static constexpr int8_t kUnset = -1, kFalse = 0, kTrue = 1;
  static constexpr int8_t kSat = 1, kUnsat = 0, kBudget = 2;

  // Unit propagation to fixpoint; returns false on conflict.
  bool propagate(std::vector<int8_t>& vals) const {
    bool progress = true;
    while (progress) {
      progress = false;
      for (const auto& clause : cnf_.clauses) {
        int unassigned = 0;
        const Lit* free_lit = nullptr;
        bool sat = false;
        for (const auto& lit : clause) {
          int8_t v = vals[lit.var()];
          if (v == kUnset) {
            ++unassigned;
            free_lit = &lit;
          } else if ((v == kTrue) == lit.positive()) {
            sat = true;
            break;
          }
        }
        if (sat) continue;
        if (unassigned == 0) return false;
        if (unassigned == 1) {
          vals[free_lit->var()] = free_lit->positive() ? kTrue : kFalse;
          progress = true;
        }
      }
    }
    return true;
  }

  int8_t search(std::vector<int8_t> vals) {
    if (++nodes_ > budget_) return kBudget;
    if (!propagate(vals)) return kUnsat;

    // Occurrence counts over not-yet-satisfied clauses; also detects purity.
    std::vector<int> pos(cnf_.num_vars + 1, 0), neg(cnf_.num_vars + 1, 0);
    bool all_sat = true;
    for (const auto& clause : cnf_.clauses) {
      bool sat = false;
      for (const auto& lit : clause) {
        int8_t v = vals[lit.var()];
        if (v != kUnset && (v == kTrue) == lit.positive()) {
          sat = true;
          break;
        }
      }
      if (sat) continue;
      all_sat = false;
      for (const auto& lit : clause) {
        if (vals[lit.var()] != kUnset) continue;
        (lit.positive() ? pos : neg)[lit.var()]++;
      }
    }
    if (all_sat) {
      model_ = vals;
      return kSat;
    }

    bool pure_found = false;
    for (int v = 1; v <= cnf_.num_vars; ++v) {
      if (vals[v] != kUnset) continue;
      if (pos[v] > 0 && neg[v] == 0) {
        vals[v] = kTrue;
        pure_found = true;
      } else if (neg[v] > 0 && pos[v] == 0) {
        vals[v] = kFalse;
        pure_found = true;
      }
    }
    if (pure_found) return search(std::move(vals));

    int best_var = 0, best_count = -1;
    for (int v = 1; v <= cnf_.num_vars; ++v) {
      if (vals[v] != kUnset) continue;
      int c = pos[v] + neg[v];
      if (c > best_count) {
        best_count = c;
        best_var = v;
      }
    }
    assert(best_var != 0);

    bool first = pos[best_var] >= neg[best_var];
    for (int branch = 0; branch < 2; ++branch) {
      std::vector<int8_t> next = vals;
      next[best_var] = (branch == 0) == first ? kTrue : kFalse;
      int8_t r = search(std::move(next));
      if (r != kUnsat) return r;
    }
    return kUnsat;
  }

  const Cnf& cnf_;
  int64_t budget_;
  int64_t nodes_ = 0;
  std::vector<int8_t> model_;
};

}  // namespace

SolveResult dpll_solve(const Cnf& cnf, int64_t node_budget) {
  return DpllSearch(cnf, node_budget).run();
}

MaxSatResult brute_force_max_sat(const Cnf& cnf) {
  if (cnf.num_vars > 24)
    throw std::invalid_argument("brute_force_max_sat: num_vars > 24");
  MaxSatResult best;
  best.optimum = -1;
  Assignment a(cnf.num_vars);
  const uint64_t total = 1ULL << cnf.num_vars;
  for (uint64_t bits = 0; bits < total; ++bits) {
    for (int v = 1; v <= cnf.num_vars; ++v) a.set(v, (bits >> (v - 1)) & 1);
    int sat = evaluate(cnf, a).satisfied_count;
    if (sat > best.optimum) {
      best.optimum = sat;
      best.witness = a;
      if (best.optimum == static_cast<int>(cnf.clauses.size())) break;
    }
  }
  return best;
}

CountResult count_solutions(const Cnf& cnf, int64_t node_budget) {
  CountResult res;
  if (cnf.num_vars <= 24) {
    Assignment a(cnf.num_vars);
    const uint64_t total = 1ULL << cnf.num_vars;
    for (uint64_t bits = 0; bits < total; ++bits) {
      for (int v = 1; v <= cnf.num_vars; ++v) a.set(v, (bits >> (v - 1)) & 1);
      if (evaluate(cnf, a).all_satisfied) ++res.count;
    }
    return res;
  }
  // Capped mode: DPLL with blocking clauses, stop at 2 solutions.
  Cnf work = cnf;
  while (res.count < 2) {
    SolveResult sr = dpll_solve(work, node_budget);
    if (sr.status == SolveStatus::BudgetExceeded)
      throw std::runtime_error("count_solutions: node budget exceeded");
    if (sr.status == SolveStatus::Unsat) return res;
    ++res.count;
    Clause block;
    for (int v = 1; v <= cnf.num_vars; ++v) block.push_back(Lit(v, !sr.model.value(v)));
    work.clauses.push_back(block);
  }
  res.exact = false;  // count is min(true count, 2)
  return res;
}

}  // namespace satlab
