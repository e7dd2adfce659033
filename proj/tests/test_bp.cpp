#include <cmath>

#include "doctest.h"
#include "satlab/bp.hpp"
#include "satlab/solver.hpp"
#include "test_helpers.hpp"

using namespace satlab;

namespace {

// Random formula whose factor graph is a forest: each new clause shares at
// most one variable with the already-connected part.
Cnf random_forest_cnf(int num_vars, int num_clauses, Rng& rng) {
  for (;;) {
    Cnf cnf;
    cnf.num_vars = num_vars;
    std::vector<char> used(num_vars + 1, 0);
    for (int c = 0; c < num_clauses; ++c) {
      std::vector<int> fresh, old;
      for (int v = 1; v <= num_vars; ++v) (used[v] ? old : fresh).push_back(v);
      if (fresh.empty()) break;
      int k = 1 + static_cast<int>(rng.below(3));
      Clause clause;
      bool link = !old.empty() && rng.bernoulli(0.5);
      if (link) clause.push_back(Lit(rng.pick(old), rng.bernoulli(0.5)));
      rng.shuffle(fresh);
      for (int i = 0; i < k && i < static_cast<int>(fresh.size()); ++i)
        clause.push_back(Lit(fresh[i], rng.bernoulli(0.5)));
      for (Lit l : clause) used[l.var()] = 1;
      cnf.clauses.push_back(clause);
    }
    if (cnf.clauses.empty()) continue;
    if (dpll_solve(cnf).status == SolveStatus::Sat) return cnf;
  }
}

// P(x_v = true) under the uniform distribution on satisfying assignments.
std::vector<double> exact_marginals(const Cnf& cnf) {
  std::vector<double> out(cnf.num_vars + 1, 0.0);
  int64_t total = 0;
  Assignment a(cnf.num_vars);
  for (uint64_t mask = 0; mask < (1ULL << cnf.num_vars); ++mask) {
    for (int v = 1; v <= cnf.num_vars; ++v) a.set(v, (mask >> (v - 1)) & 1);
    if (!evaluate(cnf, a).all_satisfied) continue;
    ++total;
    for (int v = 1; v <= cnf.num_vars; ++v)
      if (a.value(v)) out[v] += 1.0;
  }
  REQUIRE(total > 0);
  for (int v = 1; v <= cnf.num_vars; ++v) out[v] /= static_cast<double>(total);
  return out;
}

}  // namespace

TEST_CASE("unit clause pins its variable; untouched variables stay at 1/2") {
  Cnf cnf = testing::make_cnf(3, {{1}, {-1, 2}});
  Rng rng(1);
  BpResult r = bp_run(build_factor_graph(cnf), BpConfig{}, rng);
  REQUIRE(r.converged);
  CHECK(r.marginal[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.marginal[2] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.marginal[3] == doctest::Approx(0.5));

  Cnf neg = testing::make_cnf(2, {{-1}});
  BpResult rn = bp_run(build_factor_graph(neg), BpConfig{}, rng);
  CHECK(rn.marginal[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("marginals on forest formulas match brute-force enumeration") {
  Rng rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    int n = 3 + static_cast<int>(rng.below(8));
    Cnf cnf = random_forest_cnf(n, 2 + static_cast<int>(rng.below(n)), rng);
    std::vector<double> want = exact_marginals(cnf);
    BpResult r = bp_run(build_factor_graph(cnf), BpConfig{}, rng);
    REQUIRE(r.converged);
    for (int v = 1; v <= n; ++v)
      CHECK(r.marginal[v] == doctest::Approx(want[v]).scale(1.0).epsilon(1e-6));
  }
}

TEST_CASE("complementing every literal mirrors the marginals exactly") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    Cnf cnf = testing::random_cnf(8, 18, rng, 3);
    Cnf flipped = cnf;
    for (auto& c : flipped.clauses)
      for (auto& l : c) l = l.complement();
    Rng ra(99), rb(99);
    BpConfig cfg;
    cfg.max_iters = 200;
    BpResult a = bp_run(build_factor_graph(cnf), cfg, ra);
    BpResult b = bp_run(build_factor_graph(flipped), cfg, rb);
    REQUIRE(a.iterations == b.iterations);
    for (int v = 1; v <= 8; ++v)
      CHECK(a.marginal[v] == doctest::Approx(1.0 - b.marginal[v]).scale(1.0).epsilon(1e-12));
  }
}

TEST_CASE("walksat refines an assignment and reports success only on models") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    Cnf cnf;
    for (;;) {
      cnf = testing::random_cnf(10, 30, rng, 3);
      if (dpll_solve(cnf).status == SolveStatus::Sat) break;
    }
    Assignment a(10);
    for (int v = 1; v <= 10; ++v) a.set(v, rng.bernoulli(0.5));
    if (local_search(cnf, a, 20000, 0.5, rng)) CHECK(evaluate(cnf, a).all_satisfied);
  }
}

TEST_CASE("decimation solver is sound on sat and honest on unsat inputs") {
  Rng rng(17);
  int sat_total = 0, solved_sat = 0;
  for (int trial = 0; trial < 40; ++trial) {
    int n = 6 + static_cast<int>(rng.below(8));
    Cnf cnf = testing::random_cnf(n, 3 * n, rng, 3);
    bool sat = dpll_solve(cnf).status == SolveStatus::Sat;
    if (sat) ++sat_total;
    BpSolveResult r = bp_decimate_solve(cnf, BpSolveConfig{}, rng);
    if (r.solved) {
      CHECK(sat);
      CHECK(evaluate(cnf, r.assignment).all_satisfied);
      ++solved_sat;
    }
  }
  // easy sub-threshold instances: expect nearly all satisfiable ones solved
  CHECK(solved_sat >= sat_total / 2);
  CHECK(sat_total >= 1);
}

TEST_CASE("formula fixed by units alone is solved without local search") {
  Cnf cnf = testing::make_cnf(3, {{1}, {-1, 2}, {-2, -3}});
  Rng rng(23);
  BpSolveResult r = bp_decimate_solve(cnf, BpSolveConfig{}, rng);
  REQUIRE(r.solved);
  CHECK(evaluate(cnf, r.assignment).all_satisfied);
  CHECK(r.assignment.value(1));
  CHECK(r.assignment.value(2));
  CHECK_FALSE(r.assignment.value(3));
}
