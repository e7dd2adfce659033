#include <sstream>

#include "doctest.h"
#include "satlab/cnf.hpp"
#include "satlab/solver.hpp"
#include "test_helpers.hpp"

using namespace satlab;
using namespace satlab::testing;

TEST_CASE("dimacs parsing") {
  Cnf c = parse_dimacs("p cnf 2 2\n1 -2 0\n2 0");
  CHECK(c.num_vars == 2);
  REQUIRE(c.clauses.size() == 2);
  CHECK(c.clauses[0] == Clause{Lit::from_dimacs(1), Lit::from_dimacs(-2)});
  CHECK(c.clauses[1] == Clause{Lit::from_dimacs(2)});

  Cnf c2 = parse_dimacs("c comment\np cnf 1 1\n1 0");
  CHECK(c2.num_vars == 1);
  CHECK(c2.clauses == std::vector<Clause>{Clause{Lit::from_dimacs(1)}});

  CHECK_THROWS_AS(parse_dimacs("p cnf 1 1\n3 0"), ParseError);
  CHECK_THROWS_AS(parse_dimacs("p dnf 1 1\n1 0"), ParseError);
  CHECK_THROWS_AS(parse_dimacs("p cnf 2 1\n1 2"), ParseError);  // missing terminator
  try {
    parse_dimacs("p cnf 1 1\n3 0");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("dimacs round trip on random formulas") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    Cnf c = random_cnf(2 + static_cast<int>(rng.below(12)), 1 + static_cast<int>(rng.below(30)),
                       rng);
    CHECK(parse_dimacs(write_dimacs(c)) == c);
  }
}

TEST_CASE("evaluate") {
  Cnf c = make_cnf(2, {{1, 2}, {-1}, {-2}});
  Assignment a(2);
  a.set(1, true);
  a.set(2, false);
  EvalResult r = evaluate(c, a);
  CHECK(r.satisfied_count == 2);
  CHECK_FALSE(r.all_satisfied);

  CHECK(evaluate(make_cnf(2, {}), a).all_satisfied);  // vacuous conjunction

  Assignment b(1);
  b.set(1, false);
  CHECK(evaluate(make_cnf(1, {{1}}), b).satisfied_count == 0);

  Assignment partial(2);
  partial.set(1, true);
  CHECK_THROWS(evaluate(c, partial));
}

TEST_CASE("unit propagation") {
  {
    PropagationResult r = unit_propagate(make_cnf(2, {{1}, {-1, 2}}));
    CHECK(r.status == PropStatus::Solved);
    CHECK(r.fixed.value(1));
    CHECK(r.fixed.value(2));
  }
  CHECK(unit_propagate(make_cnf(1, {{1}, {-1}})).status == PropStatus::Unsat);
  {
    PropagationResult r = unit_propagate(make_cnf(2, {{1, 2}}));
    CHECK(r.status == PropStatus::Reduced);
    CHECK(r.fixed.empty());
    CHECK(r.residual == make_cnf(2, {{1, 2}}));
  }
}

TEST_CASE("condition") {
  {
    Assignment p(3);
    p.set(2, true);
    PropagationResult r = condition(make_cnf(3, {{1, 2}, {-2, 3}}), p);
    CHECK(r.status == PropStatus::Solved);
    CHECK(r.fixed.value(3));
  }
  {
    Assignment p(1);
    p.set(1, false);
    CHECK(condition(make_cnf(1, {{1}}), p).status == PropStatus::Unsat);
  }
  {
    // empty partial: identical to plain unit propagation
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
      Cnf c = random_cnf(6, 10, rng);
      PropagationResult a = unit_propagate(c);
      PropagationResult b = condition(c, Assignment(c.num_vars));
      CHECK(a.status == b.status);
      if (a.status != PropStatus::Unsat) CHECK(a.residual == b.residual);
    }
  }
}

TEST_CASE("residual substitution identity") {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    Cnf c = random_cnf(8, 14, rng);
    PropagationResult r = unit_propagate(c);
    if (r.status != PropStatus::Reduced) continue;
    // residual solution extended by fixed values satisfies the original
    SolveResult s = dpll_solve(r.residual);
    if (s.status != SolveStatus::Sat) continue;
    Assignment full(c.num_vars);
    for (int v = 1; v <= c.num_vars; ++v)
      if (r.fixed.has(v)) full.set(v, r.fixed.value(v));
    for (int rv = 1; rv <= r.residual.num_vars; ++rv)
      full.set(r.remap.to_orig(rv), s.model.value(rv));
    for (int v = 1; v <= c.num_vars; ++v)
      if (!full.has(v)) full.set(v, true);
    CHECK(evaluate(c, full).all_satisfied);
  }
}

TEST_CASE("factor graph") {
  {
    FactorGraph g = build_factor_graph(make_cnf(2, {{1, -2}}));
    CHECK(g.num_lits() == 4);
    CHECK(g.num_clauses == 1);
    REQUIRE(g.num_edges() == 2);
    CHECK(g.edge_lit[0] == 0);  // +x1
    CHECK(g.edge_lit[1] == 3);  // -x2
    CHECK(g.edge_clause[0] == 0);
  }
  {
    FactorGraph g = build_factor_graph(make_cnf(1, {{1}, {1}}));
    CHECK(g.num_clauses == 2);
    CHECK(g.lit_clauses[0] == std::vector<int>{0, 1});
  }
  {
    // unused variable still gets two degree-0 literal nodes
    FactorGraph g = build_factor_graph(make_cnf(2, {{1}}));
    CHECK(g.num_lits() == 4);
    CHECK(g.lit_clauses[2].empty());
    CHECK(g.lit_clauses[3].empty());
  }
  {
    // flip-pairing: node 2k and 2k+1 are the polarities of variable k+1
    Rng rng(5);
    Cnf c = random_cnf(9, 20, rng);
    FactorGraph g = build_factor_graph(c);
    for (int e = 0; e < g.num_edges(); ++e) {
      int l = g.edge_lit[e];
      CHECK(l / 2 == (l ^ 1) / 2);
    }
    for (size_t ci = 0; ci < c.clauses.size(); ++ci)
      for (Lit l : c.clauses[ci]) {
        bool found = false;
        for (int n : g.clause_lits[ci]) found |= n == l.node_index();
        CHECK(found);
      }
  }
}

TEST_CASE("dpll examples") {
  CHECK(dpll_solve(make_cnf(2, {{1, 2}, {-1}, {-2}})).status == SolveStatus::Unsat);
  SolveResult r = dpll_solve(make_cnf(1, {{1}}));
  CHECK(r.status == SolveStatus::Sat);
  CHECK(r.model.value(1));
}

TEST_CASE("dpll agrees with enumeration") {
  Rng rng(23);
  for (int i = 0; i < 300; ++i) {
    Cnf c = random_cnf(10, 4 + static_cast<int>(rng.below(30)), rng);
    SolveResult r = dpll_solve(c);
    REQUIRE(r.status != SolveStatus::BudgetExceeded);
    CHECK((r.status == SolveStatus::Sat) == enumerate_sat(c));
    if (r.status == SolveStatus::Sat) CHECK(evaluate(c, r.model).all_satisfied);
  }
}

TEST_CASE("equisatisfiability of the propagated residual") {
  Rng rng(29);
  for (int i = 0; i < 1000; ++i) {
    Cnf c = random_cnf(2 + static_cast<int>(rng.below(14)), 3 + static_cast<int>(rng.below(34)),
                       rng);
    bool sat = enumerate_sat(c);
    PropagationResult r = unit_propagate(c);
    if (r.status == PropStatus::Unsat)
      CHECK_FALSE(sat);
    else if (r.status == PropStatus::Solved)
      CHECK(sat);
    else
      CHECK(enumerate_sat(r.residual) == sat);
  }
}

TEST_CASE("max-sat oracle") {
  CHECK(brute_force_max_sat(make_cnf(2, {{1, 2}, {-1}, {-2}})).optimum == 2);
  CHECK(brute_force_max_sat(make_cnf(1, {{1}, {-1}})).optimum == 1);
  Rng rng(31);
  for (int i = 0; i < 150; ++i) {
    Cnf c = random_cnf(8, 5 + static_cast<int>(rng.below(20)), rng);
    MaxSatResult m = brute_force_max_sat(c);
    CHECK(m.optimum == enumerate_max_sat(c));
    CHECK(evaluate(c, m.witness).satisfied_count == m.optimum);
    CHECK((m.optimum == static_cast<int>(c.clauses.size())) ==
          (dpll_solve(c).status == SolveStatus::Sat));
  }
  Cnf big;
  big.num_vars = 25;
  big.clauses.push_back({Lit::from_dimacs(1)});
  CHECK_THROWS(brute_force_max_sat(big));
}

TEST_CASE("solution counting") {
  CHECK(count_solutions(make_cnf(1, {{1}})).count == 1);
  CHECK(count_solutions(make_cnf(2, {{1, 2}})).count == 3);
  CHECK(count_solutions(make_cnf(1, {{1}, {-1}})).count == 0);
  Rng rng(37);
  for (int i = 0; i < 100; ++i) {
    Cnf c = random_cnf(7, 8, rng);
    CHECK(count_solutions(c).count == enumerate_count(c));
  }
}

TEST_CASE("rng determinism and child streams") {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c1 = Rng::child(7, 0), c2 = Rng::child(7, 1);
  CHECK(c1.next_u64() != c2.next_u64());
}
