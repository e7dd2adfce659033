#include <cmath>

#include "doctest.h"
#include "satlab/sdp.hpp"
#include "satlab/solver.hpp"
#include "test_helpers.hpp"

using namespace satlab;

namespace {

std::vector<std::vector<double>> random_unit_vectors(int count, int dim, Rng& rng) {
  std::vector<std::vector<double>> v(count, std::vector<double>(dim));
  for (auto& row : v) {
    double n = 0;
    for (auto& x : row) {
      x = rng.normal();
      n += x * x;
    }
    n = std::sqrt(n);
    for (auto& x : row) x /= n;
  }
  return v;
}

std::vector<int> signs_of(const Assignment& a, int n) {
  std::vector<int> s(n + 1, 1);
  for (int v = 1; v <= n; ++v) s[v] = a.value(v) ? 1 : -1;
  return s;
}

}  // namespace

TEST_CASE("hand-expanded coefficients for x1 or not-x2") {
  // sat(l1 v l2) = 3/4 + s1/4 + s2/4 - s1 s2 / 4 with s_i the signed value;
  // s1 = y0 . x1 and s2 = -(y0 . x2) here, coefficients split symmetrically.
  Cnf cnf = testing::make_cnf(2, {{1, -2}});
  SdpProblem p = build_max2sat_sdp(cnf);
  REQUIRE(p.n == 2);
  CHECK(p.constant_offset == doctest::Approx(0.75));
  CHECK(p.W(0, 1) == doctest::Approx(1.0 / 8));
  CHECK(p.W(1, 0) == doctest::Approx(1.0 / 8));
  CHECK(p.W(0, 2) == doctest::Approx(-1.0 / 8));
  CHECK(p.W(2, 0) == doctest::Approx(-1.0 / 8));
  CHECK(p.W(1, 2) == doctest::Approx(1.0 / 8));
  CHECK(p.W(2, 1) == doctest::Approx(1.0 / 8));
  CHECK(p.W(0, 0) == 0.0);
  CHECK(p.W(1, 1) == 0.0);
  CHECK(p.W(2, 2) == 0.0);

  // all four assignments: clause satisfied unless x1=F, x2=T
  for (int mask = 0; mask < 4; ++mask) {
    std::vector<int> s = {1, (mask & 1) ? 1 : -1, (mask & 2) ? 1 : -1};
    int want = (s[1] == -1 && s[2] == 1) ? 0 : 1;
    CHECK(p.objective_integral(s) == doctest::Approx(want));
  }
}

TEST_CASE("unit clauses, tautologies and repeated literals in the expansion") {
  // {2,-2} is always satisfied; {1,1} collapses to the unit {1}
  Cnf cnf = testing::make_cnf(2, {{1}, {2, -2}, {1, -2}, {1, 1}});
  SdpProblem p = build_max2sat_sdp(cnf);
  for (int mask = 0; mask < 4; ++mask) {
    Assignment a(2);
    a.set(1, mask & 1);
    a.set(2, mask & 2);
    int want = evaluate(cnf, a).satisfied_count;
    CHECK(p.objective_integral(signs_of(a, 2)) == doctest::Approx(want));
  }

  Cnf wide = testing::make_cnf(3, {{1, 2, 3}});
  CHECK_THROWS_AS(build_max2sat_sdp(wide), std::invalid_argument);
}

TEST_CASE("integral objective equals satisfied count on random 2-cnfs") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(rng.below(7));
    Cnf cnf = testing::random_cnf(n, 3 + static_cast<int>(rng.below(12)), rng, 2);
    SdpProblem p = build_max2sat_sdp(cnf);
    for (uint64_t mask = 0; mask < (1ULL << n); ++mask) {
      Assignment a(n);
      for (int v = 1; v <= n; ++v) a.set(v, (mask >> (v - 1)) & 1);
      int sat = evaluate(cnf, a).satisfied_count;
      CHECK(p.objective_integral(signs_of(a, n)) == doctest::Approx(sat).epsilon(1e-9));
    }
  }
}

TEST_CASE("coordinate ascent never decreases the objective between sweeps") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 6 + static_cast<int>(rng.below(5));
    Cnf cnf = testing::random_cnf(n, 4 * n, rng, 2);
    SdpProblem p = build_max2sat_sdp(cnf);
    auto v = random_unit_vectors(n + 1, 4, rng);
    double prev = p.objective(v);
    for (int sweep = 0; sweep < 12; ++sweep) {
      VectorSolution s = solve_low_rank_from(p, v, 1, 0.0);
      CHECK(s.objective >= prev - 1e-12);
      prev = s.objective;
      v = s.vectors;
    }
  }
}

TEST_CASE("relaxation value meets the optimum; rounding clears 0.878 of it") {
  Rng rng(13);
  for (int trial = 0; trial < 15; ++trial) {
    int n = 5 + static_cast<int>(rng.below(6));
    Cnf cnf = testing::random_cnf(n, 3 * n, rng, 2);
    SdpProblem p = build_max2sat_sdp(cnf);
    VectorSolution sol = solve_low_rank(p, 6, 500, 1e-10, rng);
    int opt = brute_force_max_sat(cnf).optimum;
    // count against the deduplicated clause set that the SDP represents
    SdpProblem check = p;
    CHECK(sol.objective >= opt - 1e-4);
    Assignment rounded = round_random_hyperplane(cnf, sol, rng, 30);
    int got = evaluate(cnf, rounded).satisfied_count;
    CHECK(got >= 0.8785 * opt - 1e-9);
  }
}

TEST_CASE("multilinear value counts unsatisfied clauses on integral points") {
  Rng rng(17);
  std::vector<double> y0 = {1, 0, 0, 0};
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + static_cast<int>(rng.below(6));
    Cnf cnf = testing::random_cnf(n, 2 + static_cast<int>(rng.below(10)), rng, 5);
    for (uint64_t mask = 0; mask < (1ULL << n); ++mask) {
      Assignment a(n);
      for (int v = 1; v <= n; ++v) a.set(v, (mask >> (v - 1)) & 1);
      std::vector<std::vector<double>> vecs(n + 1, y0);
      for (int v = 1; v <= n; ++v)
        if (!a.value(v))
          for (auto& x : vecs[v]) x = -x;
      MultilinearEval e = multilinear_objective(cnf, vecs, y0);
      int unsat = static_cast<int>(cnf.clauses.size()) - evaluate(cnf, a).satisfied_count;
      CHECK(e.value == doctest::Approx(unsat).epsilon(1e-12));
    }
  }
}

TEST_CASE("multilinear gradient matches finite differences in the tangent space") {
  Rng rng(21);
  const int dim = 4;
  std::vector<double> y0 = {1, 0, 0, 0};
  for (int trial = 0; trial < 10; ++trial) {
    int n = 3 + static_cast<int>(rng.below(3));
    Cnf cnf = testing::random_cnf(n, 8, rng, 4);
    auto vecs = random_unit_vectors(n + 1, dim, rng);
    vecs[0] = y0;
    MultilinearEval e = multilinear_objective(cnf, vecs, y0);
    const double h = 1e-6;
    for (int v = 1; v <= n; ++v) {
      // tangent component of the numeric gradient
      for (int k = 0; k < dim; ++k) {
        auto vp = vecs, vm = vecs;
        vp[v][k] += h;
        vm[v][k] -= h;
        double num = (multilinear_objective(cnf, vp, y0).value -
                      multilinear_objective(cnf, vm, y0).value) /
                     (2 * h);
        // remove the radial part before comparing
        double radial = 0;
        for (int j = 0; j < dim; ++j) {
          auto vpj = vecs, vmj = vecs;
          for (int q = 0; q < dim; ++q) {
            vpj[v][q] += h * vecs[v][q];
            vmj[v][q] -= h * vecs[v][q];
          }
          radial = (multilinear_objective(cnf, vpj, y0).value -
                    multilinear_objective(cnf, vmj, y0).value) /
                   (2 * h);
          break;
        }
        double tangent_num = num - radial * vecs[v][k];
        CHECK(e.grad[v][k] == doctest::Approx(tangent_num).epsilon(1e-4).scale(1.0));
      }
      // gradient is orthogonal to the vector itself
      double dot = 0;
      for (int k = 0; k < dim; ++k) dot += e.grad[v][k] * vecs[v][k];
      CHECK(std::abs(dot) < 1e-10);
    }
  }
}

TEST_CASE("direct descent is monotone and solves small satisfiable formulas") {
  Rng rng(29);
  int solved = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Cnf cnf;
    for (;;) {
      cnf = testing::random_cnf(6, 14, rng, 3);
      if (dpll_solve(cnf).status == SolveStatus::Sat) break;
    }
    DirectOptimizeResult r = direct_optimize_multilinear(cnf, 5, 300, rng);
    if (r.solved) {
      CHECK(evaluate(cnf, r.assignment).all_satisfied);
      ++solved;
    }
    std::vector<double> y0(5, 0.0);
    y0[0] = 1.0;
    CHECK(r.objective <= multilinear_objective(cnf, r.vectors, y0).value + 1e-9);
  }
  CHECK(solved >= 6);  // most easy instances should extract a model
}
