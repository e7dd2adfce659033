#pragma once

#include <vector>

#include "satlab/cnf.hpp"
#include "satlab/rng.hpp"

namespace satlab {

// Standard two-state belief propagation for SAT. The message eta_{a->i} on
// each clause->variable edge is the probability that every other variable of
// clause a is set to unsatisfy its literal there (a "warning"):
//
//   eta_{a->i} = prod_{j in a\i}  Pu_{j->a} / (Pu_{j->a} + Ps_{j->a})
//   Pu_{j->a}  = prod over clauses b != a where j appears with the SAME sign
//                as in a of (1 - eta_{b->j})
//   Ps_{j->a}  = prod over clauses b where j appears with the OPPOSITE sign
//                of (1 - eta_{b->j})
//
// (setting j against its literal in a leaves exactly the same-sign clauses
// unsatisfied-by-j, hence their (1 - eta) factors). The marginal of x_i is
//
//   mu_i(true) ∝ prod over clauses with literal ¬x_i of (1 - eta_{b->i})
//
// and symmetrically for false. Exact on acyclic factor graphs.
struct BpConfig {
  int max_iters = 1000;
  double tol = 1e-10;    // convergence threshold on max message change
  double damping = 0.5;  // eta <- damping*old + (1-damping)*new
};

struct BpResult {
  std::vector<double> marginal;  // index 1..n: P(x_v = true); [0] unused
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

BpResult bp_run(const FactorGraph& graph, const BpConfig& cfg, Rng& rng);

// WalkSAT-style local search from a seed assignment: pick a random unsatisfied
// clause, flip a noise-random or minimal-break variable in it. Returns true if
// a satisfying assignment was found (left in `a`).
bool local_search(const Cnf& cnf, Assignment& a, long max_flips, double noise, Rng& rng);

struct BpSolveConfig {
  BpConfig bp;
  double fix_threshold = 0.9;  // fix vars with marginal >= thr or <= 1-thr
  int flips_per_var = 100;     // local-search budget: flips_per_var * num_vars
  double noise = 0.5;
};

struct BpSolveResult {
  bool solved = false;
  Assignment assignment;  // full assignment when solved
  int bp_rounds = 0;
  bool used_local_search = false;
};

// Decimation loop: run BP, fix extreme-marginal variables, condition, repeat;
// once no marginal is extreme the residual goes to local search. A
// contradiction while conditioning reports unsolved.
BpSolveResult bp_decimate_solve(const Cnf& cnf, const BpSolveConfig& cfg, Rng& rng);

}  // namespace satlab
