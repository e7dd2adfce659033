#pragma once

#include <vector>

#include "satlab/cnf.hpp"
#include "satlab/rng.hpp"

namespace satlab {

// MAX-2-SAT relaxation data: Tr(W Y) + constant_offset equals the satisfied
// clause count on every integral +-1 rank-1 Y. Index 0 is the truth anchor y0.
struct SdpProblem {
  int n = 0;                              // Boolean variable count
  std::vector<double> w;                  // (n+1) x (n+1), row-major, symmetric
  double constant_offset = 0.0;

  double& W(int i, int j) { return w[static_cast<size_t>(i) * (n + 1) + j]; }
  double W(int i, int j) const { return w[static_cast<size_t>(i) * (n + 1) + j]; }

  // Tr(W Y) + offset for Y = V V^T given unit rows V (any rank).
  double objective(const std::vector<std::vector<double>>& vectors) const;
  // Same for integral y in {-1,+1}^(n+1).
  double objective_integral(const std::vector<int>& signs) const;
};

struct VectorSolution {
  std::vector<std::vector<double>> vectors;  // (n+1) rows, each L2-normalized
  double objective = 0.0;
};

SdpProblem build_max2sat_sdp(const Cnf& cnf);

// Block-coordinate ascent on the unit sphere ("mixing"-style): row_i <-
// normalize(sum_j W_ij row_j), anchor row 0 fixed. Objective is monotone
// non-decreasing across updates.
VectorSolution solve_low_rank(const SdpProblem& p, int rank, int max_sweeps, double tol, Rng& rng);
// Continue coordinate ascent from a given set of unit vectors.
VectorSolution solve_low_rank_from(const SdpProblem& p, std::vector<std::vector<double>> vectors,
                                   int max_sweeps, double tol);

Assignment round_sign(const VectorSolution& sol);
Assignment round_random_hyperplane(const Cnf& cnf, const VectorSolution& sol, Rng& rng, int trials);

// Multilinear MAX-SAT objective: sum over clauses of prod over literals of
// (1 - sgn(l) <x_l, x_0>)/2; equals the unsatisfied-clause count on integral
// configurations. Gradient is projected to the unit-sphere tangent space.
struct MultilinearEval {
  double value = 0.0;
  std::vector<std::vector<double>> grad;  // per variable vector (index 1..n used)
};

MultilinearEval multilinear_objective(const Cnf& cnf,
                                      const std::vector<std::vector<double>>& vectors,
                                      const std::vector<double>& y0);

struct DirectOptimizeResult {
  std::vector<std::vector<double>> vectors;
  Assignment assignment;
  bool solved = false;
  double objective = 0.0;
};

// Projected gradient descent on the sphere with backtracking line search,
// y0 fixed; extraction by inner-product sign.
DirectOptimizeResult direct_optimize_multilinear(const Cnf& cnf, int dim, int iters, Rng& rng);

}  // namespace satlab
