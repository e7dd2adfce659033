#include "satlab/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "satlab/solver.hpp"

namespace satlab {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

std::vector<double> random_unit(int dim, Rng& rng) {
  std::vector<double> v(dim);
  double n = 0;
  do {
    for (auto& x : v) x = rng.normal();
    n = norm(v);
  } while (n < 1e-12);
  for (auto& x : v) x /= n;
  return v;
}

}  // namespace

double SdpProblem::objective(const std::vector<std::vector<double>>& vectors) const {
  double s = constant_offset;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      if (W(i, j) != 0.0) s += W(i, j) * dot(vectors[i], vectors[j]);
  return s;
}

double SdpProblem::objective_integral(const std::vector<int>& signs) const {
  double s = constant_offset;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) s += W(i, j) * signs[i] * signs[j];
  return s;
}

SdpProblem build_max2sat_sdp(const Cnf& cnf) {
  SdpProblem p;
  p.n = cnf.num_vars;
  p.w.assign(static_cast<size_t>(p.n + 1) * (p.n + 1), 0.0);
  auto add_pair = [&](int i, int j, double c) {
    // coefficient c of y_i*y_j, split symmetrically so Tr(WY) sums both halves
    p.W(i, j) += c / 2;
    p.W(j, i) += c / 2;
  };
  for (const auto& raw : cnf.clauses) {
    // treat a clause as a set; a tautological clause is always satisfied
    Clause clause = raw;
    std::sort(clause.begin(), clause.end());
    clause.erase(std::unique(clause.begin(), clause.end()), clause.end());
    bool tautology = false;
    for (size_t i = 0; i + 1 < clause.size(); ++i)
      if (clause[i].var() == clause[i + 1].var()) tautology = true;
    if (tautology) {
      p.constant_offset += 1.0;
      continue;
    }
    if (clause.size() == 1) {
      double s = clause[0].positive() ? 1.0 : -1.0;
      p.constant_offset += 0.5;
      add_pair(0, clause[0].var(), s / 2);
    } else if (clause.size() == 2) {
      double si = clause[0].positive() ? 1.0 : -1.0;
      double sj = clause[1].positive() ? 1.0 : -1.0;
      p.constant_offset += 0.75;
      add_pair(0, clause[0].var(), si / 4);
      add_pair(0, clause[1].var(), sj / 4);
      add_pair(clause[0].var(), clause[1].var(), -si * sj / 4);
    } else {
      throw std::invalid_argument("build_max2sat_sdp: clause with " +
                                  std::to_string(clause.size()) + " literals");
    }
  }
  return p;
}

VectorSolution solve_low_rank_from(const SdpProblem& p, std::vector<std::vector<double>> vectors,
                                   int max_sweeps, double tol) {
  VectorSolution sol;
  sol.vectors = std::move(vectors);
  double prev = p.objective(sol.vectors);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int i = 1; i <= p.n; ++i) {  // row 0 is the fixed anchor
      std::vector<double> g(sol.vectors[0].size(), 0.0);
      for (int j = 0; j <= p.n; ++j) {
        double w = p.W(i, j);
        if (w == 0.0 || j == i) continue;
        for (size_t k = 0; k < g.size(); ++k) g[k] += w * sol.vectors[j][k];
      }
      double gn = norm(g);
      if (gn < 1e-14) continue;  // zero gradient: row left unchanged
      for (size_t k = 0; k < g.size(); ++k) sol.vectors[i][k] = g[k] / gn;
    }
    double cur = p.objective(sol.vectors);
    if (cur - prev < tol) {
      prev = cur;
      break;
    }
    prev = cur;
  }
  sol.objective = prev;
  return sol;
}

VectorSolution solve_low_rank(const SdpProblem& p, int rank, int max_sweeps, double tol, Rng& rng) {
  if (rank < 2) throw std::invalid_argument("solve_low_rank: rank < 2");
  std::vector<std::vector<double>> vectors(p.n + 1);
  for (auto& v : vectors) v = random_unit(rank, rng);
  return solve_low_rank_from(p, std::move(vectors), max_sweeps, tol);
}

Assignment round_sign(const VectorSolution& sol) {
  int n = static_cast<int>(sol.vectors.size()) - 1;
  Assignment a(n);
  for (int i = 1; i <= n; ++i) a.set(i, dot(sol.vectors[0], sol.vectors[i]) >= 0.0);
  return a;
}

Assignment round_random_hyperplane(const Cnf& cnf, const VectorSolution& sol, Rng& rng,
                                   int trials) {
  if (trials < 1) throw std::invalid_argument("round_random_hyperplane: trials < 1");
  int n = static_cast<int>(sol.vectors.size()) - 1;
  Assignment best;
  int best_count = -1;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> g = random_unit(static_cast<int>(sol.vectors[0].size()), rng);
    double side0 = dot(g, sol.vectors[0]);
    Assignment a(n);
    for (int i = 1; i <= n; ++i) a.set(i, (dot(g, sol.vectors[i]) >= 0.0) == (side0 >= 0.0));
    int count = evaluate(cnf, a).satisfied_count;
    if (count > best_count) {
      best_count = count;
      best = a;
    }
  }
  return best;
}

MultilinearEval multilinear_objective(const Cnf& cnf,
                                      const std::vector<std::vector<double>>& vectors,
                                      const std::vector<double>& y0) {
  size_t dim = y0.size();
  MultilinearEval out;
  out.grad.assign(cnf.num_vars + 1, std::vector<double>(dim, 0.0));
  for (const auto& clause : cnf.clauses) {
    std::vector<double> factors(clause.size());
    double prod = 1.0;
    for (size_t k = 0; k < clause.size(); ++k) {
      double sgn = clause[k].positive() ? 1.0 : -1.0;
      factors[k] = 0.5 * (1.0 - sgn * dot(vectors[clause[k].var()], y0));
      prod *= factors[k];
    }
    out.value += prod;
    for (size_t k = 0; k < clause.size(); ++k) {
      double rest = 1.0;
      for (size_t j = 0; j < clause.size(); ++j)
        if (j != k) rest *= factors[j];
      double sgn = clause[k].positive() ? 1.0 : -1.0;
      double coeff = -0.5 * sgn * rest;  // d factor_k / d x_v = -sgn/2 * y0
      auto& g = out.grad[clause[k].var()];
      for (size_t d = 0; d < dim; ++d) g[d] += coeff * y0[d];
    }
  }
  // project each gradient onto the tangent space of the unit sphere
  for (int v = 1; v <= cnf.num_vars; ++v) {
    double r = dot(out.grad[v], vectors[v]);
    for (size_t d = 0; d < dim; ++d) out.grad[v][d] -= r * vectors[v][d];
  }
  return out;
}

DirectOptimizeResult direct_optimize_multilinear(const Cnf& cnf, int dim, int iters, Rng& rng) {
  if (dim < 2) throw std::invalid_argument("direct_optimize_multilinear: dim < 2");
  std::vector<double> y0 = random_unit(dim, rng);
  std::vector<std::vector<double>> vectors(cnf.num_vars + 1);
  vectors[0] = y0;
  for (int v = 1; v <= cnf.num_vars; ++v) vectors[v] = random_unit(dim, rng);

  double step = 1.0;
  MultilinearEval cur = multilinear_objective(cnf, vectors, y0);
  for (int it = 0; it < iters; ++it) {
    double gsq = 0;
    for (int v = 1; v <= cnf.num_vars; ++v) gsq += dot(cur.grad[v], cur.grad[v]);
    if (gsq < 1e-18) break;
    // backtracking line search; accepted steps never increase the objective
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt) {
      auto trial = vectors;
      for (int v = 1; v <= cnf.num_vars; ++v) {
        for (int d = 0; d < dim; ++d) trial[v][d] -= step * cur.grad[v][d];
        double n = norm(trial[v]);
        for (int d = 0; d < dim; ++d) trial[v][d] /= n;  // retraction to the sphere
      }
      MultilinearEval next = multilinear_objective(cnf, trial, y0);
      if (next.value <= cur.value) {
        vectors = std::move(trial);
        cur = std::move(next);
        step *= 1.5;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }

  DirectOptimizeResult res;
  res.objective = cur.value;
  VectorSolution sol;
  sol.vectors = vectors;
  res.assignment = round_sign(sol);
  res.solved = evaluate(cnf, res.assignment).all_satisfied;
  res.vectors = std::move(vectors);
  return res;
}

}  // namespace satlab
