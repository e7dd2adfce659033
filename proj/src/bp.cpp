#include "satlab/bp.hpp"

#include <algorithm>
#include <cmath>

namespace satlab {

namespace {

constexpr double kFloor = 1e-300;  // both-sides underflow -> uninformative 0.5

struct EdgeIndex {
  std::vector<std::vector<int>> clause_edges;  // edge ids per clause
  std::vector<std::vector<int>> var_edges;     // edge ids per variable
  std::vector<int> edge_var;                   // 1-based variable per edge
  std::vector<bool> edge_pos;                  // literal polarity per edge
};

EdgeIndex build_index(const FactorGraph& g) {
  EdgeIndex ix;
  ix.clause_edges.resize(g.num_clauses);
  ix.var_edges.resize(g.num_vars + 1);
  ix.edge_var.resize(g.num_edges());
  ix.edge_pos.resize(g.num_edges());
  for (int e = 0; e < g.num_edges(); ++e) {
    int lit = g.edge_lit[e];
    ix.edge_var[e] = lit / 2 + 1;
    ix.edge_pos[e] = (lit % 2) == 0;
    ix.clause_edges[g.edge_clause[e]].push_back(e);
    ix.var_edges[ix.edge_var[e]].push_back(e);
  }
  return ix;
}

}  // namespace

BpResult bp_run(const FactorGraph& g, const BpConfig& cfg, Rng& rng) {
  EdgeIndex ix = build_index(g);
  int m = g.num_edges();
  std::vector<double> eta(m), eta_next(m), u(m);
  for (int e = 0; e < m; ++e) eta[e] = rng.uniform();

  BpResult res;
  for (int it = 0; it < cfg.max_iters; ++it) {
    // variable -> clause messages: u_e = P(var of e set against its literal)
    for (int e = 0; e < m; ++e) {
      double pu = 1.0, ps = 1.0;
      for (int f : ix.var_edges[ix.edge_var[e]]) {
        if (f == e) continue;
        if (ix.edge_pos[f] == ix.edge_pos[e])
          pu *= 1.0 - eta[f];
        else
          ps *= 1.0 - eta[f];
      }
      double z = pu + ps;
      u[e] = z < kFloor ? 0.5 : pu / z;
    }
    // clause -> variable messages with damping
    double residual = 0.0;
    for (int c = 0; c < g.num_clauses; ++c) {
      for (int e : ix.clause_edges[c]) {
        double prod = 1.0;
        for (int f : ix.clause_edges[c])
          if (f != e) prod *= u[f];
        eta_next[e] = cfg.damping * eta[e] + (1.0 - cfg.damping) * prod;
        residual = std::max(residual, std::abs(eta_next[e] - eta[e]));
      }
    }
    eta.swap(eta_next);
    res.iterations = it + 1;
    res.residual = residual;
    if (residual < cfg.tol) {
      res.converged = true;
      break;
    }
  }

  res.marginal.assign(g.num_vars + 1, 0.5);
  for (int v = 1; v <= g.num_vars; ++v) {
    double pt = 1.0, pf = 1.0;  // pt penalized by clauses needing x_v false
    for (int f : ix.var_edges[v]) {
      if (ix.edge_pos[f])
        pf *= 1.0 - eta[f];
      else
        pt *= 1.0 - eta[f];
    }
    double z = pt + pf;
    res.marginal[v] = z < kFloor ? 0.5 : pt / z;
  }
  return res;
}

bool local_search(const Cnf& cnf, Assignment& a, long max_flips, double noise, Rng& rng) {
  int n = cnf.num_vars;
  int nc = static_cast<int>(cnf.clauses.size());
  std::vector<std::vector<int>> var_clauses(n + 1);
  for (int c = 0; c < nc; ++c)
    for (Lit l : cnf.clauses[c]) var_clauses[l.var()].push_back(c);

  auto lit_sat = [&](Lit l) { return a.value(l.var()) == l.positive(); };
  std::vector<int> true_count(nc, 0);
  std::vector<int> unsat;  // stack of unsatisfied clause ids
  std::vector<int> unsat_pos(nc, -1);
  auto mark = [&](int c) {
    if (true_count[c] == 0 && unsat_pos[c] < 0) {
      unsat_pos[c] = static_cast<int>(unsat.size());
      unsat.push_back(c);
    } else if (true_count[c] > 0 && unsat_pos[c] >= 0) {
      int last = unsat.back();
      unsat[unsat_pos[c]] = last;
      unsat_pos[last] = unsat_pos[c];
      unsat.pop_back();
      unsat_pos[c] = -1;
    }
  };
  for (int c = 0; c < nc; ++c) {
    for (Lit l : cnf.clauses[c]) true_count[c] += lit_sat(l);
    mark(c);
  }
  auto flip = [&](int v) {
    a.set(v, !a.value(v));
    for (int c : var_clauses[v]) {
      true_count[c] = 0;
      for (Lit l : cnf.clauses[c]) true_count[c] += lit_sat(l);
      mark(c);
    }
  };
  auto break_count = [&](int v) {
    int b = 0;
    for (int c : var_clauses[v])
      if (true_count[c] == 1) {
        for (Lit l : cnf.clauses[c])
          if (l.var() == v && lit_sat(l)) {
            ++b;
            break;
          }
      }
    return b;
  };

  for (long step = 0; step < max_flips; ++step) {
    if (unsat.empty()) return true;
    const Clause& cl = cnf.clauses[unsat[rng.below(static_cast<uint64_t>(unsat.size()))]];
    int v;
    if (rng.bernoulli(noise)) {
      v = cl[rng.below(cl.size())].var();
    } else {
      v = cl[0].var();
      int best = break_count(v);
      for (size_t k = 1; k < cl.size(); ++k) {
        int b = break_count(cl[k].var());
        if (b < best) {
          best = b;
          v = cl[k].var();
        }
      }
    }
    flip(v);
  }
  return unsat.empty();
}

BpSolveResult bp_decimate_solve(const Cnf& cnf, const BpSolveConfig& cfg, Rng& rng) {
  BpSolveResult out;
  Assignment full(cnf.num_vars);
  Cnf cur = cnf;
  std::vector<int> to_orig(cnf.num_vars + 1);  // current residual var -> original
  for (int v = 0; v <= cnf.num_vars; ++v) to_orig[v] = v;

  auto absorb = [&](const PropagationResult& pr) {
    for (int v = 1; v <= cur.num_vars; ++v)
      if (pr.fixed.has(v)) full.set(to_orig[v], pr.fixed.value(v));
    std::vector<int> next(pr.residual.num_vars + 1, 0);
    for (int r = 1; r <= pr.residual.num_vars; ++r) next[r] = to_orig[pr.remap.to_orig(r)];
    to_orig = std::move(next);
    cur = pr.residual;
  };

  {
    PropagationResult pr = unit_propagate(cur);
    if (pr.status == PropStatus::Unsat) return out;
    absorb(pr);
  }

  while (!cur.clauses.empty()) {
    FactorGraph g = build_factor_graph(cur);
    BpResult bp = bp_run(g, cfg.bp, rng);
    ++out.bp_rounds;
    Assignment partial(cur.num_vars);
    for (int v = 1; v <= cur.num_vars; ++v) {
      double m = bp.marginal[v];
      if (m >= cfg.fix_threshold || m <= 1.0 - cfg.fix_threshold) partial.set(v, m >= 0.5);
    }
    if (partial.empty()) {
      // no extreme marginal left: hand the residual to local search,
      // seeded by rounding the marginals
      Assignment seed(cur.num_vars);
      for (int v = 1; v <= cur.num_vars; ++v) seed.set(v, bp.marginal[v] >= 0.5);
      out.used_local_search = true;
      if (!local_search(cur, seed, static_cast<long>(cfg.flips_per_var) * cur.num_vars,
                        cfg.noise, rng))
        return out;
      for (int v = 1; v <= cur.num_vars; ++v) full.set(to_orig[v], seed.value(v));
      cur = Cnf{};
      break;
    }
    PropagationResult pr = condition(cur, partial);
    if (pr.status == PropStatus::Unsat) return out;
    absorb(pr);
  }

  for (int v = 1; v <= cnf.num_vars; ++v)
    if (!full.has(v)) full.set(v, true);  // variables never constrained
  if (!evaluate(cnf, full).all_satisfied) return out;
  out.solved = true;
  out.assignment = std::move(full);
  return out;
}

}  // namespace satlab
