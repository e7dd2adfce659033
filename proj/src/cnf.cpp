#include "satlab/cnf.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace satlab {

bool Cnf::operator==(const Cnf& o) const {
  if (num_vars != o.num_vars || clauses.size() != o.clauses.size()) return false;
  for (size_t i = 0; i < clauses.size(); ++i)
    if (clauses[i] != o.clauses[i]) return false;
  return true;
}

Cnf parse_dimacs(std::istream& in) {
  Cnf cnf;
  int declared_clauses = -1;
  int line_no = 0;
  bool header_seen = false;
  Clause current;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == 'c') continue;
    if (line[0] == 'p') {
      std::istringstream hs(line);
      std::string p, fmt;
      hs >> p >> fmt >> cnf.num_vars >> declared_clauses;
      if (hs.fail() || fmt != "cnf" || cnf.num_vars < 0 || declared_clauses < 0)
        throw ParseError("malformed header '" + line + "'", line_no);
      header_seen = true;
      continue;
    }
    if (!header_seen) throw ParseError("clause before 'p cnf' header", line_no);
    std::istringstream ls(line);
    int code;
    while (ls >> code) {
      if (code == 0) {
        if (current.empty()) throw ParseError("empty clause", line_no);
        cnf.clauses.push_back(current);
        current.clear();
      } else {
        if (std::abs(code) > cnf.num_vars)
          throw ParseError("literal " + std::to_string(code) + " out of range (" +
                               std::to_string(cnf.num_vars) + " vars declared)",
                           line_no);
        current.push_back(Lit::from_dimacs(code));
      }
    }
  }
  if (!header_seen) throw ParseError("missing 'p cnf' header", line_no);
  if (!current.empty()) throw ParseError("truncated clause (missing terminating 0)", line_no);
  if (static_cast<int>(cnf.clauses.size()) != declared_clauses)
    throw ParseError("clause count " + std::to_string(cnf.clauses.size()) + " != declared " +
                         std::to_string(declared_clauses),
                     line_no);
  return cnf;
}

Cnf parse_dimacs(const std::string& text) {
  std::istringstream ss(text);
  return parse_dimacs(ss);
}

Cnf parse_dimacs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_dimacs(in);
}

void write_dimacs(const Cnf& cnf, std::ostream& out) {
  out << "p cnf " << cnf.num_vars << " " << cnf.clauses.size() << "\n";
  for (const auto& clause : cnf.clauses) {
    for (const auto& lit : clause) out << lit.to_dimacs() << " ";
    out << "0\n";
  }
}

std::string write_dimacs(const Cnf& cnf) {
  std::ostringstream ss;
  write_dimacs(cnf, ss);
  return ss.str();
}

void write_dimacs_file(const Cnf& cnf, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_dimacs(cnf, out);
}

EvalResult evaluate(const Cnf& cnf, const Assignment& a) {
  EvalResult r;
  for (const auto& clause : cnf.clauses) {
    bool sat = false;
    for (const auto& lit : clause) {
      if (!a.has(lit.var()))
        throw std::runtime_error("evaluate: var " + std::to_string(lit.var()) + " unassigned");
      if (a.value(lit.var()) == lit.positive()) {
        sat = true;
        break;
      }
    }
    if (sat) ++r.satisfied_count;
  }
  r.all_satisfied = r.satisfied_count == static_cast<int>(cnf.clauses.size());
  return r;
}

namespace {

// Substitute `fixed` and run unit propagation to a fixed point.
// `fixed` is extended in place with every forced value.
PropagationResult propagate_impl(const Cnf& cnf, Assignment fixed) {
  std::vector<int> units;
  for (int v = 1; v <= cnf.num_vars; ++v)
    if (fixed.has(v)) units.push_back(v);

  // Clause state is recomputed per pass; formulas here are small enough
  // that watched literals would be overkill.
  std::vector<char> clause_done(cnf.clauses.size(), 0);
  bool unsat = false;
  bool progress = true;
  while (progress && !unsat) {
    progress = false;
    for (size_t ci = 0; ci < cnf.clauses.size() && !unsat; ++ci) {
      if (clause_done[ci]) continue;
      const Clause& clause = cnf.clauses[ci];
      int unassigned = 0;
      Lit last_free = clause[0];
      bool sat = false;
      for (const auto& lit : clause) {
        if (fixed.has(lit.var())) {
          if (fixed.value(lit.var()) == lit.positive()) {
            sat = true;
            break;
          }
        } else {
          ++unassigned;
          last_free = lit;
        }
      }
      if (sat) {
        clause_done[ci] = 1;
        continue;
      }
      if (unassigned == 0) {
        unsat = true;  // empty clause derived
      } else if (unassigned == 1) {
        fixed.set(last_free.var(), last_free.positive());
        clause_done[ci] = 1;
        progress = true;
      }
    }
  }

  PropagationResult res;
  res.fixed = std::move(fixed);
  if (unsat) {
    res.status = PropStatus::Unsat;
    return res;
  }

  // Residual clauses with falsified literals removed; dense renumbering.
  res.remap.orig_to_res.assign(cnf.num_vars + 1, 0);
  res.remap.res_to_orig.push_back(0);
  auto res_var = [&](int orig) {
    if (res.remap.orig_to_res[orig] == 0) {
      res.remap.res_to_orig.push_back(orig);
      res.remap.orig_to_res[orig] = static_cast<int>(res.remap.res_to_orig.size()) - 1;
    }
    return res.remap.orig_to_res[orig];
  };
  for (size_t ci = 0; ci < cnf.clauses.size(); ++ci) {
    if (clause_done[ci]) continue;
    const Clause& clause = cnf.clauses[ci];
    bool sat = false;
    Clause reduced;
    for (const auto& lit : clause) {
      if (res.fixed.has(lit.var())) {
        if (res.fixed.value(lit.var()) == lit.positive()) sat = true;
      } else {
        reduced.push_back(lit);
      }
    }
    if (sat) continue;
    Clause renumbered;
    renumbered.reserve(reduced.size());
    for (const auto& lit : reduced) renumbered.push_back(Lit(res_var(lit.var()), lit.positive()));
    res.residual.clauses.push_back(std::move(renumbered));
  }
  res.residual.num_vars = static_cast<int>(res.remap.res_to_orig.size()) - 1;
  res.status = res.residual.clauses.empty() ? PropStatus::Solved : PropStatus::Reduced;
  return res;
}

}  // namespace

PropagationResult unit_propagate(const Cnf& cnf) { return propagate_impl(cnf, Assignment(cnf.num_vars)); }

PropagationResult condition(const Cnf& cnf, const Assignment& partial) {
  Assignment fixed(cnf.num_vars);
  for (int v = 1; v <= cnf.num_vars; ++v)
    if (partial.has(v)) fixed.set(v, partial.value(v));
  return propagate_impl(cnf, std::move(fixed));
}

FactorGraph build_factor_graph(const Cnf& cnf) {
  FactorGraph g;
  g.num_vars = cnf.num_vars;
  g.num_clauses = static_cast<int>(cnf.clauses.size());
  g.clause_lits.resize(g.num_clauses);
  g.lit_clauses.resize(g.num_lits());
  for (int ci = 0; ci < g.num_clauses; ++ci) {
    for (const auto& lit : cnf.clauses[ci]) {
      int li = lit.node_index();
      g.edge_lit.push_back(li);
      g.edge_clause.push_back(ci);
      g.clause_lits[ci].push_back(li);
      g.lit_clauses[li].push_back(ci);
    }
  }
  return g;
}

}  // namespace satlab
