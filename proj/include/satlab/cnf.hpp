#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace satlab {

// A literal over a 1-based variable index.
class Lit {
 public:
  Lit(int var, bool positive) : code_(positive ? var : -var) {
    if (var < 1) throw std::invalid_argument("Lit: var must be >= 1");
  }
  static Lit from_dimacs(int code) {
    if (code == 0) throw std::invalid_argument("Lit: dimacs code 0");
    Lit l;
    l.code_ = code;
    return l;
  }

  int var() const { return code_ > 0 ? code_ : -code_; }
  bool positive() const { return code_ > 0; }
  Lit complement() const { return from_dimacs(-code_); }
  int to_dimacs() const { return code_; }

  // Literal node index in the factor graph: 2(v-1) for positive v,
  // 2(v-1)+1 for negative v. Flip is then a stride-2 swap.
  int node_index() const { return 2 * (var() - 1) + (positive() ? 0 : 1); }

  bool operator==(const Lit& o) const { return code_ == o.code_; }
  bool operator!=(const Lit& o) const { return code_ != o.code_; }
  bool operator<(const Lit& o) const { return code_ < o.code_; }

 private:
  Lit() : code_(0) {}
  int code_;
};

using Clause = std::vector<Lit>;

struct Cnf {
  int num_vars = 0;
  std::vector<Clause> clauses;

  bool operator==(const Cnf& o) const;
};

// Possibly-partial mapping var -> {true, false}.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(int num_vars) : vals_(num_vars + 1, kUnset) {}

  bool has(int var) const {
    return var >= 1 && var < static_cast<int>(vals_.size()) && vals_[var] != kUnset;
  }
  bool value(int var) const {
    if (!has(var)) throw std::out_of_range("Assignment: var " + std::to_string(var) + " unassigned");
    return vals_[var] == 1;
  }
  void set(int var, bool v) {
    if (var >= static_cast<int>(vals_.size())) vals_.resize(var + 1, kUnset);
    vals_[var] = v ? 1 : 0;
  }
  void unset(int var) {
    if (var < static_cast<int>(vals_.size())) vals_[var] = kUnset;
  }
  int assigned_count() const {
    int c = 0;
    for (auto v : vals_)
      if (v != kUnset) ++c;
    return c;
  }
  bool empty() const { return assigned_count() == 0; }

 private:
  static constexpr int8_t kUnset = -1;
  std::vector<int8_t> vals_;
};

struct EvalResult {
  int satisfied_count = 0;
  bool all_satisfied = false;
};

// Bipartite literal-clause incidence. Literal nodes exist for both
// polarities of every variable, including variables absent from clauses.
struct FactorGraph {
  int num_vars = 0;
  int num_clauses = 0;
  // edge e: lit node edge_lit[e] belongs to clause edge_clause[e]
  std::vector<int> edge_lit;
  std::vector<int> edge_clause;
  std::vector<std::vector<int>> clause_lits;  // lit node indices per clause
  std::vector<std::vector<int>> lit_clauses;  // clause indices per lit node

  int num_lits() const { return 2 * num_vars; }
  int num_edges() const { return static_cast<int>(edge_lit.size()); }
};

enum class PropStatus { Solved, Reduced, Unsat };

// Bidirectional renumbering between original and residual variable ids.
struct VarMap {
  std::vector<int> orig_to_res;  // index by original var; 0 = absent
  std::vector<int> res_to_orig;  // index by residual var; [0] unused

  int to_orig(int res_var) const { return res_to_orig[res_var]; }
  int to_res(int orig_var) const { return orig_to_res[orig_var]; }
};

struct PropagationResult {
  PropStatus status = PropStatus::Reduced;
  Assignment fixed;  // forced values in original variable ids
  Cnf residual;      // over densely renumbered residual variables
  VarMap remap;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

Cnf parse_dimacs(std::istream& in);
Cnf parse_dimacs(const std::string& text);
Cnf parse_dimacs_file(const std::string& path);
void write_dimacs(const Cnf& cnf, std::ostream& out);
std::string write_dimacs(const Cnf& cnf);
void write_dimacs_file(const Cnf& cnf, const std::string& path);

EvalResult evaluate(const Cnf& cnf, const Assignment& a);

PropagationResult unit_propagate(const Cnf& cnf);
PropagationResult condition(const Cnf& cnf, const Assignment& partial);

FactorGraph build_factor_graph(const Cnf& cnf);

}  // namespace satlab
