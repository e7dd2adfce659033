#include "satlab/gen.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "satlab/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace satlab {

Cnf PuzzleInstance::full_cnf() const {
  Cnf cnf = base_rules;
  for (const auto& hint : hints) cnf.clauses.push_back({hint});
  return cnf;
}

int sample_clause_size(int n, Rng& rng) {
  int k = 1 + (rng.bernoulli(0.7) ? 1 : 0) + rng.geometric(0.4);
  return std::clamp(k, 1, n);
}

SrPair gen_sr_pair(int n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("gen_sr_pair: n < 2");
  constexpr int kMaxRetries = 50;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    Cnf cnf;
    cnf.num_vars = n;
    bool budget_hit = false;
    for (;;) {
      int k = sample_clause_size(n, rng);
      std::vector<int> vars(n);
      std::iota(vars.begin(), vars.end(), 1);
      rng.shuffle(vars);
      Clause clause;
      for (int i = 0; i < k; ++i) clause.push_back(Lit(vars[i], rng.bernoulli(0.5)));
      cnf.clauses.push_back(clause);
      SolveResult sr = dpll_solve(cnf);
      if (sr.status == SolveStatus::BudgetExceeded) {
        budget_hit = true;
        break;
      }
      if (sr.status == SolveStatus::Unsat) {
        SrPair pair;
        pair.n_vars = n;
        pair.unsat = cnf;
        pair.flipped_clause_index = static_cast<int>(cnf.clauses.size()) - 1;
        pair.sat = cnf;
        Clause& last = pair.sat.clauses.back();
        int flip = static_cast<int>(rng.below(last.size()));
        last[flip] = last[flip].complement();
        // The flipped twin is satisfiable by any model of the prefix; verified anyway.
        if (dpll_solve(pair.sat).status != SolveStatus::Sat)
          throw std::logic_error("gen_sr_pair: flipped twin not satisfiable");
        return pair;
      }
    }
    if (budget_hit) continue;
  }
  throw std::runtime_error("gen_sr_pair: retries exhausted");
}

namespace {

// Exactly-one over a group: one at-least-one clause + pairwise at-most-one.
void exactly_one(Cnf& cnf, const std::vector<int>& vars) {
  Clause alo;
  for (int v : vars) alo.push_back(Lit(v, true));
  cnf.clauses.push_back(alo);
  for (size_t i = 0; i < vars.size(); ++i)
    for (size_t j = i + 1; j < vars.size(); ++j)
      cnf.clauses.push_back({Lit(vars[i], false), Lit(vars[j], false)});
}

Cnf puzzle_rules(int n, bool boxes) {
  Cnf cnf;
  cnf.num_vars = n * n * n;
  std::vector<int> group;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      group.clear();
      for (int v = 0; v < n; ++v) group.push_back(puzzle_var(n, r, c, v));
      exactly_one(cnf, group);
    }
  for (int r = 0; r < n; ++r)
    for (int v = 0; v < n; ++v) {
      group.clear();
      for (int c = 0; c < n; ++c) group.push_back(puzzle_var(n, r, c, v));
      exactly_one(cnf, group);
    }
  for (int c = 0; c < n; ++c)
    for (int v = 0; v < n; ++v) {
      group.clear();
      for (int r = 0; r < n; ++r) group.push_back(puzzle_var(n, r, c, v));
      exactly_one(cnf, group);
    }
  if (boxes) {
    int b = 3;  // 3x3 boxes, n must be 9
    for (int br = 0; br < b; ++br)
      for (int bc = 0; bc < b; ++bc)
        for (int v = 0; v < n; ++v) {
          group.clear();
          for (int r = br * b; r < (br + 1) * b; ++r)
            for (int c = bc * b; c < (bc + 1) * b; ++c)
              group.push_back(puzzle_var(n, r, c, v));
          exactly_one(cnf, group);
        }
  }
  return cnf;
}

// Random complete grid by backtracking with shuffled value order.
// `boxes` adds the Sudoku 3x3 box constraint.
bool fill_grid(int n, bool boxes, std::vector<int>& grid, int cell, Rng& rng) {
  if (cell == n * n) return true;
  int r = cell / n, c = cell % n;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  for (int v : order) {
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      if (i < c && grid[r * n + i] == v) ok = false;
      if (i < r && grid[i * n + c] == v) ok = false;
    }
    if (ok && boxes) {
      int br = (r / 3) * 3, bc = (c / 3) * 3;
      for (int rr = br; rr <= r && ok; ++rr)
        for (int cc = bc; cc < bc + 3; ++cc)
          if (rr * n + cc < cell && grid[rr * n + cc] == v) ok = false;
    }
    if (!ok) continue;
    grid[cell] = v;
    if (fill_grid(n, boxes, grid, cell + 1, rng)) return true;
  }
  grid[cell] = -1;
  return false;
}

bool unique_solution(const Cnf& rules, const std::vector<Lit>& hints) {
  Cnf cnf = rules;
  for (const auto& h : hints) cnf.clauses.push_back({h});
  return count_solutions(cnf).count == 1;
}

PuzzlePair gen_grid_puzzle(int n, bool boxes, Rng& rng) {
  Cnf rules = puzzle_rules(n, boxes);
  std::vector<int> grid(n * n, -1);
  if (!fill_grid(n, boxes, grid, 0, rng)) throw std::logic_error("grid fill failed");

  Assignment solution(rules.num_vars);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      for (int v = 0; v < n; ++v) solution.set(puzzle_var(n, r, c, v), grid[r * n + c] == v);

  // Start from the full grid and greedily remove hints while the solution
  // stays unique. Monotonicity makes the surviving set minimal.
  std::vector<int> cells(n * n);
  std::iota(cells.begin(), cells.end(), 0);
  rng.shuffle(cells);
  std::vector<int> hint_cell(n * n, 1);
  auto hints_of = [&](const std::vector<int>& keep) {
    std::vector<Lit> hints;
    for (int cell = 0; cell < n * n; ++cell)
      if (keep[cell]) hints.push_back(Lit(puzzle_var(n, cell / n, cell % n, grid[cell]), true));
    return hints;
  };
  for (int cell : cells) {
    hint_cell[cell] = 0;
    if (!unique_solution(rules, hints_of(hint_cell))) hint_cell[cell] = 1;
  }

  PuzzlePair pair;
  pair.sat.base_rules = rules;
  pair.sat.hints = hints_of(hint_cell);
  pair.sat.label = Label::Sat;
  pair.sat.solution = solution;

  // Unsat twin: one extra hint at a free cell, contradicting the solution.
  std::vector<int> free_cells;
  for (int cell = 0; cell < n * n; ++cell)
    if (!hint_cell[cell]) free_cells.push_back(cell);
  if (free_cells.empty()) throw std::logic_error("no free cell for unsat hint");
  int cell = rng.pick(free_cells);
  int wrong = (grid[cell] + 1 + static_cast<int>(rng.below(n - 1))) % n;
  pair.unsat = pair.sat;
  pair.unsat.hints.push_back(Lit(puzzle_var(n, cell / n, cell % n, wrong), true));
  pair.unsat.label = Label::Unsat;
  pair.unsat.solution = Assignment();
  return pair;
}

// ---- Tseitin circuit encoding -------------------------------------------

struct Wire {
  enum Kind { ConstFalse, ConstTrue, Var } kind = ConstFalse;
  int var = 0;  // valid when kind == Var
  bool neg = false;

  static Wire constant(bool b) { return {b ? ConstTrue : ConstFalse, 0, false}; }
  bool is_const() const { return kind != Var; }
  bool const_val() const { return kind == ConstTrue; }
  Lit lit() const { return Lit(var, !neg); }
  Wire inverted() const {
    if (is_const()) return constant(!const_val());
    return {Var, var, !neg};
  }
};

class CircuitBuilder {
 public:
  explicit CircuitBuilder(int reserved_vars) { cnf_.num_vars = reserved_vars; }

  Wire fresh() { return {Wire::Var, ++cnf_.num_vars, false}; }
  Wire input(int var) { return {Wire::Var, var, false}; }

  Wire xor2(Wire a, Wire b) {
    if (a.is_const()) return a.const_val() ? b.inverted() : b;
    if (b.is_const()) return b.const_val() ? a.inverted() : a;
    Wire o = fresh();
    // o <-> a xor b
    add({a.lit().complement(), b.lit().complement(), o.lit().complement()});
    add({a.lit(), b.lit(), o.lit().complement()});
    add({a.lit().complement(), b.lit(), o.lit()});
    add({a.lit(), b.lit().complement(), o.lit()});
    return o;
  }

  Wire and2(Wire a, Wire b) {
    if (a.is_const()) return a.const_val() ? b : Wire::constant(false);
    if (b.is_const()) return b.const_val() ? a : Wire::constant(false);
    Wire o = fresh();
    add({a.lit(), o.lit().complement()});
    add({b.lit(), o.lit().complement()});
    add({a.lit().complement(), b.lit().complement(), o.lit()});
    return o;
  }

  Wire or2(Wire a, Wire b) { return and2(a.inverted(), b.inverted()).inverted(); }

  Wire majority(Wire a, Wire b, Wire c) {
    return or2(or2(and2(a, b), and2(a, c)), and2(b, c));
  }

  // a + b mod 2^n, ripple carry.
  std::vector<Wire> add_mod(const std::vector<Wire>& a, const std::vector<Wire>& b) {
    size_t n = a.size();
    std::vector<Wire> sum(n);
    Wire carry = Wire::constant(false);
    for (size_t i = 0; i < n; ++i) {
      sum[i] = xor2(xor2(a[i], b[i]), carry);
      if (i + 1 < n) carry = majority(a[i], b[i], carry);
    }
    return sum;
  }

  // c * r mod 2^n for a constant c (shift-and-add).
  std::vector<Wire> mul_const(uint64_t c, const std::vector<Wire>& r) {
    size_t n = r.size();
    std::vector<Wire> acc(n, Wire::constant(false));
    for (size_t i = 0; i < n; ++i) {
      if (!((c >> i) & 1)) continue;
      std::vector<Wire> shifted(n, Wire::constant(false));
      for (size_t j = i; j < n; ++j) shifted[j] = r[j - i];
      acc = add_mod(acc, shifted);
    }
    return acc;
  }

  void add(Clause clause) { cnf_.clauses.push_back(std::move(clause)); }
  Cnf take_cnf() { return std::move(cnf_); }

 private:
  Cnf cnf_;
};

}  // namespace

PuzzlePair gen_latin_square(int n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("gen_latin_square: n < 2");
  return gen_grid_puzzle(n, false, rng);
}

PuzzlePair gen_sudoku(Rng& rng) { return gen_grid_puzzle(9, true, rng); }

PuzzlePair gen_circuit(int bits, Rng& rng) {
  if (bits < 2 || bits > 16) throw std::invalid_argument("gen_circuit: bits out of [2,16]");
  const uint64_t mod = 1ULL << bits;

  for (int attempt = 0; attempt < 100; ++attempt) {
    // At least one odd constant keeps c1*r1 + c2*r2 mod 2^bits surjective
    // and avoids constant collapse of the low output bits.
    uint64_t c1, c2;
    do {
      c1 = rng.below(mod);
      c2 = rng.below(mod);
    } while (c1 == 0 || c2 == 0 || (!(c1 & 1) && !(c2 & 1)));

    uint64_t r1 = rng.below(mod), r2 = rng.below(mod);
    uint64_t c3 = (c1 * r1 + c2 * r2) % mod;

    CircuitBuilder cb(2 * bits);  // vars 1..bits = r1 (LSB first), bits+1..2bits = r2
    std::vector<Wire> w1(bits), w2(bits);
    for (int i = 0; i < bits; ++i) {
      w1[i] = cb.input(i + 1);
      w2[i] = cb.input(bits + i + 1);
    }
    auto sum = cb.add_mod(cb.mul_const(c1, w1), cb.mul_const(c2, w2));
    for (int i = 0; i < bits; ++i) {
      bool want = (c3 >> i) & 1;
      Wire s = sum[i];
      if (s.is_const()) {
        if (s.const_val() != want) throw std::logic_error("gen_circuit: reachable c3 mismatch");
      } else {
        cb.add({want ? s.lit() : s.lit().complement()});
      }
    }
    Cnf base = cb.take_cnf();

    // Input-bit hints pin the circuit to (r1, r2); drop hints greedily
    // while the equality keeps a unique solution.
    auto input_bit = [&](int v) -> bool {
      return v <= bits ? ((r1 >> (v - 1)) & 1) : ((r2 >> (v - bits - 1)) & 1);
    };
    std::vector<bool> keep(2 * bits, true);
    auto unique_given = [&]() {
      Cnf c = base;
      for (int v = 1; v <= 2 * bits; ++v)
        if (keep[v - 1]) c.clauses.push_back({Lit(v, input_bit(v))});
      return count_solutions(c).count == 1;
    };
    std::vector<int> order(2 * bits);
    std::iota(order.begin(), order.end(), 1);
    rng.shuffle(order);
    for (int v : order) {
      keep[v - 1] = false;
      if (!unique_given()) keep[v - 1] = true;
    }

    std::vector<int> free_bits;
    for (int v = 1; v <= 2 * bits; ++v)
      if (!keep[v - 1]) free_bits.push_back(v);
    if (free_bits.empty()) continue;  // needs every hint; twin impossible

    PuzzlePair pair;
    pair.sat.base_rules = base;
    for (int v = 1; v <= 2 * bits; ++v)
      if (keep[v - 1]) pair.sat.hints.push_back(Lit(v, input_bit(v)));
    pair.sat.label = Label::Sat;

    // Unsat twin: one extra hint at a free input bit, contradicting the
    // unique solution.
    int wrong = rng.pick(free_bits);
    pair.unsat = pair.sat;
    pair.unsat.hints.push_back(Lit(wrong, !input_bit(wrong)));
    pair.unsat.label = Label::Unsat;

    SolveResult sat_check = dpll_solve(pair.sat.full_cnf());
    if (sat_check.status != SolveStatus::Sat) throw std::logic_error("gen_circuit: sat member not Sat");
    pair.sat.solution = sat_check.model;
    if (dpll_solve(pair.unsat.full_cnf()).status != SolveStatus::Unsat)
      throw std::logic_error("gen_circuit: unsat member not Unsat");
    return pair;
  }
  throw std::runtime_error("gen_circuit: no usable pair after 100 attempts");
}

PreprocessResult preprocess(const Cnf& instance) {
  PropagationResult pr = unit_propagate(instance);
  PreprocessResult out;
  out.fixed = pr.fixed;
  out.remap = pr.remap;
  out.residual = pr.residual;
  out.trivial = pr.status != PropStatus::Reduced;
  return out;
}

// ---- dataset I/O ---------------------------------------------------------

static const char* label_str(Label l) { return l == Label::Sat ? "sat" : "unsat"; }

void write_dataset(const Dataset& ds, const std::vector<Cnf>& cnfs, const std::string& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["seed"] = ds.seed;
  manifest["family"] = ds.family;
  json entries = json::array();
  for (size_t i = 0; i < ds.entries.size(); ++i) {
    const auto& e = ds.entries[i];
    write_dimacs_file(cnfs[i], (fs::path(dir) / e.file).string());
    entries.push_back({{"file", e.file},
                       {"family", e.family},
                       {"n", e.n},
                       {"label", label_str(e.label)},
                       {"pair_id", e.pair_id},
                       {"n_vars_post", e.n_vars_post}});
  }
  manifest["entries"] = entries;
  std::ofstream out(fs::path(dir) / "manifest.json");
  out << manifest.dump(2) << "\n";
}

Dataset read_dataset_manifest(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw std::runtime_error("missing manifest.json in " + dir);
  json manifest = json::parse(in);
  Dataset ds;
  ds.seed = manifest["seed"].get<uint64_t>();
  ds.family = manifest["family"].get<std::string>();
  for (const auto& e : manifest["entries"]) {
    DatasetEntry d;
    d.file = e["file"].get<std::string>();
    d.family = e["family"].get<std::string>();
    d.n = e["n"].get<int>();
    d.label = e["label"].get<std::string>() == "sat" ? Label::Sat : Label::Unsat;
    d.pair_id = e["pair_id"].get<int>();
    d.n_vars_post = e["n_vars_post"].get<int>();
    ds.entries.push_back(d);
  }
  return ds;
}

Cnf load_dataset_cnf(const std::string& dir, const DatasetEntry& e) {
  return parse_dimacs_file((fs::path(dir) / e.file).string());
}

Dataset generate_dataset(const std::string& family, const GenConfig& cfg, const std::string& dir) {
  Dataset ds;
  ds.seed = cfg.seed;
  ds.family = family;
  std::vector<Cnf> cnfs;

  auto push = [&](const Cnf& cnf, const DatasetEntry& e) {
    ds.entries.push_back(e);
    cnfs.push_back(cnf);
  };

  for (int i = 0; i < cfg.count; ++i) {
    Rng rng = Rng::child(cfg.seed, static_cast<uint64_t>(i));
    if (family == "sr") {
      int n = cfg.n_min + static_cast<int>(rng.below(cfg.n_max - cfg.n_min + 1));
      SrPair pair = gen_sr_pair(n, rng);
      char buf[64];
      std::snprintf(buf, sizeof buf, "sr_%05d_sat.cnf", i);
      push(pair.sat, {buf, family, n, Label::Sat, i, n});
      std::snprintf(buf, sizeof buf, "sr_%05d_unsat.cnf", i);
      push(pair.unsat, {buf, family, n, Label::Unsat, i, n});
    } else if (family == "latin" || family == "sudoku" || family == "circuit") {
      // Structured instances are stored after unit-propagation reduction;
      // propagation-trivial instances are regenerated.
      PuzzlePair pair;
      PreprocessResult sat_pre, unsat_pre;
      int n = 0;
      for (int retry = 0;; ++retry) {
        if (retry > 100) throw std::runtime_error("generate_dataset: too many trivial instances");
        if (family == "latin") {
          n = cfg.n_min;
          pair = gen_latin_square(n, rng);
        } else if (family == "sudoku") {
          n = 9;
          pair = gen_sudoku(rng);
        } else {
          n = cfg.n_min + static_cast<int>(rng.below(cfg.n_max - cfg.n_min + 1));
          pair = gen_circuit(n, rng);
        }
        sat_pre = preprocess(pair.sat.full_cnf());
        unsat_pre = preprocess(pair.unsat.full_cnf());
        // The unsat twin (hints + one contradicting hint) is routinely refuted
        // by propagation alone; only the sat member must survive reduction.
        if (!sat_pre.trivial) break;
      }
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s_%05d_sat.cnf", family.c_str(), i);
      push(sat_pre.residual, {buf, family, n, Label::Sat, i, sat_pre.residual.num_vars});
      Cnf unsat_out = unsat_pre.residual;
      if (unsat_pre.trivial) {
        // canonical contradiction; an empty residual would read as "true"
        unsat_out = Cnf{};
        unsat_out.num_vars = 1;
        unsat_out.clauses = {{Lit(1, true)}, {Lit(1, false)}};
      }
      std::snprintf(buf, sizeof buf, "%s_%05d_unsat.cnf", family.c_str(), i);
      push(unsat_out, {buf, family, n, Label::Unsat, i, unsat_out.num_vars});
    } else {
      throw std::invalid_argument("unknown family " + family);
    }
  }
  write_dataset(ds, cnfs, dir);
  return ds;
}

}  // namespace satlab
