#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "satlab/gen.hpp"
#include "satlab/solver.hpp"
#include "test_helpers.hpp"

using namespace satlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int decoded_value(int n, const Assignment& a, int r, int c) {
  int found = -1;
  for (int v = 0; v < n; ++v)
    if (a.value(puzzle_var(n, r, c, v))) {
      REQUIRE(found == -1);
      found = v;
    }
  REQUIRE(found != -1);
  return found;
}

}  // namespace

TEST_CASE("clause size distribution has the right mean and floor") {
  Rng rng(7);
  double sum = 0;
  int lo = 100, hi = 0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    int k = sample_clause_size(40, rng);
    sum += k;
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }
  // 1 + Bernoulli(0.7) + Geometric(0.4): mean 3.2 before truncation.
  CHECK(sum / trials == doctest::Approx(3.2).epsilon(0.05));
  CHECK(lo >= 1);
  CHECK(hi <= 40);
  for (int i = 0; i < 200; ++i) {
    int k = sample_clause_size(2, rng);
    CHECK(k >= 1);
    CHECK(k <= 2);
  }
}

TEST_CASE("sr pairs differ by one complemented literal and carry correct labels") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 5 + static_cast<int>(rng.below(8));
    SrPair pair = gen_sr_pair(n, rng);
    REQUIRE(pair.sat.num_vars == n);
    REQUIRE(pair.sat.clauses.size() == pair.unsat.clauses.size());
    int diff_clauses = 0;
    for (size_t c = 0; c < pair.sat.clauses.size(); ++c) {
      if (pair.sat.clauses[c] == pair.unsat.clauses[c]) continue;
      ++diff_clauses;
      CHECK(static_cast<int>(c) == pair.flipped_clause_index);
      const Clause& a = pair.sat.clauses[c];
      const Clause& b = pair.unsat.clauses[c];
      REQUIRE(a.size() == b.size());
      int diff_lits = 0;
      for (size_t i = 0; i < a.size(); ++i)
        if (!(a[i] == b[i])) {
          ++diff_lits;
          CHECK(a[i] == b[i].complement());
        }
      CHECK(diff_lits == 1);
    }
    CHECK(diff_clauses == 1);
    CHECK(dpll_solve(pair.sat).status == SolveStatus::Sat);
    CHECK(dpll_solve(pair.unsat).status == SolveStatus::Unsat);
  }
}

TEST_CASE("order-2 latin square rules admit exactly two completions") {
  Rng rng(3);
  PuzzlePair pair = gen_latin_square(2, rng);
  CHECK(count_solutions(pair.sat.base_rules).count == 2);
}

TEST_CASE("latin square pairs: unique solution, 1-minimal hints, contradicting twin") {
  Rng rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    PuzzlePair pair = gen_latin_square(4, rng);
    Cnf sat_cnf = pair.sat.full_cnf();
    CHECK(count_solutions(sat_cnf).count == 1);
    CHECK(evaluate(sat_cnf, pair.sat.solution).all_satisfied);

    // dropping any single hint breaks uniqueness
    for (size_t drop = 0; drop < pair.sat.hints.size(); ++drop) {
      PuzzleInstance relaxed = pair.sat;
      relaxed.hints.erase(relaxed.hints.begin() + drop);
      CHECK(count_solutions(relaxed.full_cnf()).count >= 2);
    }

    // twin = same hints plus one extra that contradicts the unique solution
    REQUIRE(pair.unsat.hints.size() == pair.sat.hints.size() + 1);
    for (size_t i = 0; i < pair.sat.hints.size(); ++i)
      CHECK(pair.unsat.hints[i] == pair.sat.hints[i]);
    Lit extra = pair.unsat.hints.back();
    CHECK(pair.sat.solution.value(extra.var()) != extra.positive());
    CHECK(dpll_solve(pair.unsat.full_cnf()).status == SolveStatus::Unsat);
  }
}

TEST_CASE("sudoku solution respects rows, columns and 3x3 boxes") {
  Rng rng(9);
  PuzzlePair pair = gen_sudoku(rng);
  const Assignment& sol = pair.sat.solution;
  int grid[9][9];
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 9; ++c) grid[r][c] = decoded_value(9, sol, r, c);
  for (int r = 0; r < 9; ++r) {
    std::set<int> row, col;
    for (int c = 0; c < 9; ++c) {
      row.insert(grid[r][c]);
      col.insert(grid[c][r]);
    }
    CHECK(row.size() == 9);
    CHECK(col.size() == 9);
  }
  for (int br = 0; br < 3; ++br)
    for (int bc = 0; bc < 3; ++bc) {
      std::set<int> box;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) box.insert(grid[3 * br + r][3 * bc + c]);
      CHECK(box.size() == 9);
    }
  CHECK(dpll_solve(pair.unsat.full_cnf()).status == SolveStatus::Unsat);
}

TEST_CASE("circuit pairs: oracle labels, unique solution, contradicting twin") {
  Rng rng(13);
  for (int trial = 0; trial < 3; ++trial) {
    PuzzlePair pair = gen_circuit(4 + trial, rng);
    Cnf sat_cnf = pair.sat.full_cnf();
    CHECK(dpll_solve(sat_cnf).status == SolveStatus::Sat);
    CHECK(evaluate(sat_cnf, pair.sat.solution).all_satisfied);
    CHECK(count_solutions(sat_cnf).count == 1);
    CHECK(dpll_solve(pair.unsat.full_cnf()).status == SolveStatus::Unsat);

    REQUIRE(pair.unsat.hints.size() == pair.sat.hints.size() + 1);
    Lit extra = pair.unsat.hints.back();
    CHECK(pair.sat.solution.value(extra.var()) != extra.positive());

    // every kept hint is load-bearing
    for (size_t drop = 0; drop < pair.sat.hints.size(); ++drop) {
      PuzzleInstance relaxed = pair.sat;
      relaxed.hints.erase(relaxed.hints.begin() + drop);
      CHECK(count_solutions(relaxed.full_cnf()).count >= 2);
    }
  }
}

TEST_CASE("circuit base rules define a function of the input bits") {
  // every (r1, r2) extends to at most one full model, and the hinted
  // solution's inputs extend to exactly one
  Rng rng(17);
  PuzzlePair pair = gen_circuit(2, rng);
  const Cnf& base = pair.sat.base_rules;
  int input_solutions = 0;
  for (int combo = 0; combo < 16; ++combo) {
    Cnf c = base;
    for (int v = 1; v <= 4; ++v) c.clauses.push_back({Lit(v, (combo >> (v - 1)) & 1)});
    auto n = count_solutions(c).count;
    CHECK(n <= 1);  // Tseitin gate outputs are determined by the inputs
    input_solutions += static_cast<int>(n);
  }
  CHECK(input_solutions == static_cast<int>(count_solutions(base).count));
  CHECK(input_solutions >= 1);
}

TEST_CASE("preprocess flags propagation-trivial instances") {
  Cnf units = testing::make_cnf(2, {{1}, {2}});
  CHECK(preprocess(units).trivial);

  Cnf contra = testing::make_cnf(1, {{1}, {-1}});
  CHECK(preprocess(contra).trivial);

  Cnf hard = testing::make_cnf(3, {{1, 2}, {-1, 3}, {-2, -3}});
  PreprocessResult pre = preprocess(hard);
  CHECK_FALSE(pre.trivial);
  CHECK(pre.residual.num_vars == 3);
}

TEST_CASE("dataset generation is deterministic and round-trips") {
  fs::path a = fs::temp_directory_path() / "satlab_ds_a";
  fs::path b = fs::temp_directory_path() / "satlab_ds_b";
  fs::remove_all(a);
  fs::remove_all(b);
  GenConfig cfg;
  cfg.seed = 123;
  cfg.n_min = 6;
  cfg.n_max = 10;
  cfg.count = 4;
  Dataset da = generate_dataset("sr", cfg, a.string());
  Dataset db = generate_dataset("sr", cfg, b.string());
  REQUIRE(da.entries.size() == 8);
  REQUIRE(db.entries.size() == 8);
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  for (const auto& e : da.entries) {
    CHECK(slurp(a / e.file) == slurp(b / e.file));
    Cnf c = load_dataset_cnf(a.string(), e);
    bool sat = dpll_solve(c).status == SolveStatus::Sat;
    CHECK(sat == (e.label == Label::Sat));
  }
  Dataset re = read_dataset_manifest(a.string());
  CHECK(re.entries.size() == da.entries.size());
  CHECK(re.family == "sr");
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("structured datasets store nontrivial preprocessed residuals") {
  fs::path dir = fs::temp_directory_path() / "satlab_ds_cir";
  fs::remove_all(dir);
  GenConfig cfg;
  cfg.seed = 21;
  cfg.n_min = 4;
  cfg.n_max = 6;
  cfg.count = 2;
  Dataset ds = generate_dataset("circuit", cfg, dir.string());
  REQUIRE(ds.entries.size() == 4);
  for (const auto& e : ds.entries) {
    Cnf c = load_dataset_cnf(dir.string(), e);
    CHECK(c.num_vars == e.n_vars_post);
    if (e.label == Label::Sat) {
      CHECK_FALSE(preprocess(c).trivial);
    } else if (preprocess(c).trivial) {
      // propagation-refuted twins are stored as the canonical contradiction
      CHECK(c.num_vars == 1);
      CHECK(c.clauses.size() == 2);
    }
    bool sat = dpll_solve(c).status == SolveStatus::Sat;
    CHECK(sat == (e.label == Label::Sat));
  }
  fs::remove_all(dir);
}
