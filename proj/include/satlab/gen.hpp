#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "satlab/cnf.hpp"
#include "satlab/rng.hpp"

namespace satlab {

// A sat/unsat twin differing by one complemented literal in one clause.
struct SrPair {
  Cnf sat;
  Cnf unsat;
  int n_vars = 0;
  int flipped_clause_index = 0;
};

enum class Label { Sat, Unsat };

struct PuzzleInstance {
  Cnf base_rules;
  std::vector<Lit> hints;  // unit clauses
  Label label = Label::Sat;
  Assignment solution;  // sat instances only

  // rules plus hint unit clauses
  Cnf full_cnf() const;
};

struct PuzzlePair {
  PuzzleInstance sat;
  PuzzleInstance unsat;
};

struct GenConfig {
  uint64_t seed = 0;
  int n_min = 5;
  int n_max = 40;
  int count = 1;
};

// Clause size distribution for SR(n): 1 + Bernoulli(0.7) + (1 + Geometric(0.4)),
// truncated to [1, n].
int sample_clause_size(int n, Rng& rng);

SrPair gen_sr_pair(int n, Rng& rng);

// Latin square of order n over one-hot cell variables; minimal unique-solution
// hint set; unsat twin adds one hint contradicting the unique solution.
PuzzlePair gen_latin_square(int n, Rng& rng);

// Latin square order 9 plus 3x3 box constraints.
PuzzlePair gen_sudoku(Rng& rng);

// CNF pair for c1*r1 + c2*r2 = c3 mod 2^bits over unknown bit vectors r1, r2
// (Tseitin-encoded shift-and-add multiply + ripple-carry add). Input-bit
// hints pin a unique solution; the unsat twin adds one contradicting hint.
PuzzlePair gen_circuit(int bits, Rng& rng);

struct PreprocessResult {
  Cnf residual;
  VarMap remap;
  Assignment fixed;
  bool trivial = false;  // solved or refuted by propagation alone
};

PreprocessResult preprocess(const Cnf& instance);

// Variable index of the one-hot puzzle encoding: cell (r, c) holds value v.
// boxes = true adds nothing here; layout is shared by Latin and Sudoku.
inline int puzzle_var(int n, int r, int c, int v) { return r * n * n + c * n + v + 1; }

// Dataset directory: one DIMACS file per instance + manifest.json.
struct DatasetEntry {
  std::string file;
  std::string family;
  int n = 0;
  Label label = Label::Sat;
  int pair_id = 0;
  int n_vars_post = 0;  // after preprocessing (structured families)
};

struct Dataset {
  uint64_t seed = 0;
  std::string family;
  std::vector<DatasetEntry> entries;
};

void write_dataset(const Dataset& ds, const std::vector<Cnf>& cnfs, const std::string& dir);
Dataset read_dataset_manifest(const std::string& dir);
Cnf load_dataset_cnf(const std::string& dir, const DatasetEntry& e);

// Generate a dataset of the named family into `dir`.
// family in {sr, latin, sudoku, circuit}; n is SR variable count range top /
// latin order / circuit bitwidth (ignored for sudoku).
Dataset generate_dataset(const std::string& family, const GenConfig& cfg, const std::string& dir);

}  // namespace satlab
