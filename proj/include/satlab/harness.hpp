#pragma once

#include <map>
#include <string>
#include <vector>

#include "satlab/infer.hpp"
#include "satlab/model.hpp"

namespace satlab {

struct ExperimentSpec {
  std::string name;
  std::map<std::string, std::string> datasets;  // family -> dataset directory
  std::string checkpoint;                       // checkpoint directory
  std::string out_dir;
  uint64_t seed = 0;
  int jobs = 1;
  int max_instances = 0;  // 0 = all

  std::string to_json() const;
  static ExperimentSpec from_json_file(const std::string& path);
};

struct ResultRow {
  std::string family;
  std::string method;  // e.g. "gnn-16s-dec", "gnn-1s", "gnn-32s", "bp"
  int num_sat = 0;
  double avg_vars = 0.0;
  int pass1 = 0, pass2 = 0, pass3 = 0;
  int mp_iters = 0;
  int samples = 0;
  bool decimation = false;
  double solved_pct = 0.0;
};

struct ResultsTable {
  std::vector<ResultRow> rows;
  std::vector<std::string> skipped;  // families without datasets

  void write_csv(const std::string& path) const;
  void write_json(const std::string& path, const ExperimentSpec& spec) const;
};

// message-passing iteration count per family (random vs structured sets)
int family_mp_iters(const std::string& family);

// Three per-family solver configurations: 16 samples + decimation,
// 1 sample, 32 samples without decimation.
ResultsTable run_table1(const ExperimentSpec& spec);

// GNN single-sample vs single-run BP with decimation at 1000 iterations.
ResultsTable run_bp_comparison(const ExperimentSpec& spec);

struct TraceOutputs {
  int instances = 0;
  double mean_gap_before = 0.0;
  double mean_gap_after = 0.0;
};

// Per-iteration SDP objective traces of the embeddings on random 2-CNFs,
// reference solver values, relaxation gaps before/after coordinate
// re-optimization from the embeddings, and one |dY| matrix dump.
TraceOutputs run_traces(const ExperimentSpec& spec, int num_instances = 200, int num_vars = 12,
                        int trace_T = 30);

}  // namespace satlab
