#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "satlab/cnf.hpp"
#include "satlab/infer.hpp"
#include "satlab/model.hpp"

namespace satlab {

struct CurriculumSchedule {
  std::vector<int> sizes;         // 5, 7, ..., 39, 40
  std::vector<double> thresholds; // per-size validation accuracy to advance
  int window = 4;                 // previous increments kept in the train mix
  int max_epochs_per_size = 200;
  double lr = 2e-3;

  // training message-passing rounds at problem size s
  static int mp_iters(int size) { return 16 + size / 2; }

  static CurriculumSchedule standard();
};

struct LabeledCnf {
  Cnf cnf;
  int label = 0;  // 1 = satisfiable
  int n = 0;
  int pair_id = 0;
};

struct SizeSplit {
  int n = 0;
  std::vector<LabeledCnf> train;
  std::vector<LabeledCnf> val;
};

struct TrainSet {
  std::vector<SizeSplit> sizes;  // ascending n, matching a schedule

  const SizeSplit* find(int n) const;
};

// Generate SR pairs per schedule size; val pairs are held out (disjoint ids).
TrainSet build_sr_train_set(const CurriculumSchedule& schedule, int train_pairs_per_size,
                            int val_pairs_per_size, uint64_t seed);

struct EpochLog {
  int epoch = 0;  // global epoch counter
  int size = 0;
  int T = 0;
  double loss = 0.0;
  double val_acc = 0.0;
  double wallclock_s = 0.0;
};

struct TrainRunLog {
  std::vector<EpochLog> epochs;
  bool diverged = false;
  bool reached_target = false;
  double final_val_acc = 0.0;  // terminal-size validation accuracy
};

void write_log_csv(const TrainRunLog& log, const std::string& path);

enum class LossMode { Classification, Sdp };

struct TrainConfig {
  uint64_t seed = 0;
  int batch_size = 32;
  LossMode loss = LossMode::Classification;
  double grad_clip = 0.65;
  double lr = 2e-3;
  double max_seconds = 0;  // 0 = unlimited; soft wall-clock stop
  bool random_init = false;  // sample initial embeddings per batch instead of the tied init
  bool verbose = false;
};

struct TrainOutcome {
  Checkpoint checkpoint;
  TrainRunLog log;
};

TrainOutcome train_curriculum(const TrainSet& data, const CurriculumSchedule& schedule,
                              const TrainConfig& cfg);

// Single-phase baseline: all sizes mixed, fixed T, fixed accuracy target on
// the largest size's validation split.
TrainOutcome train_flat(const TrainSet& data, int epochs, int T, double target_acc,
                        const TrainConfig& cfg);

struct EvalStats {
  int tp = 0, tn = 0, fp = 0, fn = 0;
  double accuracy = 0.0;
  int solve_attempted = 0;
  int solve_succeeded = 0;
  double solve_rate = 0.0;
};

// Vote-head classification over a labeled split (batched by size); when
// solve_cfg is non-null, also attempts assignment extraction on the
// sat-labeled members.
EvalStats evaluate_split(const ModelParams& params, const std::vector<LabeledCnf>& split, int T,
                         const InferenceConfig* solve_cfg = nullptr,
                         const AvgVectors* avg = nullptr, uint64_t seed = 0);

// Post-training artifacts stored in the checkpoint: average true/false
// embedding vectors from solved training instances and the silhouette
// threshold maximizing sat/unsat classification accuracy on the train split.
void fit_extraction_artifacts(Checkpoint& ck, const std::vector<LabeledCnf>& split,
                              const InferenceConfig& icfg, uint64_t seed);

}  // namespace satlab
