#pragma once

#include <optional>
#include <string>
#include <vector>

#include "satlab/cnf.hpp"
#include "satlab/optim.hpp"
#include "satlab/rng.hpp"
#include "satlab/tensor.hpp"

namespace satlab {

constexpr int kHiddenDim = 16;

// Two recurrent cells (literal and clause) plus a linear vote head.
// Gate layout in the 4d weight blocks: [input, forget, cell, output].
struct ModelParams {
  int d = kHiddenDim;
  Tensor lit_init;     // 1 x d, shared initial literal embedding
  Tensor clause_init;  // 1 x d
  Tensor lit_wx;       // 2d x 4d  (input: [Flip(L); aggregated clause msgs])
  Tensor lit_wh;       // d x 4d
  Tensor lit_b;        // 1 x 4d
  Tensor cls_wx;       // d x 4d   (input: aggregated literal msgs)
  Tensor cls_wh;       // d x 4d
  Tensor cls_b;        // 1 x 4d
  Tensor vote_w;       // d x 1
  Tensor vote_b;       // 1 x 1

  static ModelParams init(Rng& rng, int d = kHiddenDim);

  // Stable name -> tensor listing (checkpoint and optimizer order).
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  std::vector<Tensor*> tensors();
};

enum class InitMode { Tied, Sampled };

struct InferenceConfig {
  int T = 100;
  int n_samples = 16;
  InitMode init_mode = InitMode::Tied;
  double decimation_threshold = 1.9;
  int max_passes = 2;
};

// Disjoint union of factor graphs for batched message passing.
struct BatchGraph {
  int batch = 0;
  int total_lits = 0;
  int total_clauses = 0;
  std::vector<int> edge_lit;     // global literal row per edge
  std::vector<int> edge_clause;  // global clause row per edge
  std::vector<int> flip_perm;    // stride-2 polarity swap over literal rows
  std::vector<int> lit_formula;  // formula index per literal row
  std::vector<int> lit_offset;   // first literal row per formula
  std::vector<int> clause_offset;
  // occurrences for the multilinear loss: per clause, (literal row, sign)
  std::vector<std::vector<std::pair<int, int>>> clause_occ;

  static BatchGraph from(const std::vector<const Cnf*>& cnfs);
  static BatchGraph from(const Cnf& cnf);
};

// Literal/clause embeddings and recurrent cell internals at iteration t.
struct EmbeddingState {
  Tensor L;       // total_lits x d (hidden states = messages)
  Tensor C;       // total_clauses x d
  Tensor L_cell;  // LSTM cell internal state
  Tensor C_cell;
  int t = 0;
};

EmbeddingState init_embeddings(const BatchGraph& graph, const ModelParams& params, InitMode mode,
                               Rng& rng);

// One clause-update-then-literal-update round, inference only (no tape kept).
// Throws on NaN, naming the iteration index.
EmbeddingState mp_round(const EmbeddingState& state, const BatchGraph& graph,
                        const ModelParams& params, bool normalize_lits = false);

struct ForwardOptions {
  int T = 26;
  bool requires_grad = false;
  bool record_history = false;
  bool normalize_lits = false;  // row-normalize L after each update (SDP-loss mode)
  bool random_init = false;     // sample initial literal embeddings instead of the tied init
  uint64_t init_seed = 0;
};

// A full batched forward pass. In grad mode the tape spans all rounds and
// backward() yields parameter gradients; in inference mode the tape is
// truncated each round so memory stays bounded on long unrolls.
class GnnRun {
 public:
  GnnRun(const ModelParams& params, const BatchGraph& graph, const ForwardOptions& opt);

  void set_state(const EmbeddingState& s);
  void run();  // T rounds
  void round();

  EmbeddingState state() const;
  Tape::Id literal_matrix() const { return L_; }
  std::vector<double> logits();        // per-formula mean vote
  Tape::Id logits_node();              // B x 1
  Tape::Id classification_loss(const std::vector<double>& labels);  // mean BCE-with-logits
  Tape::Id sdp_loss(const Tensor& y0);                              // mean over batch of v(C)
  const std::vector<Tensor>& history() const { return history_; }

  Tape& tape() { return tape_; }
  // Gradients for ModelParams::named() order; call after tape().backward().
  std::vector<const Tensor*> param_grads();

 private:
  void leaf_params();
  Tape::Id lstm(Tape::Id x, Tape::Id h, Tape::Id c, Tape::Id wx, Tape::Id wh, Tape::Id b,
                Tape::Id* new_cell);

  const ModelParams& params_;
  const BatchGraph& graph_;
  ForwardOptions opt_;
  Tape tape_;
  std::vector<Tape::Id> param_ids_;
  Tape::Id L_ = -1, C_ = -1, Lc_ = -1, Cc_ = -1;
  Tape::Id logits_id_ = -1;
  int t_ = 0;
  std::vector<Tensor> history_;
};

struct ForwardResult {
  double logit = 0;
  std::vector<double> per_literal_votes;
  std::vector<Tensor> history;  // L snapshots per iteration (when recorded)
  EmbeddingState final_state;
};

// Single-formula convenience wrapper: T rounds then vote head.
ForwardResult forward(const Cnf& cnf, const ModelParams& params, const InferenceConfig& config,
                      Rng& rng, InitMode mode = InitMode::Tied, bool record_history = false,
                      bool normalize_lits = false);

double loss_classification_value(double logit, int label);

// ---- checkpoint I/O ------------------------------------------------------

struct Checkpoint {
  ModelParams params;
  OptimizerState opt;
  bool has_opt = false;
  int64_t step = 0;
  uint64_t rng_state = 0;
  int batch_size = 32;
  double silhouette_threshold = 0.0;
  Tensor avg_true;   // 1 x d, empty until computed
  Tensor avg_false;  // 1 x d
};

void save_checkpoint(const Checkpoint& ck, const std::string& dir);
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace satlab
