#pragma once

#include <vector>

#include "satlab/cnf.hpp"
#include "satlab/model.hpp"
#include "satlab/rng.hpp"

namespace satlab {

struct KmeansResult {
  std::vector<int> labels;                  // 0/1 per point
  std::vector<std::vector<double>> centers;  // 2 x d
  double inertia = 0.0;
  bool degenerate = false;  // an empty cluster survived every restart
};

KmeansResult kmeans2(const std::vector<std::vector<double>>& points, Rng& rng, int restarts = 10,
                     int max_iters = 100);

// Mean over points of (b - a) / max(a, b) with a = mean intra-cluster
// distance, b = mean distance to the other cluster.
double silhouette(const std::vector<std::vector<double>>& points, const std::vector<int>& labels);

struct ExtractResult {
  bool solved = false;
  Assignment assignment;
  double silhouette = 0.0;
  bool degenerate = false;
};

// 2-means over the 2n literal rows of L; the two cluster->truth-value
// mappings are tried and the first verified one wins.
ExtractResult extract_by_clustering(const Tensor& L, const Cnf& cnf, Rng& rng);

struct AvgVectors {
  std::vector<double> true_center;   // mean embedding of literals valued true
  std::vector<double> false_center;
  long count_true = 0;
  long count_false = 0;
};

struct SolvedEmbedding {
  const Tensor* L = nullptr;         // 2n x d literal matrix
  const Assignment* assignment = nullptr;  // verified satisfying assignment
};

AvgVectors compute_avg_vectors(const std::vector<SolvedEmbedding>& solved);

// Rows for the class-separation histogram: per literal, its truth value and
// distances to the two centers.
struct DistanceRow {
  bool literal_true = false;
  double dist_true = 0.0;
  double dist_false = 0.0;
};
std::vector<DistanceRow> distance_rows(const std::vector<SolvedEmbedding>& solved,
                                       const AvgVectors& avg);

// Per-variable decision from the positive-literal row: 1 = true, 0 = false,
// -1 = undecided (within threshold of neither or both centers).
std::vector<int> assign_by_distance(const Tensor& L, int num_vars, const AvgVectors& avg,
                                    double threshold);

// Fix the distance-decided variables and condition the formula.
PropagationResult decimate(const Cnf& cnf, const Tensor& L, const AvgVectors& avg,
                           double threshold);

struct GnnSolveResult {
  bool solved = false;
  Assignment assignment;
  int pass_index = 0;    // 0 = no decimation needed
  int sample_index = -1; // winning initialization sample
};

// Multi-sample, multi-pass solver: independent init->forward->extract
// attempts; on failure, decimate using the best-silhouette sample and recurse
// with one sample per decimated formula. avg == nullptr disables decimation.
GnnSolveResult solve_with_sampling(const Cnf& cnf, const ModelParams& params,
                                const InferenceConfig& config, uint64_t seed,
                                const AvgVectors* avg);

struct TraceResult {
  std::vector<double> values;  // SDP objective of the embedding matrix per iteration
  double reference = 0.0;      // coordinate-ascent solver value on the same relaxation
};

// For each recorded L snapshot: positive-literal rows prepended by the
// average true vector, centered, row-normalized, evaluated as Tr(W Y) + const.
TraceResult sdp_trace(const std::vector<Tensor>& history, const AvgVectors& avg, const Cnf& cnf,
                      Rng& rng);

}  // namespace satlab
