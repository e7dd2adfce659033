#include <cmath>

#include "doctest.h"
#include "satlab/infer.hpp"
#include "satlab/solver.hpp"
#include "test_helpers.hpp"

using namespace satlab;

namespace {

std::vector<std::vector<double>> two_blobs(int per_side, double sep, double jitter, Rng& rng) {
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 2 * per_side; ++i) {
    double cx = i < per_side ? -sep : sep;
    pts.push_back({cx + rng.normal() * jitter, rng.normal() * jitter});
  }
  return pts;
}

}  // namespace

TEST_CASE("2-means separates distant blobs; silhouette approaches one") {
  Rng rng(3);
  auto pts = two_blobs(20, 10.0, 0.05, rng);
  KmeansResult km = kmeans2(pts, rng);
  REQUIRE_FALSE(km.degenerate);
  for (int i = 1; i < 20; ++i) CHECK(km.labels[i] == km.labels[0]);
  for (int i = 21; i < 40; ++i) CHECK(km.labels[i] == km.labels[20]);
  CHECK(km.labels[0] != km.labels[20]);
  CHECK(std::abs(km.centers[0][0]) == doctest::Approx(10.0).epsilon(0.01));
  CHECK(silhouette(pts, km.labels) > 0.98);
}

TEST_CASE("identical points leave one cluster empty and score zero") {
  Rng rng(5);
  std::vector<std::vector<double>> pts(8, {1.0, 2.0});
  KmeansResult km = kmeans2(pts, rng);
  CHECK(km.degenerate);

  // a half-and-half labelling of identical points has silhouette 0
  std::vector<int> labels(8, 0);
  for (int i = 4; i < 8; ++i) labels[i] = 1;
  CHECK(silhouette(pts, labels) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("clustering extraction recovers a model when rows are separated") {
  // planted: x1=T, x2=F, x3=T; positive-literal rows near +c or -c accordingly
  Cnf cnf = testing::make_cnf(3, {{1, 2}, {-2, 3}, {1, -2, 3}});
  Rng rng(7);
  Tensor L(6, 4);
  std::vector<double> c = {1.0, -0.5, 0.25, 2.0};
  std::vector<int> sign = {+1, -1, +1};  // truth per variable
  for (int v = 0; v < 3; ++v)
    for (int k = 0; k < 4; ++k) {
      L(2 * v, k) = sign[v] * c[k] + 0.01 * rng.normal();
      L(2 * v + 1, k) = -sign[v] * c[k] + 0.01 * rng.normal();
    }
  ExtractResult r = extract_by_clustering(L, cnf, rng);
  REQUIRE(r.solved);
  CHECK(evaluate(cnf, r.assignment).all_satisfied);
  CHECK(r.silhouette > 0.9);
}

TEST_CASE("average vectors summarize literal embeddings by truth value") {
  Cnf cnf = testing::make_cnf(2, {{1}, {-2}});
  Assignment a(2);
  a.set(1, true);
  a.set(2, false);
  Tensor L(4, 2);
  // rows: x1 (true), -x1 (false), x2 (false), -x2 (true)
  L(0, 0) = 1;  L(0, 1) = 2;   // true
  L(1, 0) = 3;  L(1, 1) = 4;   // false
  L(2, 0) = 5;  L(2, 1) = 6;   // false
  L(3, 0) = 7;  L(3, 1) = 8;   // true
  AvgVectors avg = compute_avg_vectors({{&L, &a}});
  CHECK(avg.count_true == 2);
  CHECK(avg.count_false == 2);
  CHECK(avg.true_center[0] == doctest::Approx(4.0));
  CHECK(avg.true_center[1] == doctest::Approx(5.0));
  CHECK(avg.false_center[0] == doctest::Approx(4.0));
  CHECK(avg.false_center[1] == doctest::Approx(5.0));

  auto rows = distance_rows({{&L, &a}}, avg);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].literal_true);
  CHECK_FALSE(rows[1].literal_true);
  CHECK_FALSE(rows[2].literal_true);
  CHECK(rows[3].literal_true);
}

TEST_CASE("distance decisions: near one center decides, ambiguity abstains") {
  AvgVectors avg;
  avg.true_center = {1.0, 0.0};
  avg.false_center = {-1.0, 0.0};
  Tensor L(6, 2);
  L(0, 0) = 1.0;   // x1 at the true center -> 1
  L(2, 0) = -1.0;  // x2 at the false center -> 0
  L(4, 0) = 0.0;   // x3 equidistant -> undecided
  std::vector<int> got = assign_by_distance(L, 3, avg, 0.5);
  CHECK(got == std::vector<int>{-1, 1, 0, -1});

  // threshold after both distances: large threshold covers both -> undecided
  std::vector<int> loose = assign_by_distance(L, 3, avg, 100.0);
  CHECK(loose == std::vector<int>{-1, -1, -1, -1});
  // zero threshold covers neither -> undecided
  std::vector<int> tight = assign_by_distance(L, 3, avg, 0.0);
  CHECK(tight == std::vector<int>{-1, -1, -1, -1});
}

TEST_CASE("decimation at unreachable threshold is the identity") {
  Cnf cnf = testing::make_cnf(3, {{1, 2}, {-1, 3}});
  AvgVectors avg;
  avg.true_center = {1.0};
  avg.false_center = {-1.0};
  Tensor L = Tensor::zeros(6, 1);
  PropagationResult pr = decimate(cnf, L, avg, 1e-12);
  CHECK(pr.fixed.assigned_count() == 0);
  REQUIRE(pr.residual.clauses.size() == cnf.clauses.size());
  CHECK(pr.residual.num_vars == 3);

  // decisive rows fix variables and shrink the residual
  L(0, 0) = 1.0;  // x1 -> true satisfies clause 1 and removes -x1 from clause 2
  PropagationResult fixed = decimate(cnf, L, avg, 0.5);
  CHECK(fixed.fixed.value(1));
  CHECK(fixed.residual.clauses.size() < cnf.clauses.size());
}

TEST_CASE("adding samples never loses already-solved instances") {
  Rng rng(11);
  ModelParams params = ModelParams::init(rng);
  InferenceConfig base;
  base.T = 12;
  base.max_passes = 1;
  std::vector<Cnf> instances;
  for (int i = 0; i < 15; ++i) {
    Cnf cnf;
    for (;;) {
      cnf = testing::random_cnf(5, 9, rng, 3);
      if (dpll_solve(cnf).status == SolveStatus::Sat) break;
    }
    instances.push_back(cnf);
  }
  std::vector<char> prev(instances.size(), 0);
  for (int samples : {1, 2, 4, 8}) {
    InferenceConfig cfg = base;
    cfg.n_samples = samples;
    for (size_t i = 0; i < instances.size(); ++i) {
      GnnSolveResult r = solve_with_sampling(instances[i], params, cfg, 1234 + i, nullptr);
      if (r.solved) CHECK(evaluate(instances[i], r.assignment).all_satisfied);
      if (prev[i]) CHECK(r.solved);  // sample prefix is shared, so no regressions
      prev[i] = r.solved;
    }
  }
}

TEST_CASE("trace evaluates history snapshots against the relaxation") {
  Rng rng(13);
  ModelParams params = ModelParams::init(rng);
  Cnf cnf = testing::make_cnf(3, {{1, 2}, {-1, 3}, {2, -3}});
  InferenceConfig cfg;
  cfg.T = 6;
  ForwardResult fr = forward(cnf, params, cfg, rng, InitMode::Tied, /*record_history=*/true);
  REQUIRE(fr.history.size() >= 6);
  AvgVectors avg;
  avg.true_center = std::vector<double>(params.d, 0.1);
  avg.false_center = std::vector<double>(params.d, -0.1);
  TraceResult tr = sdp_trace(fr.history, avg, cnf, rng);
  CHECK(tr.values.size() == fr.history.size());
  // each 2-clause contributes at most 3/4 + 3 * 1/4 for unit vectors
  for (double v : tr.values) {
    CHECK(v >= -1e-9);
    CHECK(v <= 1.5 * cnf.clauses.size() + 1e-9);
  }
  // the converged relaxation upper-bounds the optimum (3: formula is sat)
  CHECK(tr.reference >= 3.0 - 1e-6);
  CHECK(tr.reference <= 1.5 * cnf.clauses.size() + 1e-9);
}
