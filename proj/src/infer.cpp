#include "satlab/infer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "satlab/sdp.hpp"

namespace satlab {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<std::vector<double>> tensor_rows(const Tensor& t) {
  std::vector<std::vector<double>> rows(t.rows, std::vector<double>(t.cols));
  for (int r = 0; r < t.rows; ++r)
    for (int c = 0; c < t.cols; ++c) rows[r][c] = t(r, c);
  return rows;
}

}  // namespace

KmeansResult kmeans2(const std::vector<std::vector<double>>& points, Rng& rng, int restarts,
                     int max_iters) {
  if (points.size() < 2) throw std::invalid_argument("kmeans2: need at least 2 points");
  size_t n = points.size(), dim = points[0].size();
  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  best.degenerate = true;
  for (int r = 0; r < restarts; ++r) {
    // k-means++ style: first center uniform, second by squared-distance weight
    std::vector<std::vector<double>> centers(2);
    centers[0] = points[rng.below(n)];
    std::vector<double> w(n);
    double total = 0;
    for (size_t i = 0; i < n; ++i) total += w[i] = sq_dist(points[i], centers[0]);
    if (total <= 0) {
      centers[1] = points[rng.below(n)];
    } else {
      double pick = rng.uniform() * total, acc = 0;
      size_t j = n - 1;
      for (size_t i = 0; i < n; ++i) {
        acc += w[i];
        if (acc >= pick) {
          j = i;
          break;
        }
      }
      centers[1] = points[j];
    }

    std::vector<int> labels(n, 0);
    for (int it = 0; it < max_iters; ++it) {
      bool changed = false;
      for (size_t i = 0; i < n; ++i) {
        int l = sq_dist(points[i], centers[1]) < sq_dist(points[i], centers[0]) ? 1 : 0;
        if (l != labels[i]) {
          labels[i] = l;
          changed = true;
        }
      }
      std::vector<std::vector<double>> sum(2, std::vector<double>(dim, 0.0));
      int cnt[2] = {0, 0};
      for (size_t i = 0; i < n; ++i) {
        ++cnt[labels[i]];
        for (size_t c = 0; c < dim; ++c) sum[labels[i]][c] += points[i][c];
      }
      for (int k = 0; k < 2; ++k)
        if (cnt[k] > 0)
          for (size_t c = 0; c < dim; ++c) centers[k][c] = sum[k][c] / cnt[k];
      if (!changed && it > 0) break;
    }
    int cnt[2] = {0, 0};
    double inertia = 0;
    for (size_t i = 0; i < n; ++i) {
      ++cnt[labels[i]];
      inertia += sq_dist(points[i], centers[labels[i]]);
    }
    bool degenerate = cnt[0] == 0 || cnt[1] == 0;
    bool better = (best.degenerate && !degenerate) ||
                  (degenerate == best.degenerate && inertia < best.inertia);
    if (better) {
      best.labels = labels;
      best.centers = centers;
      best.inertia = inertia;
      best.degenerate = degenerate;
    }
  }
  return best;
}

double silhouette(const std::vector<std::vector<double>>& points, const std::vector<int>& labels) {
  size_t n = points.size();
  int cnt[2] = {0, 0};
  for (int l : labels) ++cnt[l];
  if (cnt[0] == 0 || cnt[1] == 0) return 0.0;
  double total = 0;
  for (size_t i = 0; i < n; ++i) {
    if (cnt[labels[i]] == 1) continue;  // singleton convention: s = 0
    double same = 0, other = 0;
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = std::sqrt(sq_dist(points[i], points[j]));
      (labels[j] == labels[i] ? same : other) += d;
    }
    double a = same / (cnt[labels[i]] - 1);
    double b = other / cnt[1 - labels[i]];
    double m = std::max(a, b);
    if (m > 0) total += (b - a) / m;
  }
  return total / n;
}

ExtractResult extract_by_clustering(const Tensor& L, const Cnf& cnf, Rng& rng) {
  ExtractResult out;
  auto points = tensor_rows(L);
  KmeansResult km = kmeans2(points, rng);
  if (km.degenerate) {
    out.degenerate = true;
    return out;
  }
  out.silhouette = silhouette(points, km.labels);
  for (int true_cluster : {0, 1}) {
    Assignment a(cnf.num_vars);
    for (int v = 1; v <= cnf.num_vars; ++v)
      a.set(v, km.labels[2 * (v - 1)] == true_cluster);
    if (evaluate(cnf, a).all_satisfied) {
      out.solved = true;
      out.assignment = std::move(a);
      break;
    }
  }
  return out;
}

AvgVectors compute_avg_vectors(const std::vector<SolvedEmbedding>& solved) {
  if (solved.empty()) throw std::invalid_argument("compute_avg_vectors: empty input");
  int d = solved[0].L->cols;
  AvgVectors avg;
  avg.true_center.assign(d, 0.0);
  avg.false_center.assign(d, 0.0);
  for (const auto& s : solved) {
    int n = s.L->rows / 2;
    for (int v = 1; v <= n; ++v) {
      for (int pol = 0; pol < 2; ++pol) {
        int row = 2 * (v - 1) + pol;
        bool lit_true = (pol == 0) == s.assignment->value(v);
        auto& center = lit_true ? avg.true_center : avg.false_center;
        (lit_true ? avg.count_true : avg.count_false) += 1;
        for (int c = 0; c < d; ++c) center[c] += (*s.L)(row, c);
      }
    }
  }
  for (int c = 0; c < d; ++c) {
    if (avg.count_true > 0) avg.true_center[c] /= avg.count_true;
    if (avg.count_false > 0) avg.false_center[c] /= avg.count_false;
  }
  return avg;
}

std::vector<DistanceRow> distance_rows(const std::vector<SolvedEmbedding>& solved,
                                       const AvgVectors& avg) {
  std::vector<DistanceRow> rows;
  for (const auto& s : solved) {
    int n = s.L->rows / 2, d = s.L->cols;
    std::vector<double> row(d);
    for (int v = 1; v <= n; ++v) {
      for (int pol = 0; pol < 2; ++pol) {
        for (int c = 0; c < d; ++c) row[c] = (*s.L)(2 * (v - 1) + pol, c);
        DistanceRow r;
        r.literal_true = (pol == 0) == s.assignment->value(v);
        r.dist_true = std::sqrt(sq_dist(row, avg.true_center));
        r.dist_false = std::sqrt(sq_dist(row, avg.false_center));
        rows.push_back(r);
      }
    }
  }
  return rows;
}

std::vector<int> assign_by_distance(const Tensor& L, int num_vars, const AvgVectors& avg,
                                    double threshold) {
  std::vector<int> out(num_vars + 1, -1);
  int d = L.cols;
  std::vector<double> row(d);
  for (int v = 1; v <= num_vars; ++v) {
    for (int c = 0; c < d; ++c) row[c] = L(2 * (v - 1), c);
    bool near_t = std::sqrt(sq_dist(row, avg.true_center)) < threshold;
    bool near_f = std::sqrt(sq_dist(row, avg.false_center)) < threshold;
    if (near_t != near_f) out[v] = near_t ? 1 : 0;
  }
  return out;
}

PropagationResult decimate(const Cnf& cnf, const Tensor& L, const AvgVectors& avg,
                           double threshold) {
  std::vector<int> decided = assign_by_distance(L, cnf.num_vars, avg, threshold);
  Assignment partial(cnf.num_vars);
  for (int v = 1; v <= cnf.num_vars; ++v)
    if (decided[v] >= 0) partial.set(v, decided[v] == 1);
  if (partial.empty()) {
    // nothing decided: identity result so the caller can detect no-progress
    PropagationResult pr;
    pr.status = cnf.clauses.empty() ? PropStatus::Solved : PropStatus::Reduced;
    pr.fixed = Assignment(cnf.num_vars);
    pr.residual = cnf;
    pr.remap.orig_to_res.resize(cnf.num_vars + 1);
    pr.remap.res_to_orig.resize(cnf.num_vars + 1);
    for (int v = 1; v <= cnf.num_vars; ++v)
      pr.remap.orig_to_res[v] = pr.remap.res_to_orig[v] = v;
    return pr;
  }
  return condition(cnf, partial);
}

GnnSolveResult solve_with_sampling(const Cnf& cnf, const ModelParams& params,
                                const InferenceConfig& config, uint64_t seed,
                                const AvgVectors* avg) {
  GnnSolveResult out;
  if (cnf.clauses.empty()) {
    out.solved = true;
    out.assignment = Assignment(cnf.num_vars);
    for (int v = 1; v <= cnf.num_vars; ++v) out.assignment.set(v, true);
    out.sample_index = 0;
    return out;
  }

  Tensor best_L;
  double best_sil = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < config.n_samples; ++s) {
    Rng rng = Rng::child(seed, static_cast<uint64_t>(s));
    InitMode mode = s == 0 ? config.init_mode : InitMode::Sampled;
    ForwardResult fr = forward(cnf, params, config, rng, mode);
    ExtractResult ex = extract_by_clustering(fr.final_state.L, cnf, rng);
    if (ex.solved) {
      out.solved = true;
      out.assignment = std::move(ex.assignment);
      out.sample_index = s;
      return out;
    }
    if (!ex.degenerate && ex.silhouette > best_sil) {
      best_sil = ex.silhouette;
      best_L = fr.final_state.L;
    }
  }

  if (avg == nullptr || config.max_passes <= 1 || best_L.rows == 0) return out;

  PropagationResult pr = decimate(cnf, best_L, *avg, config.decimation_threshold);
  if (pr.status == PropStatus::Unsat) return out;
  if (pr.fixed.empty() && pr.status == PropStatus::Reduced) return out;  // no progress

  Assignment full(cnf.num_vars);
  for (int v = 1; v <= cnf.num_vars; ++v)
    if (pr.fixed.has(v)) full.set(v, pr.fixed.value(v));

  if (pr.status == PropStatus::Reduced) {
    InferenceConfig sub = config;
    sub.n_samples = 1;  // one initialization per decimated formula
    sub.max_passes = config.max_passes - 1;
    uint64_t sub_seed = Rng::child(seed, 0x5eedful).state();
    GnnSolveResult sr = solve_with_sampling(pr.residual, params, sub, sub_seed, avg);
    if (!sr.solved) return out;
    for (int r = 1; r <= pr.residual.num_vars; ++r)
      full.set(pr.remap.to_orig(r), sr.assignment.value(r));
    out.pass_index = sr.pass_index + 1;
    out.sample_index = sr.sample_index;
  } else {
    out.pass_index = 1;
    out.sample_index = -1;
  }
  for (int v = 1; v <= cnf.num_vars; ++v)
    if (!full.has(v)) full.set(v, true);  // unconstrained after simplification
  if (!evaluate(cnf, full).all_satisfied) return out;
  out.solved = true;
  out.assignment = std::move(full);
  return out;
}

TraceResult sdp_trace(const std::vector<Tensor>& history, const AvgVectors& avg, const Cnf& cnf,
                      Rng& rng) {
  SdpProblem p = build_max2sat_sdp(cnf);  // throws on clauses longer than 2
  TraceResult out;
  int n = cnf.num_vars;
  for (const Tensor& L : history) {
    int d = L.cols;
    std::vector<std::vector<double>> v(n + 1, std::vector<double>(d));
    v[0] = avg.true_center;
    for (int i = 1; i <= n; ++i)
      for (int c = 0; c < d; ++c) v[i][c] = L(2 * (i - 1), c);
    std::vector<double> mean(d, 0.0);
    for (const auto& row : v)
      for (int c = 0; c < d; ++c) mean[c] += row[c] / (n + 1);
    for (auto& row : v) {
      double nrm = 0;
      for (int c = 0; c < d; ++c) {
        row[c] -= mean[c];
        nrm += row[c] * row[c];
      }
      nrm = std::sqrt(nrm);
      if (nrm > 1e-12)
        for (int c = 0; c < d; ++c) row[c] /= nrm;
    }
    out.values.push_back(p.objective(v));
  }
  int rank = std::max(2, static_cast<int>(std::ceil(std::sqrt(2.0 * (n + 1)))));
  out.reference = solve_low_rank(p, rank, 500, 1e-10, rng).objective;
  return out;
}

}  // namespace satlab
