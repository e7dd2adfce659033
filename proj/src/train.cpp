#include "satlab/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "satlab/gen.hpp"

namespace satlab {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Tensor make_y0(int d, uint64_t seed) {
  Rng rng = Rng::child(seed, 0x5d9);
  Tensor y0 = Tensor::randn(1, d, rng);
  double n = y0.norm();
  for (auto& x : y0.data) x /= n;
  return y0;
}

struct Batch {
  std::vector<const Cnf*> cnfs;
  std::vector<double> labels;
};

std::vector<Batch> make_batches(const std::vector<const SizeSplit*>& active, int batch_size,
                                Rng& rng) {
  std::vector<Batch> batches;
  for (const SizeSplit* split : active) {
    std::vector<int> idx(split->train.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    for (size_t start = 0; start < idx.size(); start += batch_size) {
      Batch b;
      for (size_t k = start; k < idx.size() && k < start + batch_size; ++k) {
        b.cnfs.push_back(&split->train[idx[k]].cnf);
        b.labels.push_back(split->train[idx[k]].label);
      }
      batches.push_back(std::move(b));
    }
  }
  rng.shuffle(batches);
  return batches;
}

// mirrored multilinear objective of the final literal matrix, per formula
std::vector<double> sdp_values(const ModelParams& params, const std::vector<const Cnf*>& cnfs,
                               int T, const Tensor& y0) {
  BatchGraph g = BatchGraph::from(cnfs);
  ForwardOptions fo;
  fo.T = T;
  fo.normalize_lits = true;
  GnnRun run(params, g, fo);
  run.run();
  EmbeddingState st = run.state();
  int d = params.d;
  std::vector<double> out(cnfs.size(), 0.0);
  for (int c = 0; c < g.total_clauses; ++c) {
    double prod_pos = 1.0, prod_neg = 1.0;
    int formula = -1;
    for (auto [row, sign] : g.clause_occ[c]) {
      formula = g.lit_formula[row];
      double dot = 0;
      for (int k = 0; k < d; ++k) dot += st.L(row, k) * y0(0, k);
      prod_pos *= 0.5 * (1.0 - sign * dot);
      // mirrored supervision: the complement row with flipped sign
      double dotc = 0;
      int crow = g.flip_perm[row];
      for (int k = 0; k < d; ++k) dotc += st.L(crow, k) * y0(0, k);
      prod_neg *= 0.5 * (1.0 + sign * dotc);
    }
    if (formula >= 0) out[formula] += 0.5 * (prod_pos + prod_neg);
  }
  return out;
}

double epoch_train(ModelParams& params, OptimizerState& opt,
                   const std::vector<const SizeSplit*>& active, int T, const TrainConfig& cfg,
                   const Tensor* y0, Rng& rng, bool* diverged) {
  auto batches = make_batches(active, cfg.batch_size, rng);
  double total = 0;
  long count = 0;
  for (const Batch& b : batches) {
    BatchGraph g = BatchGraph::from(b.cnfs);
    ForwardOptions fo;
    fo.T = T;
    fo.requires_grad = true;
    fo.normalize_lits = cfg.loss == LossMode::Sdp;
    fo.random_init = cfg.random_init;
    fo.init_seed = rng.next_u64();
    GnnRun run(params, g, fo);
    run.run();
    Tape::Id loss = cfg.loss == LossMode::Sdp ? run.sdp_loss(*y0)
                                              : run.classification_loss(b.labels);
    double lv = run.tape().value(loss)(0, 0);
    if (!std::isfinite(lv)) {
      *diverged = true;
      return total / std::max(1L, count);
    }
    total += lv;
    ++count;
    run.tape().backward(loss);
    std::vector<Tensor> grads;
    for (const Tensor* gt : run.param_grads()) grads.push_back(*gt);
    std::vector<Tensor*> gptrs;
    for (auto& gt : grads) gptrs.push_back(&gt);
    clip_by_global_norm(gptrs, cfg.grad_clip);
    std::vector<const Tensor*> cgrads(gptrs.begin(), gptrs.end());
    adam_step(params.tensors(), cgrads, opt);
  }
  return count ? total / count : 0.0;
}

// classification accuracy of the vote head (or of the thresholded multilinear
// value in SDP-loss mode) over a same-size validation split
double val_accuracy(const ModelParams& params, const std::vector<LabeledCnf>& val, int T,
                    LossMode mode, const Tensor* y0, bool random_init = false) {
  if (val.empty()) return 0.0;
  int correct = 0;
  const int kChunk = 64;
  if (mode == LossMode::Classification) {
    for (size_t start = 0; start < val.size(); start += kChunk) {
      std::vector<const Cnf*> cnfs;
      for (size_t k = start; k < val.size() && k < start + kChunk; ++k)
        cnfs.push_back(&val[k].cnf);
      BatchGraph g = BatchGraph::from(cnfs);
      ForwardOptions fo;
      fo.T = T;
      fo.random_init = random_init;
      fo.init_seed = 0x7a11 + start;
      GnnRun run(params, g, fo);
      run.run();
      std::vector<double> logits = run.logits();
      for (size_t k = 0; k < cnfs.size(); ++k)
        correct += (logits[k] > 0 ? 1 : 0) == val[start + k].label;
    }
    return static_cast<double>(correct) / val.size();
  }
  // SDP mode: satisfiable formulas drive v(C) toward 0; score by the best
  // split-point of the value (no trained vote head in this mode)
  std::vector<std::pair<double, int>> scored;
  for (size_t start = 0; start < val.size(); start += kChunk) {
    std::vector<const Cnf*> cnfs;
    for (size_t k = start; k < val.size() && k < start + kChunk; ++k)
      cnfs.push_back(&val[k].cnf);
    std::vector<double> v = sdp_values(params, cnfs, T, *y0);
    for (size_t k = 0; k < cnfs.size(); ++k) scored.emplace_back(v[k], val[start + k].label);
  }
  std::sort(scored.begin(), scored.end());
  int total_sat = 0;
  for (auto& [v, l] : scored) total_sat += l;
  // predict sat below the cut: best accuracy over all prefix cuts
  int sat_below = 0, best = total_sat;  // cut at -inf: all predicted unsat
  int unsat_total = static_cast<int>(scored.size()) - total_sat;
  for (size_t i = 0; i < scored.size(); ++i) {
    sat_below += scored[i].second;
    int unsat_below = static_cast<int>(i + 1) - sat_below;
    best = std::max(best, sat_below + (unsat_total - unsat_below));
  }
  return static_cast<double>(best) / scored.size();
}

}  // namespace

CurriculumSchedule CurriculumSchedule::standard() {
  CurriculumSchedule s;
  for (int n = 5; n <= 39; n += 2) s.sizes.push_back(n);
  s.sizes.push_back(40);
  int last = static_cast<int>(s.sizes.size()) - 1;
  for (int i = 0; i <= last; ++i)
    s.thresholds.push_back(0.65 + (0.85 - 0.65) * i / last);
  return s;
}

const SizeSplit* TrainSet::find(int n) const {
  for (const auto& s : sizes)
    if (s.n == n) return &s;
  return nullptr;
}

TrainSet build_sr_train_set(const CurriculumSchedule& schedule, int train_pairs_per_size,
                            int val_pairs_per_size, uint64_t seed) {
  TrainSet ts;
  for (size_t si = 0; si < schedule.sizes.size(); ++si) {
    SizeSplit split;
    split.n = schedule.sizes[si];
    uint64_t size_seed = Rng::child(seed, si).state();
    int total = train_pairs_per_size + val_pairs_per_size;
    for (int i = 0; i < total; ++i) {
      Rng rng = Rng::child(size_seed, static_cast<uint64_t>(i));
      SrPair pair = gen_sr_pair(split.n, rng);
      auto& dest = i < train_pairs_per_size ? split.train : split.val;
      dest.push_back({std::move(pair.sat), 1, split.n, i});
      dest.push_back({std::move(pair.unsat), 0, split.n, i});
    }
    ts.sizes.push_back(std::move(split));
  }
  return ts;
}

void write_log_csv(const TrainRunLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,size,T,loss,val_acc,wallclock_s\n";
  for (const auto& e : log.epochs)
    out << e.epoch << ',' << e.size << ',' << e.T << ',' << e.loss << ',' << e.val_acc << ','
        << e.wallclock_s << '\n';
}

TrainOutcome train_curriculum(const TrainSet& data, const CurriculumSchedule& schedule,
                              const TrainConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  Rng init_rng = Rng::child(cfg.seed, 1);
  Rng epoch_rng = Rng::child(cfg.seed, 2);
  TrainOutcome out;
  out.checkpoint.params = ModelParams::init(init_rng);
  out.checkpoint.opt.lr = cfg.lr;
  out.checkpoint.opt.init(out.checkpoint.params.tensors());
  out.checkpoint.batch_size = cfg.batch_size;
  Tensor y0 = make_y0(out.checkpoint.params.d, cfg.seed);

  ModelParams& params = out.checkpoint.params;
  OptimizerState& opt = out.checkpoint.opt;
  int epoch_global = 0;
  bool out_of_time = false;

  for (size_t si = 0; si < schedule.sizes.size() && !out_of_time; ++si) {
    int size = schedule.sizes[si];
    const SizeSplit* cur = data.find(size);
    if (!cur) throw std::runtime_error("train set missing size " + std::to_string(size));
    std::vector<const SizeSplit*> active;
    for (size_t k = si >= static_cast<size_t>(schedule.window) ? si - schedule.window : 0;
         k <= si; ++k) {
      if (const SizeSplit* s = data.find(schedule.sizes[k])) active.push_back(s);
    }
    int T = CurriculumSchedule::mp_iters(size);
    bool advanced = false;
    for (int e = 0; e < schedule.max_epochs_per_size; ++e) {
      bool diverged = false;
      double loss = epoch_train(params, opt, active, T, cfg, &y0, epoch_rng, &diverged);
      double acc = val_accuracy(params, cur->val, T, cfg.loss, &y0, cfg.random_init);
      out.log.epochs.push_back({epoch_global++, size, T, loss, acc, seconds_since(t0)});
      if (cfg.verbose)
        std::fprintf(stderr, "epoch %d size %d T %d loss %.4f val %.4f %.0fs\n", epoch_global,
                     size, T, loss, acc, seconds_since(t0));
      if (diverged) {
        out.log.diverged = true;
        return out;
      }
      if (acc >= schedule.thresholds[si]) {
        advanced = true;
        break;
      }
      if (cfg.max_seconds > 0 && seconds_since(t0) > cfg.max_seconds) {
        out_of_time = true;
        break;
      }
    }
    if (si + 1 == schedule.sizes.size()) out.log.reached_target = advanced;
  }

  int top = schedule.sizes.back();
  if (const SizeSplit* s = data.find(top))
    out.log.final_val_acc =
        val_accuracy(params, s->val, CurriculumSchedule::mp_iters(top), cfg.loss, &y0, cfg.random_init);
  out.checkpoint.step = opt.step;
  out.checkpoint.rng_state = epoch_rng.state();
  return out;
}

TrainOutcome train_flat(const TrainSet& data, int epochs, int T, double target_acc,
                        const TrainConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  Rng init_rng = Rng::child(cfg.seed, 1);
  Rng epoch_rng = Rng::child(cfg.seed, 2);
  TrainOutcome out;
  out.checkpoint.params = ModelParams::init(init_rng);
  out.checkpoint.opt.lr = cfg.lr;
  out.checkpoint.opt.init(out.checkpoint.params.tensors());
  out.checkpoint.batch_size = cfg.batch_size;
  Tensor y0 = make_y0(out.checkpoint.params.d, cfg.seed);

  std::vector<const SizeSplit*> active;
  int top = 0;
  for (const auto& s : data.sizes) {
    active.push_back(&s);
    top = std::max(top, s.n);
  }
  const SizeSplit* val_split = data.find(top);

  for (int e = 0; e < epochs; ++e) {
    bool diverged = false;
    double loss = epoch_train(out.checkpoint.params, out.checkpoint.opt, active, T, cfg, &y0,
                              epoch_rng, &diverged);
    double acc =
        val_split ? val_accuracy(out.checkpoint.params, val_split->val, T, cfg.loss, &y0, cfg.random_init) : 0.0;
    out.log.epochs.push_back({e, top, T, loss, acc, seconds_since(t0)});
    if (cfg.verbose)
      std::fprintf(stderr, "flat epoch %d loss %.4f val %.4f %.0fs\n", e, loss, acc,
                   seconds_since(t0));
    if (diverged) {
      out.log.diverged = true;
      return out;
    }
    out.log.final_val_acc = acc;
    if (acc >= target_acc) {
      out.log.reached_target = true;
      break;
    }
    if (cfg.max_seconds > 0 && seconds_since(t0) > cfg.max_seconds) break;
  }
  out.checkpoint.step = out.checkpoint.opt.step;
  out.checkpoint.rng_state = epoch_rng.state();
  return out;
}

EvalStats evaluate_split(const ModelParams& params, const std::vector<LabeledCnf>& split, int T,
                         const InferenceConfig* solve_cfg, const AvgVectors* avg, uint64_t seed) {
  EvalStats st;
  // group by size so each batch shares a graph layout
  std::vector<size_t> order(split.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return split[a].cnf.num_vars < split[b].cnf.num_vars; });
  const int kChunk = 64;
  for (size_t start = 0; start < order.size();) {
    size_t end = start;
    int n = split[order[start]].cnf.num_vars;
    while (end < order.size() && split[order[end]].cnf.num_vars == n &&
           end - start < static_cast<size_t>(kChunk))
      ++end;
    std::vector<const Cnf*> cnfs;
    for (size_t k = start; k < end; ++k) cnfs.push_back(&split[order[k]].cnf);
    BatchGraph g = BatchGraph::from(cnfs);
    ForwardOptions fo;
    fo.T = T;
    GnnRun run(params, g, fo);
    run.run();
    std::vector<double> logits = run.logits();
    for (size_t k = start; k < end; ++k) {
      int pred = logits[k - start] > 0 ? 1 : 0;
      int label = split[order[k]].label;
      if (label == 1)
        (pred == 1 ? st.tp : st.fn) += 1;
      else
        (pred == 0 ? st.tn : st.fp) += 1;
    }
    start = end;
  }
  st.accuracy = split.empty() ? 0.0
                              : static_cast<double>(st.tp + st.tn) / static_cast<double>(split.size());
  if (solve_cfg) {
    for (size_t i = 0; i < split.size(); ++i) {
      if (split[i].label != 1) continue;
      ++st.solve_attempted;
      GnnSolveResult sr = solve_with_sampling(split[i].cnf, params, *solve_cfg,
                                           Rng::child(seed, i).state(), avg);
      if (sr.solved) ++st.solve_succeeded;
    }
    st.solve_rate =
        st.solve_attempted ? static_cast<double>(st.solve_succeeded) / st.solve_attempted : 0.0;
  }
  return st;
}

void fit_extraction_artifacts(Checkpoint& ck, const std::vector<LabeledCnf>& split,
                              const InferenceConfig& icfg, uint64_t seed) {
  std::deque<Tensor> mats;
  std::deque<Assignment> sols;
  std::vector<SolvedEmbedding> solved;
  std::vector<std::pair<double, int>> silhouettes;  // (score, label)
  for (size_t i = 0; i < split.size(); ++i) {
    Rng rng = Rng::child(seed, i);
    ForwardResult fr = forward(split[i].cnf, ck.params, icfg, rng, icfg.init_mode);
    ExtractResult ex = extract_by_clustering(fr.final_state.L, split[i].cnf, rng);
    if (!ex.degenerate) silhouettes.emplace_back(ex.silhouette, split[i].label);
    if (ex.solved && split[i].label == 1) {
      mats.push_back(fr.final_state.L);
      sols.push_back(ex.assignment);
      solved.push_back({&mats.back(), &sols.back()});
    }
  }
  if (!solved.empty()) {
    AvgVectors avg = compute_avg_vectors(solved);
    ck.avg_true = Tensor::row_from(avg.true_center);
    ck.avg_false = Tensor::row_from(avg.false_center);
  }
  // threshold on the silhouette score: best sat/unsat split on this data
  std::sort(silhouettes.begin(), silhouettes.end());
  int total_sat = 0;
  for (auto& [s, l] : silhouettes) total_sat += l;
  if (!silhouettes.empty()) {
    // predict sat at or above the cut
    int best = total_sat, sat_below = 0;
    double best_thr = -1.0;  // everything predicted sat
    for (size_t i = 0; i < silhouettes.size(); ++i) {
      sat_below += silhouettes[i].second;
      int unsat_below = static_cast<int>(i + 1) - sat_below;
      int acc = unsat_below + (total_sat - sat_below);
      if (acc > best) {
        best = acc;
        best_thr = i + 1 < silhouettes.size()
                       ? 0.5 * (silhouettes[i].first + silhouettes[i + 1].first)
                       : silhouettes[i].first + 1e-9;
      }
    }
    ck.silhouette_threshold = best_thr;
  }
}

}  // namespace satlab
