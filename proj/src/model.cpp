#include "satlab/model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace satlab {

ModelParams ModelParams::init(Rng& rng, int d) {
  ModelParams p;
  p.d = d;
  double sd = 1.0 / std::sqrt(static_cast<double>(d));
  p.lit_init = Tensor::randn(1, d, rng, sd);
  p.clause_init = Tensor::randn(1, d, rng, sd);
  p.lit_wx = Tensor::randn(2 * d, 4 * d, rng, 1.0 / std::sqrt(2.0 * d));
  p.lit_wh = Tensor::randn(d, 4 * d, rng, sd);
  p.lit_b = Tensor::zeros(1, 4 * d);
  for (int k = d; k < 2 * d; ++k) p.lit_b(0, k) = 1.0;  // forget-gate bias
  p.cls_wx = Tensor::randn(d, 4 * d, rng, sd);
  p.cls_wh = Tensor::randn(d, 4 * d, rng, sd);
  p.cls_b = Tensor::zeros(1, 4 * d);
  for (int k = d; k < 2 * d; ++k) p.cls_b(0, k) = 1.0;
  // forget-gate bias 1 helps long recurrent unrolls
  for (int c = d; c < 2 * d; ++c) {
    p.lit_b(0, c) = 1.0;
    p.cls_b(0, c) = 1.0;
  }
  p.vote_w = Tensor::randn(d, 1, rng, sd);
  p.vote_b = Tensor::zeros(1, 1);
  return p;
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() {
  return {{"lit_init", &lit_init}, {"clause_init", &clause_init}, {"lit_wx", &lit_wx},
          {"lit_wh", &lit_wh},     {"lit_b", &lit_b},             {"cls_wx", &cls_wx},
          {"cls_wh", &cls_wh},     {"cls_b", &cls_b},             {"vote_w", &vote_w},
          {"vote_b", &vote_b}};
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<ModelParams*>(this)->named()) out.emplace_back(name, t);
  return out;
}

std::vector<Tensor*> ModelParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

BatchGraph BatchGraph::from(const std::vector<const Cnf*>& cnfs) {
  BatchGraph g;
  g.batch = static_cast<int>(cnfs.size());
  for (const Cnf* cnf : cnfs) {
    int lit_base = g.total_lits;
    int clause_base = g.total_clauses;
    g.lit_offset.push_back(lit_base);
    g.clause_offset.push_back(clause_base);
    int f = static_cast<int>(g.lit_offset.size()) - 1;
    for (int v = 0; v < cnf->num_vars; ++v) {
      g.flip_perm.push_back(lit_base + 2 * v + 1);
      g.flip_perm.push_back(lit_base + 2 * v);
      g.lit_formula.push_back(f);
      g.lit_formula.push_back(f);
    }
    for (size_t ci = 0; ci < cnf->clauses.size(); ++ci) {
      const Clause& clause = cnf->clauses[ci];
      std::vector<std::pair<int, int>> occ;
      for (const auto& lit : clause) {
        g.edge_lit.push_back(lit_base + lit.node_index());
        g.edge_clause.push_back(clause_base + static_cast<int>(ci));
        occ.emplace_back(lit_base + 2 * (lit.var() - 1), lit.positive() ? 1 : -1);
      }
      g.clause_occ.push_back(std::move(occ));
    }
    g.total_lits += 2 * cnf->num_vars;
    g.total_clauses += static_cast<int>(cnf->clauses.size());
  }
  return g;
}

BatchGraph BatchGraph::from(const Cnf& cnf) { return from(std::vector<const Cnf*>{&cnf}); }

EmbeddingState init_embeddings(const BatchGraph& graph, const ModelParams& params, InitMode mode,
                               Rng& rng) {
  EmbeddingState s;
  int d = params.d;
  s.L = Tensor::zeros(graph.total_lits, d);
  s.C = Tensor::zeros(graph.total_clauses, d);
  s.L_cell = Tensor::zeros(graph.total_lits, d);
  s.C_cell = Tensor::zeros(graph.total_clauses, d);
  for (int r = 0; r < graph.total_clauses; ++r)
    for (int c = 0; c < d; ++c) s.C(r, c) = params.clause_init(0, c);
  if (mode == InitMode::Tied) {
    for (int r = 0; r < graph.total_lits; ++r)
      for (int c = 0; c < d; ++c) s.L(r, c) = params.lit_init(0, c);
  } else {
    double sd = 1.0 / std::sqrt(static_cast<double>(d));
    s.L = Tensor::randn(graph.total_lits, d, rng, sd);
  }
  s.t = 0;
  return s;
}

GnnRun::GnnRun(const ModelParams& params, const BatchGraph& graph, const ForwardOptions& opt)
    : params_(params), graph_(graph), opt_(opt) {
  leaf_params();
  if (opt_.random_init) {
    // per-literal random start (the "sampled initial embeddings" view)
    Rng rng = Rng::child(opt_.init_seed, 0x11e);
    double sd = 1.0 / std::sqrt(static_cast<double>(params_.d));
    L_ = tape_.constant(Tensor::randn(graph_.total_lits, params_.d, rng, sd));
    C_ = tape_.constant(Tensor::randn(graph_.total_clauses, params_.d, rng, sd));
  } else {
    // default init: tied, with gradient flowing into the shared init vectors
    Tape::Id ones_l = tape_.constant(Tensor::full(graph_.total_lits, 1, 1.0));
    Tape::Id ones_c = tape_.constant(Tensor::full(graph_.total_clauses, 1, 1.0));
    L_ = tape_.matmul(ones_l, param_ids_[0]);   // lit_init
    C_ = tape_.matmul(ones_c, param_ids_[1]);   // clause_init
  }
  Lc_ = tape_.constant(Tensor::zeros(graph_.total_lits, params_.d));
  Cc_ = tape_.constant(Tensor::zeros(graph_.total_clauses, params_.d));
}

void GnnRun::leaf_params() {
  param_ids_.clear();
  for (auto& [name, t] : params_.named()) param_ids_.push_back(tape_.leaf(*t, opt_.requires_grad));
}

void GnnRun::set_state(const EmbeddingState& s) {
  L_ = tape_.constant(s.L);
  C_ = tape_.constant(s.C);
  Lc_ = tape_.constant(s.L_cell);
  Cc_ = tape_.constant(s.C_cell);
  t_ = s.t;
}

Tape::Id GnnRun::lstm(Tape::Id x, Tape::Id h, Tape::Id c, Tape::Id wx, Tape::Id wh, Tape::Id b,
                      Tape::Id* new_cell) {
  int d = params_.d;
  Tape::Id gates = tape_.add_rowvec(tape_.add(tape_.matmul(x, wx), tape_.matmul(h, wh)), b);
  Tape::Id i = tape_.sigmoid(tape_.slice_cols(gates, 0, d));
  Tape::Id f = tape_.sigmoid(tape_.slice_cols(gates, d, d));
  Tape::Id g = tape_.tanh(tape_.slice_cols(gates, 2 * d, d));
  Tape::Id o = tape_.sigmoid(tape_.slice_cols(gates, 3 * d, d));
  *new_cell = tape_.add(tape_.mul(f, c), tape_.mul(i, g));
  return tape_.mul(o, tape_.tanh(*new_cell));
}

void GnnRun::round() {
  // clause update: aggregate literal hidden states over edges
  Tape::Id lit_msgs = tape_.gather_rows(L_, graph_.edge_lit);
  Tape::Id clause_in = tape_.scatter_add_rows(lit_msgs, graph_.edge_clause, graph_.total_clauses);
  Tape::Id new_Cc;
  C_ = lstm(clause_in, C_, Cc_, param_ids_[5], param_ids_[6], param_ids_[7], &new_Cc);
  Cc_ = new_Cc;

  // literal update: [Flip(L); aggregated updated clause states]
  Tape::Id flip = tape_.gather_rows(L_, graph_.flip_perm);
  Tape::Id cls_msgs = tape_.gather_rows(C_, graph_.edge_clause);
  Tape::Id lit_in_agg = tape_.scatter_add_rows(cls_msgs, graph_.edge_lit, graph_.total_lits);
  Tape::Id lit_in = tape_.concat_cols(flip, lit_in_agg);
  Tape::Id new_Lc;
  L_ = lstm(lit_in, L_, Lc_, param_ids_[2], param_ids_[3], param_ids_[4], &new_Lc);
  Lc_ = new_Lc;
  if (opt_.normalize_lits) L_ = tape_.row_l2_normalize(L_);

  ++t_;
  if (tape_.value(L_).has_nonfinite())
    throw std::runtime_error("mp_round: NaN in literal embeddings at iteration " +
                             std::to_string(t_));
  if (opt_.record_history) history_.push_back(tape_.value(L_));

  if (!opt_.requires_grad) {
    // truncate the tape so long unrolls stay O(state) in memory
    EmbeddingState s = state();
    tape_ = Tape();
    leaf_params();
    set_state(s);
  }
}

void GnnRun::run() {
  for (int i = 0; i < opt_.T; ++i) round();
}

EmbeddingState GnnRun::state() const {
  EmbeddingState s;
  s.L = tape_.value(L_);
  s.C = tape_.value(C_);
  s.L_cell = tape_.value(Lc_);
  s.C_cell = tape_.value(Cc_);
  s.t = t_;
  return s;
}

Tape::Id GnnRun::logits_node() {
  if (logits_id_ >= 0) return logits_id_;
  Tape::Id votes = tape_.add_rowvec(tape_.matmul(L_, param_ids_[8]), param_ids_[9]);
  Tape::Id sums = tape_.scatter_add_rows(votes, graph_.lit_formula, graph_.batch);
  Tensor inv_counts(graph_.batch, 1);
  std::vector<int> counts(graph_.batch, 0);
  for (int f : graph_.lit_formula) ++counts[f];
  for (int b = 0; b < graph_.batch; ++b)
    inv_counts(b, 0) = counts[b] > 0 ? 1.0 / counts[b] : 0.0;
  logits_id_ = tape_.mul(sums, tape_.constant(inv_counts));
  return logits_id_;
}

std::vector<double> GnnRun::logits() {
  const Tensor& t = tape_.value(logits_node());
  return t.data;
}

Tape::Id GnnRun::classification_loss(const std::vector<double>& labels) {
  Tape::Id z = logits_node();
  Tape::Id y = tape_.constant(Tensor::col_from(labels));
  return tape_.mean_all(tape_.sub(tape_.softplus(z), tape_.mul(y, z)));
}

Tape::Id GnnRun::sdp_loss(const Tensor& y0) {
  Tensor y0_col(params_.d, 1);
  if (static_cast<int>(y0.size()) != params_.d) throw std::invalid_argument("sdp_loss: bad y0");
  y0_col.data = y0.data;
  Tape::Id dots = tape_.matmul(L_, tape_.constant(y0_col));  // 2N x 1

  // Positive-literal supervision plus the mirrored negative-literal term.
  std::vector<int> occ_rows;
  std::vector<double> occ_coeff;
  std::vector<std::vector<int>> groups;
  std::vector<int> group_formula;
  for (size_t ci = 0; ci < graph_.clause_occ.size(); ++ci) {
    int f = 0;
    std::vector<int> gpos, gneg;
    for (const auto& [row, sign] : graph_.clause_occ[ci]) {
      f = graph_.lit_formula[row];
      gpos.push_back(static_cast<int>(occ_rows.size()));
      occ_rows.push_back(row);
      occ_coeff.push_back(-0.5 * sign);
      gneg.push_back(static_cast<int>(occ_rows.size()));
      occ_rows.push_back(row + 1);
      occ_coeff.push_back(0.5 * sign);
    }
    groups.push_back(std::move(gpos));
    group_formula.push_back(f);
    groups.push_back(std::move(gneg));
    group_formula.push_back(f);
  }
  Tape::Id gathered = tape_.gather_rows(dots, occ_rows);
  Tape::Id factors = tape_.affine(
      tape_.mul(gathered, tape_.constant(Tensor::col_from(occ_coeff))), 1.0, 0.0);
  factors = tape_.affine(factors, 1.0, 0.5);
  Tape::Id prods = tape_.group_prod(factors, groups);
  Tape::Id per_formula = tape_.scatter_add_rows(prods, group_formula, graph_.batch);
  return tape_.mean_all(per_formula);
}

std::vector<const Tensor*> GnnRun::param_grads() {
  static thread_local std::vector<Tensor> zero_store;
  zero_store.clear();
  zero_store.reserve(param_ids_.size());
  std::vector<const Tensor*> out;
  for (Tape::Id id : param_ids_) {
    if (tape_.has_grad(id)) {
      out.push_back(&tape_.grad(id));
    } else {
      zero_store.push_back(Tensor::zeros(tape_.value(id).rows, tape_.value(id).cols));
      out.push_back(&zero_store.back());
    }
  }
  return out;
}

EmbeddingState mp_round(const EmbeddingState& state, const BatchGraph& graph,
                        const ModelParams& params, bool normalize_lits) {
  ForwardOptions opt;
  opt.requires_grad = false;
  opt.normalize_lits = normalize_lits;
  GnnRun run(params, graph, opt);
  run.set_state(state);
  run.round();
  return run.state();
}

ForwardResult forward(const Cnf& cnf, const ModelParams& params, const InferenceConfig& config,
                      Rng& rng, InitMode mode, bool record_history, bool normalize_lits) {
  BatchGraph graph = BatchGraph::from(cnf);
  ForwardOptions opt;
  opt.T = config.T;
  opt.record_history = record_history;
  opt.normalize_lits = normalize_lits;
  GnnRun run(params, graph, opt);
  if (mode == InitMode::Sampled) run.set_state(init_embeddings(graph, params, mode, rng));
  run.run();
  ForwardResult res;
  res.logit = run.logits()[0];
  Tape& t = run.tape();
  Tape::Id votes = t.add_rowvec(t.matmul(run.literal_matrix(), t.constant(params.vote_w)),
                                t.constant(params.vote_b));
  res.per_literal_votes = t.value(votes).data;
  res.history = run.history();
  res.final_state = run.state();
  return res;
}

double loss_classification_value(double logit, int label) {
  double y = static_cast<double>(label);
  return std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit))) - y * logit;
}

// ---- checkpoint I/O ------------------------------------------------------

namespace {
constexpr const char* kFormatTag = "satlab-ckpt-v1";

void append_tensor(std::vector<double>& blob, const Tensor& t) {
  blob.insert(blob.end(), t.data.begin(), t.data.end());
}
}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["format"] = kFormatTag;
  manifest["d"] = ck.params.d;
  manifest["step"] = ck.step;
  manifest["rng_state"] = ck.rng_state;
  manifest["batch_size"] = ck.batch_size;
  manifest["silhouette_threshold"] = ck.silhouette_threshold;
  manifest["optimizer"] = {{"present", ck.has_opt}, {"lr", ck.opt.lr},   {"beta1", ck.opt.beta1},
                           {"beta2", ck.opt.beta2}, {"eps", ck.opt.eps}, {"step", ck.opt.step}};

  std::vector<double> blob;
  json tensors = json::array();
  auto record = [&](const std::string& name, const Tensor& t) {
    tensors.push_back({{"name", name}, {"rows", t.rows}, {"cols", t.cols}});
    append_tensor(blob, t);
  };
  for (auto& [name, t] : ck.params.named()) record(name, *t);
  if (ck.has_opt) {
    auto named = ck.params.named();
    for (size_t i = 0; i < named.size(); ++i) {
      record("adam_m." + named[i].first, ck.opt.m[i]);
      record("adam_v." + named[i].first, ck.opt.v[i]);
    }
  }
  if (ck.avg_true.size() > 0) {
    record("avg_true", ck.avg_true);
    record("avg_false", ck.avg_false);
  }
  manifest["tensors"] = tensors;

  std::ofstream mf(fs::path(dir) / "manifest.json");
  mf << manifest.dump(2) << "\n";
  std::ofstream bf(fs::path(dir) / "weights.bin", std::ios::binary);
  bf.write(reinterpret_cast<const char*>(blob.data()),
           static_cast<std::streamsize>(blob.size() * sizeof(double)));
}

Checkpoint load_checkpoint(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw std::runtime_error("missing checkpoint manifest in " + dir);
  json manifest = json::parse(mf);
  if (manifest["format"] != kFormatTag)
    throw std::runtime_error("unknown checkpoint format " + manifest["format"].dump());

  Checkpoint ck;
  ck.params.d = manifest["d"].get<int>();
  ck.step = manifest["step"].get<int64_t>();
  ck.rng_state = manifest["rng_state"].get<uint64_t>();
  ck.batch_size = manifest["batch_size"].get<int>();
  ck.silhouette_threshold = manifest["silhouette_threshold"].get<double>();
  ck.has_opt = manifest["optimizer"]["present"].get<bool>();
  ck.opt.lr = manifest["optimizer"]["lr"].get<double>();
  ck.opt.beta1 = manifest["optimizer"]["beta1"].get<double>();
  ck.opt.beta2 = manifest["optimizer"]["beta2"].get<double>();
  ck.opt.eps = manifest["optimizer"]["eps"].get<double>();
  ck.opt.step = manifest["optimizer"]["step"].get<int64_t>();

  std::ifstream bf(fs::path(dir) / "weights.bin", std::ios::binary);
  if (!bf) throw std::runtime_error("missing weights.bin in " + dir);
  std::vector<char> raw((std::istreambuf_iterator<char>(bf)), std::istreambuf_iterator<char>());
  const double* cursor = reinterpret_cast<const double*>(raw.data());
  size_t remaining = raw.size() / sizeof(double);

  auto read_tensor = [&](int rows, int cols) {
    Tensor t(rows, cols);
    if (t.size() > remaining) throw std::runtime_error("checkpoint blob truncated");
    std::copy(cursor, cursor + t.size(), t.data.begin());
    cursor += t.size();
    remaining -= t.size();
    return t;
  };

  auto named = ck.params.named();
  size_t idx = 0;
  for (const auto& entry : manifest["tensors"]) {
    std::string name = entry["name"].get<std::string>();
    int rows = entry["rows"].get<int>(), cols = entry["cols"].get<int>();
    Tensor t = read_tensor(rows, cols);
    if (idx < named.size() && name == named[idx].first) {
      *named[idx].second = std::move(t);
      ++idx;
    } else if (name.rfind("adam_m.", 0) == 0) {
      ck.opt.m.push_back(std::move(t));
    } else if (name.rfind("adam_v.", 0) == 0) {
      ck.opt.v.push_back(std::move(t));
    } else if (name == "avg_true") {
      ck.avg_true = std::move(t);
    } else if (name == "avg_false") {
      ck.avg_false = std::move(t);
    } else {
      throw std::runtime_error("unexpected tensor " + name + " in checkpoint");
    }
  }
  if (idx != named.size()) throw std::runtime_error("checkpoint missing parameter tensors");
  return ck;
}

}  // namespace satlab
