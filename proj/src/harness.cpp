#include "satlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "satlab/bp.hpp"
#include "satlab/gen.hpp"
#include "satlab/sdp.hpp"
#include "satlab/solver.hpp"

namespace satlab {

namespace {

using nlohmann::json;

json spec_to_json_obj(const ExperimentSpec& s) {
  json j;
  j["name"] = s.name;
  j["datasets"] = s.datasets;
  j["checkpoint"] = s.checkpoint;
  j["out_dir"] = s.out_dir;
  j["seed"] = s.seed;
  j["jobs"] = s.jobs;
  j["max_instances"] = s.max_instances;
  return j;
}

struct FamilyData {
  std::vector<Cnf> sat_cnfs;
  double avg_vars = 0.0;
};

FamilyData load_sat_instances(const std::string& dir, int max_instances) {
  Dataset ds = read_dataset_manifest(dir);
  FamilyData fd;
  for (const auto& e : ds.entries) {
    if (e.label != Label::Sat) continue;
    if (max_instances > 0 && static_cast<int>(fd.sat_cnfs.size()) >= max_instances) break;
    fd.sat_cnfs.push_back(load_dataset_cnf(dir, e));
    fd.avg_vars += fd.sat_cnfs.back().num_vars;
  }
  if (!fd.sat_cnfs.empty()) fd.avg_vars /= static_cast<double>(fd.sat_cnfs.size());
  return fd;
}

AvgVectors avg_from_checkpoint(const Checkpoint& ck, bool* ok) {
  AvgVectors avg;
  *ok = ck.avg_true.cols > 0 && ck.avg_false.cols > 0;
  if (*ok) {
    avg.true_center.assign(ck.avg_true.data.begin(), ck.avg_true.data.end());
    avg.false_center.assign(ck.avg_false.data.begin(), ck.avg_false.data.end());
  }
  return avg;
}

ResultRow solve_family(const std::string& family, const std::string& method,
                       const FamilyData& fd, const ModelParams& params,
                       const InferenceConfig& cfg, const AvgVectors* avg, uint64_t seed) {
  ResultRow row;
  row.family = family;
  row.method = method;
  row.num_sat = static_cast<int>(fd.sat_cnfs.size());
  row.avg_vars = fd.avg_vars;
  row.mp_iters = cfg.T;
  row.samples = cfg.n_samples;
  row.decimation = cfg.max_passes > 1 && avg != nullptr;
  int solved = 0;
  for (size_t i = 0; i < fd.sat_cnfs.size(); ++i) {
    GnnSolveResult sr = solve_with_sampling(fd.sat_cnfs[i], params, cfg,
                                         Rng::child(seed, i).state(), avg);
    if (!sr.solved) continue;
    ++solved;
    if (sr.pass_index == 0)
      ++row.pass1;
    else if (sr.pass_index == 1)
      ++row.pass2;
    else
      ++row.pass3;
  }
  row.solved_pct = row.num_sat ? 100.0 * solved / row.num_sat : 0.0;
  return row;
}

const std::vector<std::string> kFamilies = {"sr", "latin", "sudoku", "circuit"};

uint64_t family_seed(uint64_t seed, size_t fam_index, int variant) {
  return Rng::child(Rng::child(seed, fam_index).state(), static_cast<uint64_t>(variant)).state();
}

}  // namespace

int family_mp_iters(const std::string& family) { return family == "sr" ? 100 : 1000; }

std::string ExperimentSpec::to_json() const { return spec_to_json_obj(*this).dump(2); }

ExperimentSpec ExperimentSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  json j = json::parse(in);
  ExperimentSpec s;
  s.name = j.value("name", "");
  if (j.contains("datasets"))
    s.datasets = j["datasets"].get<std::map<std::string, std::string>>();
  s.checkpoint = j.value("checkpoint", "");
  s.out_dir = j.value("out_dir", "");
  s.seed = j.value("seed", uint64_t{0});
  s.jobs = j.value("jobs", 1);
  s.max_instances = j.value("max_instances", 0);
  return s;
}

void ResultsTable::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "family,method,num_sat,avg_vars,pass1,pass2,pass3,mp_iters,samples,decimation,"
         "solved_pct\n";
  for (const auto& r : rows)
    out << r.family << ',' << r.method << ',' << r.num_sat << ',' << r.avg_vars << ',' << r.pass1
        << ',' << r.pass2 << ',' << r.pass3 << ',' << r.mp_iters << ',' << r.samples << ','
        << (r.decimation ? 1 : 0) << ',' << r.solved_pct << '\n';
}

void ResultsTable::write_json(const std::string& path, const ExperimentSpec& spec) const {
  json j;
  j["spec"] = spec_to_json_obj(spec);
  j["skipped"] = skipped;
  j["rows"] = json::array();
  for (const auto& r : rows) {
    json jr;
    jr["family"] = r.family;
    jr["method"] = r.method;
    jr["num_sat"] = r.num_sat;
    jr["avg_vars"] = r.avg_vars;
    jr["pass1"] = r.pass1;
    jr["pass2"] = r.pass2;
    jr["pass3"] = r.pass3;
    jr["mp_iters"] = r.mp_iters;
    jr["samples"] = r.samples;
    jr["decimation"] = r.decimation;
    jr["solved_pct"] = r.solved_pct;
    j["rows"].push_back(jr);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

ResultsTable run_table1(const ExperimentSpec& spec) {
  Checkpoint ck = load_checkpoint(spec.checkpoint);
  bool have_avg = false;
  AvgVectors avg = avg_from_checkpoint(ck, &have_avg);
  ResultsTable table;
  for (size_t fi = 0; fi < kFamilies.size(); ++fi) {
    const std::string& fam = kFamilies[fi];
    auto it = spec.datasets.find(fam);
    if (it == spec.datasets.end() || !std::filesystem::exists(it->second)) {
      table.skipped.push_back(fam);
      continue;
    }
    FamilyData fd = load_sat_instances(it->second, spec.max_instances);
    InferenceConfig base;
    base.T = family_mp_iters(fam);

    InferenceConfig dec = base;
    dec.n_samples = 16;
    dec.max_passes = 3;
    table.rows.push_back(solve_family(fam, "gnn-16s-dec", fd, ck.params, dec,
                                      have_avg ? &avg : nullptr, family_seed(spec.seed, fi, 0)));

    InferenceConfig one = base;
    one.n_samples = 1;
    one.max_passes = 1;
    table.rows.push_back(
        solve_family(fam, "gnn-1s", fd, ck.params, one, nullptr, family_seed(spec.seed, fi, 1)));

    InferenceConfig many = base;
    many.n_samples = 32;
    many.max_passes = 1;
    table.rows.push_back(
        solve_family(fam, "gnn-32s", fd, ck.params, many, nullptr, family_seed(spec.seed, fi, 2)));
  }
  if (!spec.out_dir.empty()) {
    std::filesystem::create_directories(spec.out_dir);
    table.write_csv(spec.out_dir + "/table1.csv");
    table.write_json(spec.out_dir + "/table1.json", spec);
  }
  return table;
}

ResultsTable run_bp_comparison(const ExperimentSpec& spec) {
  Checkpoint ck = load_checkpoint(spec.checkpoint);
  ResultsTable table;
  for (size_t fi = 0; fi < kFamilies.size(); ++fi) {
    const std::string& fam = kFamilies[fi];
    auto it = spec.datasets.find(fam);
    if (it == spec.datasets.end() || !std::filesystem::exists(it->second)) {
      table.skipped.push_back(fam);
      continue;
    }
    FamilyData fd = load_sat_instances(it->second, spec.max_instances);
    InferenceConfig one;
    one.T = family_mp_iters(fam);
    one.n_samples = 1;
    one.max_passes = 1;
    table.rows.push_back(
        solve_family(fam, "gnn-1s", fd, ck.params, one, nullptr, family_seed(spec.seed, fi, 3)));

    ResultRow bp_row;
    bp_row.family = fam;
    bp_row.method = "bp";
    bp_row.num_sat = static_cast<int>(fd.sat_cnfs.size());
    bp_row.avg_vars = fd.avg_vars;
    bp_row.mp_iters = 1000;
    // single run: 1000 damped iterations, then marginal rounding
    int solved = 0;
    for (size_t i = 0; i < fd.sat_cnfs.size(); ++i) {
      const Cnf& cnf = fd.sat_cnfs[i];
      Rng rng = Rng::child(family_seed(spec.seed, fi, 4), i);
      BpResult r = bp_run(build_factor_graph(cnf), BpConfig{}, rng);
      Assignment a(cnf.num_vars);
      for (int v = 1; v <= cnf.num_vars; ++v) a.set(v, r.marginal[v] >= 0.5);
      if (evaluate(cnf, a).all_satisfied) {
        ++solved;
        ++bp_row.pass1;
      }
    }
    bp_row.solved_pct = bp_row.num_sat ? 100.0 * solved / bp_row.num_sat : 0.0;
    table.rows.push_back(bp_row);
  }
  if (!spec.out_dir.empty()) {
    std::filesystem::create_directories(spec.out_dir);
    table.write_csv(spec.out_dir + "/bp_compare.csv");
    table.write_json(spec.out_dir + "/bp_compare.json", spec);
  }
  return table;
}

TraceOutputs run_traces(const ExperimentSpec& spec, int num_instances, int num_vars, int trace_T) {
  Checkpoint ck = load_checkpoint(spec.checkpoint);
  bool have_avg = false;
  AvgVectors avg = avg_from_checkpoint(ck, &have_avg);
  if (!have_avg)
    throw std::runtime_error("run_traces: checkpoint lacks average embedding vectors");
  std::filesystem::create_directories(spec.out_dir);
  std::ofstream trace_csv(spec.out_dir + "/trace.csv");
  std::ofstream gaps_csv(spec.out_dir + "/gaps.csv");
  trace_csv << "instance,iteration,objective,reference\n";
  gaps_csv << "instance,gap_before,gap_after\n";

  TraceOutputs out;
  InferenceConfig icfg;
  icfg.T = trace_T;
  for (int i = 0; i < num_instances; ++i) {
    Rng rng = Rng::child(Rng::child(spec.seed, 0x7ace).state(), static_cast<uint64_t>(i));
    // random satisfiable 2-CNF below the sat threshold
    Cnf cnf;
    cnf.num_vars = num_vars;
    for (;;) {
      cnf.clauses.clear();
      for (int c = 0; c < num_vars; ++c) {
        int v1 = rng.uniform_int(1, num_vars);
        int v2 = v1;
        while (v2 == v1) v2 = rng.uniform_int(1, num_vars);
        Clause cl{Lit(v1, rng.bernoulli(0.5)), Lit(v2, rng.bernoulli(0.5))};
        cnf.clauses.push_back(cl);
      }
      if (dpll_solve(cnf).status == SolveStatus::Sat) break;
    }

    ForwardResult fr = forward(cnf, ck.params, icfg, rng, InitMode::Tied, /*record_history=*/true);
    TraceResult tr = sdp_trace(fr.history, avg, cnf, rng);
    for (size_t t = 0; t < tr.values.size(); ++t)
      trace_csv << i << ',' << t << ',' << tr.values[t] << ',' << tr.reference << '\n';

    // re-optimize from the final-embedding vectors and record both gaps
    SdpProblem p = build_max2sat_sdp(cnf);
    const Tensor& L = fr.history.back();
    std::vector<std::vector<double>> v(num_vars + 1);
    v[0] = avg.true_center;
    for (int j = 1; j <= num_vars; ++j) {
      v[j].resize(L.cols);
      for (int c = 0; c < L.cols; ++c) v[j][c] = L(2 * (j - 1), c);
    }
    std::vector<double> mean(L.cols, 0.0);
    for (const auto& row : v)
      for (int c = 0; c < L.cols; ++c) mean[c] += row[c] / (num_vars + 1);
    for (auto& row : v) {
      double nrm = 0;
      for (int c = 0; c < L.cols; ++c) {
        row[c] -= mean[c];
        nrm += row[c] * row[c];
      }
      nrm = std::sqrt(nrm);
      if (nrm > 1e-12)
        for (int c = 0; c < L.cols; ++c) row[c] /= nrm;
    }
    VectorSolution reopt = solve_low_rank_from(p, v, 500, 1e-10);
    double gap_before = tr.reference - tr.values.back();
    double gap_after = tr.reference - reopt.objective;
    gaps_csv << i << ',' << gap_before << ',' << gap_after << '\n';
    out.mean_gap_before += gap_before;
    out.mean_gap_after += gap_after;
    ++out.instances;

    if (i == 0 && fr.history.size() >= 2) {
      // |dY| between the last two iterations for one sampled instance
      std::ofstream dy(spec.out_dir + "/delta_y.csv");
      const Tensor& A = fr.history[fr.history.size() - 2];
      const Tensor& B = fr.history.back();
      int n = num_vars;
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          double ya = 0, yb = 0;
          for (int k = 0; k < A.cols; ++k) {
            ya += A(2 * r, k) * A(2 * c, k);
            yb += B(2 * r, k) * B(2 * c, k);
          }
          dy << std::abs(yb - ya) << (c + 1 == n ? '\n' : ',');
        }
      }
    }
  }
  if (out.instances) {
    out.mean_gap_before /= out.instances;
    out.mean_gap_after /= out.instances;
  }
  std::ofstream spec_json(spec.out_dir + "/trace_spec.json");
  spec_json << spec.to_json() << '\n';
  return out;
}

}  // namespace satlab
