#include <cstdint>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "satlab/bp.hpp"
#include "satlab/gen.hpp"
#include "satlab/harness.hpp"
#include "satlab/infer.hpp"
#include "satlab/sdp.hpp"
#include "satlab/solver.hpp"
#include "satlab/train.hpp"

using namespace satlab;
using nlohmann::json;

namespace {

json assignment_to_json(const Assignment& a, int num_vars) {
  json j = json::array();
  for (int v = 1; v <= num_vars; ++v) j.push_back(a.has(v) ? (a.value(v) ? 1 : 0) : -1);
  return j;
}

// Load an SR dataset directory into per-size splits, holding out the highest
// pair ids of each size for validation.
TrainSet load_train_set(const std::string& dir, int val_pairs) {
  Dataset ds = read_dataset_manifest(dir);
  std::map<int, std::map<int, std::vector<LabeledCnf>>> by_size;  // n -> pair -> entries
  for (const auto& e : ds.entries) {
    LabeledCnf lc;
    lc.cnf = load_dataset_cnf(dir, e);
    lc.label = e.label == Label::Sat ? 1 : 0;
    lc.n = e.n;
    lc.pair_id = e.pair_id;
    by_size[e.n][e.pair_id].push_back(std::move(lc));
  }
  TrainSet ts;
  for (auto& [n, pairs] : by_size) {
    SizeSplit split;
    split.n = n;
    int total = static_cast<int>(pairs.size());
    int val_from = std::max(0, total - val_pairs);
    int idx = 0;
    for (auto& [pid, members] : pairs) {
      auto& dest = idx < val_from ? split.train : split.val;
      for (auto& m : members) dest.push_back(std::move(m));
      ++idx;
    }
    ts.sizes.push_back(std::move(split));
  }
  return ts;
}

ExperimentSpec build_spec(const std::string& config, const std::string& ckpt,
                          const std::map<std::string, std::string>& datasets,
                          const std::string& out, uint64_t seed, int jobs, int max_instances) {
  ExperimentSpec spec;
  if (!config.empty()) spec = ExperimentSpec::from_json_file(config);
  if (!ckpt.empty()) spec.checkpoint = ckpt;
  for (const auto& [k, v] : datasets)
    if (!v.empty()) spec.datasets[k] = v;
  if (!out.empty()) spec.out_dir = out;
  if (seed) spec.seed = seed;
  if (jobs) spec.jobs = jobs;
  if (max_instances) spec.max_instances = max_instances;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAT laboratory: GNN classifier, SDP relaxation, belief propagation"};
  app.require_subcommand(1);
  app.fallthrough();

  uint64_t seed = 1;
  int jobs = 1;
  std::string out;
  app.add_option("--seed", seed, "master RNG seed")->capture_default_str();
  app.add_option("--jobs", jobs, "worker count (1 = bit-reproducible)")->capture_default_str();
  app.add_option("--out", out, "output path");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a labeled dataset");
  std::string gen_family = "sr", gen_dir = "dataset";
  GenConfig gcfg;
  gen->add_option("--family", gen_family, "sr|latin|sudoku|circuit")->capture_default_str();
  gen->add_option("--dir", gen_dir, "output directory")->capture_default_str();
  gen->add_option("--count", gcfg.count, "instance pair count")->capture_default_str();
  gen->add_option("--n-min", gcfg.n_min, "min size")->capture_default_str();
  gen->add_option("--n-max", gcfg.n_max, "max size / order / bitwidth")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "train the classifier");
  std::string train_data, train_sched = "curriculum", train_log, train_ckpt = "ckpt";
  std::string train_loss = "classification";
  int train_pairs = 526, val_pairs = 200, flat_epochs = 600;
  double max_hours = 0;
  bool verbose = false;
  train->add_option("--data", train_data, "SR dataset directory (generated on the fly if unset)");
  train->add_option("--schedule", train_sched, "curriculum|flat")->capture_default_str();
  train->add_option("--loss", train_loss, "classification|sdp")->capture_default_str();
  train->add_option("--ckpt", train_ckpt, "checkpoint output directory")->capture_default_str();
  train->add_option("--log", train_log, "CSV log path");
  train->add_option("--train-pairs", train_pairs, "pairs per size")->capture_default_str();
  train->add_option("--val-pairs", val_pairs, "held-out pairs per size")->capture_default_str();
  train->add_option("--flat-epochs", flat_epochs, "epoch cap for the flat schedule")
      ->capture_default_str();
  train->add_option("--max-hours", max_hours, "wall-clock budget (0 = unlimited)");
  train->add_flag("--verbose", verbose, "per-epoch progress on stderr");

  // solve
  auto* solve = app.add_subcommand("solve", "solve one instance with the GNN");
  std::string solve_in, solve_ckpt;
  InferenceConfig icfg;
  solve->add_option("--in", solve_in, "DIMACS file")->required();
  solve->add_option("--ckpt", solve_ckpt, "checkpoint directory")->required();
  solve->add_option("--samples", icfg.n_samples, "initialization samples")->capture_default_str();
  solve->add_option("--passes", icfg.max_passes, "decimation passes")->capture_default_str();
  solve->add_option("-T,--mp-iters", icfg.T, "message-passing rounds")->capture_default_str();

  // sdp
  auto* sdp = app.add_subcommand("sdp", "MAX-2-SAT relaxation on one instance");
  std::string sdp_in;
  int sdp_rank = 0, sdp_sweeps = 500, sdp_trials = 50;
  sdp->add_option("--in", sdp_in, "DIMACS file (2-CNF)")->required();
  sdp->add_option("--rank", sdp_rank, "vector dimension (0 = ceil(sqrt(2(n+1))))");
  sdp->add_option("--sweeps", sdp_sweeps, "coordinate-ascent sweeps")->capture_default_str();
  sdp->add_option("--trials", sdp_trials, "hyperplane rounding trials")->capture_default_str();

  // bp
  auto* bp = app.add_subcommand("bp", "belief propagation with decimation");
  std::string bp_in;
  int bp_iters = 1000;
  bp->add_option("--in", bp_in, "DIMACS file")->required();
  bp->add_option("--max-iters", bp_iters, "BP iteration cap")->capture_default_str();

  // experiment subcommands
  std::string cfg_path, exp_ckpt;
  std::map<std::string, std::string> exp_data;
  int max_instances = 0;
  auto add_exp_opts = [&](CLI::App* cmd) {
    cmd->add_option("--config", cfg_path, "ExperimentSpec JSON");
    cmd->add_option("--ckpt", exp_ckpt, "checkpoint directory");
    cmd->add_option("--data-sr", exp_data["sr"], "SR dataset directory");
    cmd->add_option("--data-latin", exp_data["latin"], "Latin dataset directory");
    cmd->add_option("--data-sudoku", exp_data["sudoku"], "Sudoku dataset directory");
    cmd->add_option("--data-circuit", exp_data["circuit"], "circuit dataset directory");
    cmd->add_option("--max-instances", max_instances, "cap per family (0 = all)");
  };
  auto* table1 = app.add_subcommand("table1", "solve-rate table across families");
  add_exp_opts(table1);
  auto* bpcmp = app.add_subcommand("bp-compare", "GNN vs BP solve rates");
  add_exp_opts(bpcmp);
  auto* trace = app.add_subcommand("trace", "SDP objective traces of the embeddings");
  add_exp_opts(trace);
  int trace_instances = 200, trace_vars = 12, trace_T = 30;
  trace->add_option("--instances", trace_instances, "2-CNF count")->capture_default_str();
  trace->add_option("--vars", trace_vars, "variables per 2-CNF")->capture_default_str();
  trace->add_option("-T,--mp-iters", trace_T, "recorded rounds")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      gcfg.seed = seed;
      Dataset ds = generate_dataset(gen_family, gcfg, gen_dir);
      std::cout << "wrote " << ds.entries.size() << " instances to " << gen_dir << "\n";
      return 0;
    }

    if (*train) {
      CurriculumSchedule schedule = CurriculumSchedule::standard();
      TrainSet data = train_data.empty()
                          ? build_sr_train_set(schedule, train_pairs, val_pairs, seed)
                          : load_train_set(train_data, val_pairs);
      TrainConfig tcfg;
      tcfg.seed = seed;
      tcfg.loss = train_loss == "sdp" ? LossMode::Sdp : LossMode::Classification;
      tcfg.max_seconds = max_hours * 3600.0;
      tcfg.verbose = verbose;
      TrainOutcome result;
      if (train_sched == "flat") {
        result = train_flat(data, flat_epochs, CurriculumSchedule::mp_iters(40), 0.85, tcfg);
      } else {
        result = train_curriculum(data, schedule, tcfg);
      }
      if (!result.log.diverged && tcfg.loss == LossMode::Classification) {
        const SizeSplit* top = data.find(40);
        if (top) {
          InferenceConfig fit_cfg;
          fit_cfg.T = 100;
          fit_cfg.n_samples = 1;
          fit_cfg.max_passes = 1;
          fit_extraction_artifacts(result.checkpoint, top->val, fit_cfg,
                                   Rng::child(seed, 77).state());
        }
      }
      save_checkpoint(result.checkpoint, train_ckpt);
      if (!train_log.empty()) write_log_csv(result.log, train_log);
      std::cout << "final val accuracy " << result.log.final_val_acc
                << (result.log.diverged ? " (diverged)" : "") << "\n";
      return result.log.diverged ? 1 : 0;
    }

    if (*solve) {
      Cnf cnf = parse_dimacs_file(solve_in);
      Checkpoint ck = load_checkpoint(solve_ckpt);
      AvgVectors avg;
      const AvgVectors* avg_ptr = nullptr;
      if (ck.avg_true.cols > 0) {
        avg.true_center.assign(ck.avg_true.data.begin(), ck.avg_true.data.end());
        avg.false_center.assign(ck.avg_false.data.begin(), ck.avg_false.data.end());
        avg_ptr = &avg;
      }
      GnnSolveResult r = solve_with_sampling(cnf, ck.params, icfg, seed, avg_ptr);
      json j;
      j["solved"] = r.solved;
      if (r.solved) {
        j["assignment"] = assignment_to_json(r.assignment, cnf.num_vars);
        j["pass"] = r.pass_index;
        j["sample"] = r.sample_index;
      }
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*sdp) {
      Cnf cnf = parse_dimacs_file(sdp_in);
      SdpProblem p = build_max2sat_sdp(cnf);
      if (sdp_rank == 0)
        sdp_rank = std::max(2, static_cast<int>(std::ceil(std::sqrt(2.0 * (cnf.num_vars + 1)))));
      Rng rng(seed);
      VectorSolution sol = solve_low_rank(p, sdp_rank, sdp_sweeps, 1e-10, rng);
      Assignment rounded = round_random_hyperplane(cnf, sol, rng, sdp_trials);
      json j;
      j["objective"] = sol.objective;
      j["rank"] = sdp_rank;
      j["rounded_satisfied"] = evaluate(cnf, rounded).satisfied_count;
      j["num_clauses"] = cnf.clauses.size();
      j["assignment"] = assignment_to_json(rounded, cnf.num_vars);
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*bp) {
      Cnf cnf = parse_dimacs_file(bp_in);
      Rng rng(seed);
      BpSolveConfig bcfg;
      bcfg.bp.max_iters = bp_iters;
      BpSolveResult r = bp_decimate_solve(cnf, bcfg, rng);
      json j;
      j["solved"] = r.solved;
      j["bp_rounds"] = r.bp_rounds;
      j["used_local_search"] = r.used_local_search;
      if (r.solved) j["assignment"] = assignment_to_json(r.assignment, cnf.num_vars);
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    ExperimentSpec spec = build_spec(cfg_path, exp_ckpt, exp_data, out, seed, jobs, max_instances);
    if (*table1) {
      ResultsTable t = run_table1(spec);
      t.write_csv(spec.out_dir.empty() ? "table1.csv" : spec.out_dir + "/table1.csv");
      for (const auto& f : t.skipped) std::cerr << "warning: skipped family " << f << "\n";
      return t.skipped.empty() ? 0 : 2;
    }
    if (*bpcmp) {
      ResultsTable t = run_bp_comparison(spec);
      for (const auto& f : t.skipped) std::cerr << "warning: skipped family " << f << "\n";
      return t.skipped.empty() ? 0 : 2;
    }
    if (*trace) {
      if (spec.out_dir.empty()) spec.out_dir = "trace_out";
      TraceOutputs t = run_traces(spec, trace_instances, trace_vars, trace_T);
      std::cout << "instances " << t.instances << " mean gap before " << t.mean_gap_before
                << " after " << t.mean_gap_after << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
