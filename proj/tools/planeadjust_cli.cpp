#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pa/dataset.hpp"
#include "pa/experiment.hpp"
#include "pa/gpp_solver.hpp"
#include "pa/metrics.hpp"

namespace {

int cmd_simulate(const pa::SceneSpec& spec, const std::string& out, bool no_gt) {
  pa::Scene scene = pa::generate_scene(spec);
  pa::write_dataset(out, scene, !no_gt);
  std::cout << "wrote " << out << " (" << scene.total_points() << " points, "
            << scene.graph.observations.size() << " observations)\n";
  return 0;
}

int cmd_solve(const std::string& dataset, const std::string& method, const std::string& out,
              const std::string& init_mode, double sigma_init, std::uint64_t seed, int max_iter,
              double rel_tol, const std::string& calibration) {
  const pa::Scene scene = pa::read_dataset(dataset);
  pa::SolveReport report;
  if (method == "globalpointer") {
    pa::GpConfig config;
    config.max_iter = max_iter;
    config.rel_tol = rel_tol;
    std::mt19937_64 rng(pa::derive_seed(seed, 1, 0));
    std::vector<pa::Pose> poses;
    std::vector<pa::Plane> planes;
    if (init_mode == "random") {
      std::tie(poses, planes) = pa::random_init(scene.spec, rng);
    } else if (init_mode == "perturbed") {
      if (!scene.has_ground_truth)
        throw std::runtime_error("perturbed init needs a dataset with ground truth");
      poses = pa::perturb_init(scene.gt_poses, sigma_init, sigma_init, rng);
      planes = scene.gt_planes;
    } else {
      throw std::runtime_error("unknown init mode: " + init_mode);
    }
    report = pa::run_globalpointer(scene.graph, std::move(poses), std::move(planes), config);
  } else if (method == "globalpointer-pp") {
    pa::GppConfig config;
    config.max_iter = max_iter;
    config.rel_tol = rel_tol;
    config.calibration_mode = calibration == "joint" ? pa::CalibrationMode::Joint
                                                     : pa::CalibrationMode::Incremental;
    report = pa::run_globalpointer_pp(scene.graph, config);
  } else {
    throw std::runtime_error("unknown method: " + method);
  }
  pa::write_report_json(out, method, report);
  std::cout << "converged=" << (report.converged ? "true" : "false")
            << " iterations=" << report.iterations
            << " objective=" << pa::format_double(report.point_objective_trace.back())
            << " wall_ms=" << pa::format_double(report.wall.total_ms) << "\n"
            << "report written to " << out << "\n";
  return 0;
}

int cmd_evaluate(const std::string& estimates_path, const std::string& dataset_path,
                 const std::string& out) {
  const pa::Estimates est = pa::read_estimates(estimates_path);
  const pa::Scene scene = pa::read_dataset(dataset_path);
  if (!scene.has_ground_truth) throw std::runtime_error("dataset has no ground truth");
  if (static_cast<int>(est.poses.size()) != scene.spec.m)
    throw std::runtime_error("estimate has " + std::to_string(est.poses.size()) +
                             " poses but dataset has m=" + std::to_string(scene.spec.m));
  if (static_cast<int>(est.planes.size()) != scene.spec.n)
    throw std::runtime_error("estimate has " + std::to_string(est.planes.size()) +
                             " planes but dataset has n=" + std::to_string(scene.spec.n));
  const auto [poses, planes] = pa::gauge_align(est.poses, est.planes, scene.gt_poses);
  const pa::MetricsRecord rec =
      pa::compute_metrics(poses, planes, scene.gt_poses, scene.gt_planes, scene.graph);
  std::ostringstream os;
  auto agg = [](const pa::Aggregate& a) {
    return "{\"mean\":" + pa::format_double(a.mean) + ",\"median\":" + pa::format_double(a.median) +
           ",\"max\":" + pa::format_double(a.max) + "}";
  };
  os << "{\"e_total\":" << pa::format_double(rec.e_total) << ",\"e_R\":" << agg(rec.e_r_agg)
     << ",\"e_t\":" << agg(rec.e_t_agg) << ",\"e_n\":" << agg(rec.e_n_agg)
     << ",\"e_d\":" << agg(rec.e_d_agg) << "}";
  if (out.empty()) {
    std::cout << os.str() << "\n";
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot open " + out + " for writing");
    f << os.str() << "\n";
    std::cout << "metrics written to " << out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plane adjustment: joint LiDAR pose and 3-D plane estimation"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic labeled-point dataset");
  pa::SceneSpec spec;
  std::string sim_out;
  bool no_gt = false;
  sim->add_option("--m", spec.m, "number of poses");
  sim->add_option("--n", spec.n, "number of planes");
  sim->add_option("--sigma-p", spec.sigma_p, "point noise std (meters)");
  sim->add_option("--overlap", spec.overlap, "fraction of retained (pose, plane) pairs");
  sim->add_option("--points-per-obs", spec.points_per_obs, "points per observation");
  sim->add_option("--box-half-extent", spec.box_half_extent, "half extent of the pose box");
  sim->add_option("--seed", spec.seed, "random seed");
  sim->add_option("--out", sim_out, "output dataset path (.jsonl)")->required();
  sim->add_flag("--no-ground-truth", no_gt, "omit the ground-truth record");

  // solve
  auto* solve = app.add_subcommand("solve", "Run a solver on a dataset");
  std::string solve_dataset, method = "globalpointer", solve_out = "report.json";
  std::string init_mode = "random", calibration = "incremental";
  double sigma_init = 0.0, rel_tol = 1e-4;
  int max_iter = 200;
  std::uint64_t solve_seed = 0;
  solve->add_option("dataset", solve_dataset, "input dataset (.jsonl)")->required();
  solve->add_option("--method", method, "globalpointer | globalpointer-pp");
  solve->add_option("--out", solve_out, "output report path");
  solve->add_option("--init", init_mode, "random | perturbed (globalpointer only)");
  solve->add_option("--sigma-init", sigma_init, "perturbation scale for perturbed init");
  solve->add_option("--seed", solve_seed, "random seed for initialization");
  solve->add_option("--max-iter", max_iter, "outer iteration cap");
  solve->add_option("--rel-tol", rel_tol, "relative stopping tolerance");
  solve->add_option("--calibration", calibration, "incremental | joint (globalpointer-pp)");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Compute metrics for estimates against ground truth");
  std::string est_path, eval_dataset, eval_out;
  eval->add_option("--estimates", est_path, "report/estimates JSON from solve")->required();
  eval->add_option("--dataset", eval_dataset, "dataset with ground truth")->required();
  eval->add_option("--out", eval_out, "output metrics path (stdout when omitted)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a Monte Carlo sweep from a config file");
  std::string sweep_config;
  std::uint64_t sweep_seed = 0;
  bool sweep_seed_set = false;
  sweep->add_option("--config", sweep_config, "RunConfig JSON path")->required();
  sweep->add_option("--seed", sweep_seed, "override config seed")->each([&](const std::string&) {
    sweep_seed_set = true;
  });

  // bench
  auto* bench = app.add_subcommand("bench", "Wall-time scaling benchmark");
  pa::BenchConfig bench_cfg;
  bench->add_option("--values", bench_cfg.values, "swept pose/plane counts");
  bench->add_option("--fixed", bench_cfg.fixed, "fixed count on the other axis");
  bench->add_option("--trials", bench_cfg.trials, "trials per cell");
  bench->add_option("--seed", bench_cfg.seed, "random seed");
  bench->add_option("--method", bench_cfg.method, "globalpointer | globalpointer-pp");
  bench->add_option("--out", bench_cfg.out_json, "output JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(spec, sim_out, no_gt);
    if (solve->parsed())
      return cmd_solve(solve_dataset, method, solve_out, init_mode, sigma_init, solve_seed,
                       max_iter, rel_tol, calibration);
    if (eval->parsed()) return cmd_evaluate(est_path, eval_dataset, eval_out);
    if (sweep->parsed()) {
      pa::RunConfig cfg = pa::load_run_config(sweep_config);
      if (sweep_seed_set) cfg.seed = sweep_seed;
      pa::run_experiment(cfg);
      std::cout << "sweep complete: " << cfg.out_csv << ", " << cfg.out_json << "\n";
      return 0;
    }
    if (bench->parsed()) {
      const pa::BenchResult r = pa::run_bench(bench_cfg);
      std::cout << "slope_m=" << pa::format_double(r.slope_m)
                << " slope_n=" << pa::format_double(r.slope_n) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
