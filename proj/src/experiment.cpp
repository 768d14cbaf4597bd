#include "pa/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pa/dataset.hpp"

namespace pa {

namespace {

using nlohmann::json;

double median_of(std::vector<double> v) { return aggregate(std::move(v)).median; }

std::string agg_json(const Aggregate& a) {
  return "{\"mean\":" + format_double(a.mean) + ",\"median\":" + format_double(a.median) +
         ",\"max\":" + format_double(a.max) + "}";
}

}  // namespace

void RunConfig::validate() const {
  if (trials < 1) throw std::runtime_error("trials must be >= 1");
  if (method != "globalpointer" && method != "globalpointer-pp")
    throw std::runtime_error("unknown method: " + method);
  if (m_grid.empty() || n_grid.empty() || sigma_p_grid.empty() || sigma_init_grid.empty() ||
      overlap_grid.empty())
    throw std::runtime_error("empty sweep grid");
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  RunConfig cfg;
  cfg.method = j.value("method", cfg.method);
  cfg.trials = j.value("trials", cfg.trials);
  cfg.seed = j.value("seed", cfg.seed);
  const std::string init = j.value("init", "random");
  if (init == "random") {
    cfg.init = InitMode::Random;
  } else if (init == "perturbed") {
    cfg.init = InitMode::Perturbed;
  } else {
    throw std::runtime_error("unknown init mode: " + init);
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    if (g.contains("m")) cfg.m_grid = g["m"].get<std::vector<int>>();
    if (g.contains("n")) cfg.n_grid = g["n"].get<std::vector<int>>();
    if (g.contains("sigma_p")) cfg.sigma_p_grid = g["sigma_p"].get<std::vector<double>>();
    if (g.contains("sigma_init")) cfg.sigma_init_grid = g["sigma_init"].get<std::vector<double>>();
    if (g.contains("overlap")) cfg.overlap_grid = g["overlap"].get<std::vector<double>>();
  }
  if (j.contains("scene")) {
    const auto& s = j["scene"];
    cfg.box_half_extent = s.value("box_half_extent", cfg.box_half_extent);
    cfg.points_per_obs = s.value("points_per_obs", cfg.points_per_obs);
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    cfg.gp.max_iter = s.value("max_iter", cfg.gp.max_iter);
    cfg.gp.rel_tol = s.value("rel_tol", cfg.gp.rel_tol);
    cfg.gpp.max_iter = cfg.gp.max_iter;
    cfg.gpp.rel_tol = cfg.gp.rel_tol;
    if (s.contains("sdp")) {
      const auto& d = s["sdp"];
      cfg.gp.sdp.rel_gap_tol = d.value("rel_gap_tol", cfg.gp.sdp.rel_gap_tol);
      cfg.gp.sdp.feas_tol = d.value("feas_tol", cfg.gp.sdp.feas_tol);
      cfg.gp.sdp.max_iter = d.value("max_iter", cfg.gp.sdp.max_iter);
      cfg.gpp.sdp = cfg.gp.sdp;
    }
    const std::string calib = s.value("calibration", "incremental");
    if (calib == "incremental") {
      cfg.gpp.calibration_mode = CalibrationMode::Incremental;
    } else if (calib == "joint") {
      cfg.gpp.calibration_mode = CalibrationMode::Joint;
    } else {
      throw std::runtime_error("unknown calibration mode: " + calib);
    }
  }
  cfg.out_csv = j.value("out_csv", cfg.out_csv);
  cfg.out_json = j.value("out_json", cfg.out_json);
  cfg.validate();
  return cfg;
}

std::string TrialRow::to_csv() const {
  std::ostringstream os;
  os << method << "," << m << "," << n << "," << format_double(sigma_p) << ","
     << format_double(sigma_init) << "," << format_double(overlap) << "," << trial << "," << seed
     << "," << iterations << "," << (converged ? 1 : 0) << "," << format_double(e_total) << ","
     << format_double(e_r_med) << "," << format_double(e_t_med) << "," << format_double(e_n_med)
     << "," << format_double(e_d_med) << "," << format_double(wall_ms) << ","
     << format_double(gap_max) << "," << format_double(rank_ratio_max) << "," << status;
  return os.str();
}

TrialRow run_trial(const RunConfig& config, int cell_index, int trial, int m, int n,
                   double sigma_p, double sigma_init, double overlap) {
  TrialRow row;
  row.method = config.method;
  row.m = m;
  row.n = n;
  row.sigma_p = sigma_p;
  row.sigma_init = sigma_init;
  row.overlap = overlap;
  row.trial = trial;
  row.seed = derive_seed(config.seed, static_cast<std::uint64_t>(cell_index),
                         static_cast<std::uint64_t>(trial));
  try {
    SceneSpec spec;
    spec.m = m;
    spec.n = n;
    spec.sigma_p = sigma_p;
    spec.overlap = overlap;
    spec.box_half_extent = config.box_half_extent;
    spec.points_per_obs = config.points_per_obs;
    spec.seed = row.seed;
    const Scene scene = generate_scene(spec);

    SolveReport report;
    if (config.method == "globalpointer") {
      std::mt19937_64 init_rng(derive_seed(row.seed, 1, 0));
      std::vector<Pose> poses;
      std::vector<Plane> planes;
      if (config.init == InitMode::Random) {
        std::tie(poses, planes) = random_init(spec, init_rng);
      } else {
        poses = perturb_init(scene.gt_poses, sigma_init, sigma_init, init_rng);
        planes = scene.gt_planes;
      }
      report = run_globalpointer(scene.graph, std::move(poses), std::move(planes), config.gp);
    } else {
      report = run_globalpointer_pp(scene.graph, config.gpp);
    }

    const auto [aligned_poses, aligned_planes] =
        gauge_align(report.poses, report.planes, scene.gt_poses);
    const MetricsRecord metrics = compute_metrics(aligned_poses, aligned_planes, scene.gt_poses,
                                                  scene.gt_planes, scene.graph);
    row.iterations = report.iterations;
    row.converged = report.converged;
    row.e_total = metrics.e_total;
    row.e_r_med = metrics.e_r_agg.median;
    row.e_t_med = metrics.e_t_agg.median;
    row.e_n_med = metrics.e_n_agg.median;
    row.e_d_med = metrics.e_d_agg.median;
    row.wall_ms = report.wall.total_ms;
    row.gap_max = report.gap_max;
    row.rank_ratio_max = report.rank_ratio_max;
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
  }
  return row;
}

ExperimentResult run_experiment(const RunConfig& config) {
  config.validate();
  std::ofstream csv(config.out_csv);
  if (!csv) throw std::runtime_error("cannot open " + config.out_csv + " for writing");
  csv << kCsvHeader << "\n";

  std::ofstream summary_out(config.out_json);
  if (!summary_out) throw std::runtime_error("cannot open " + config.out_json + " for writing");

  ExperimentResult result;
  std::ostringstream cells_json;
  int cell_index = 0;
  bool first_cell = true;
  for (int m : config.m_grid)
    for (int n : config.n_grid)
      for (double sigma_p : config.sigma_p_grid)
        for (double sigma_init : config.sigma_init_grid)
          for (double overlap : config.overlap_grid) {
            std::vector<double> etot, er, et, en, ed, wall, iters;
            int converged = 0, failed = 0;
            double gap_max = 0.0, rank_max = 0.0;
            for (int trial = 0; trial < config.trials; ++trial) {
              TrialRow row =
                  run_trial(config, cell_index, trial, m, n, sigma_p, sigma_init, overlap);
              csv << row.to_csv() << "\n";
              csv.flush();
              if (row.status == "ok") {
                etot.push_back(row.e_total);
                er.push_back(row.e_r_med);
                et.push_back(row.e_t_med);
                en.push_back(row.e_n_med);
                ed.push_back(row.e_d_med);
                wall.push_back(row.wall_ms);
                iters.push_back(row.iterations);
                if (row.converged) ++converged;
                gap_max = std::max(gap_max, row.gap_max);
                rank_max = std::max(rank_max, row.rank_ratio_max);
              } else {
                ++failed;
              }
              result.rows.push_back(std::move(row));
            }
            cells_json << (first_cell ? "" : ",") << "{\"m\":" << m << ",\"n\":" << n
                       << ",\"sigma_p\":" << format_double(sigma_p)
                       << ",\"sigma_init\":" << format_double(sigma_init)
                       << ",\"overlap\":" << format_double(overlap)
                       << ",\"trials\":" << config.trials << ",\"converged\":" << converged
                       << ",\"failed\":" << failed << ",\"e_total\":" << agg_json(aggregate(etot))
                       << ",\"e_R_med\":" << agg_json(aggregate(er))
                       << ",\"e_t_med\":" << agg_json(aggregate(et))
                       << ",\"e_n_med\":" << agg_json(aggregate(en))
                       << ",\"e_d_med\":" << agg_json(aggregate(ed))
                       << ",\"iterations_median\":" << format_double(median_of(iters))
                       << ",\"wall_ms_median\":" << format_double(median_of(wall))
                       << ",\"gap_max\":" << format_double(gap_max)
                       << ",\"rank_ratio_max\":" << format_double(rank_max) << "}";
            first_cell = false;
            ++cell_index;
          }

  summary_out << "{\"method\":\"" << config.method << "\",\"seed\":" << config.seed
              << ",\"cells\":[" << cells_json.str() << "]}\n";
  return result;
}

BenchResult run_bench(const BenchConfig& config) {
  BenchResult out;
  RunConfig rc;
  rc.method = config.method;
  rc.trials = config.trials;
  rc.seed = config.seed;
  rc.init = InitMode::Perturbed;
  rc.points_per_obs = config.points_per_obs;
  rc.out_csv = "";

  auto run_cell = [&](int m, int n, int cell_index) {
    std::vector<double> walls;
    for (int trial = 0; trial < config.trials; ++trial) {
      const TrialRow row =
          run_trial(rc, cell_index, trial, m, n, 0.0, config.sigma_init, 1.0);
      if (row.status != "ok") throw std::runtime_error("bench trial failed: " + row.status);
      walls.push_back(row.wall_ms);
    }
    return median_of(walls);
  };

  auto fit_slope = [](const std::vector<BenchResult::Cell>& cells, bool vary_m) {
    // Least-squares slope of log(wall) against log(size).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(cells.size());
    for (const auto& c : cells) {
      const double x = std::log(static_cast<double>(vary_m ? c.m : c.n));
      const double y = std::log(std::max(c.median_wall_ms, 1e-9));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };

  int cell_index = 0;
  for (int v : config.values)
    out.m_sweep.push_back({v, config.fixed, run_cell(v, config.fixed, cell_index++)});
  for (int v : config.values)
    out.n_sweep.push_back({config.fixed, v, run_cell(config.fixed, v, cell_index++)});
  out.slope_m = fit_slope(out.m_sweep, true);
  out.slope_n = fit_slope(out.n_sweep, false);

  if (!config.out_json.empty()) {
    std::ofstream js(config.out_json);
    if (!js) throw std::runtime_error("cannot open " + config.out_json + " for writing");
    auto cells = [&](const std::vector<BenchResult::Cell>& sweep) {
      std::ostringstream os;
      for (std::size_t k = 0; k < sweep.size(); ++k)
        os << (k ? "," : "") << "{\"m\":" << sweep[k].m << ",\"n\":" << sweep[k].n
           << ",\"median_wall_ms\":" << format_double(sweep[k].median_wall_ms) << "}";
      return os.str();
    };
    js << "{\"method\":\"" << config.method << "\",\"m_sweep\":[" << cells(out.m_sweep)
       << "],\"n_sweep\":[" << cells(out.n_sweep)
       << "],\"slope_m\":" << format_double(out.slope_m)
       << ",\"slope_n\":" << format_double(out.slope_n) << "}\n";
  }
  return out;
}

}  // namespace pa
