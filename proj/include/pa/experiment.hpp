#pragma once

#include <string>

#include "pa/gpp_solver.hpp"
#include "pa/metrics.hpp"
#include "pa/sim.hpp"

namespace pa {

enum class InitMode { Random, Perturbed };

struct RunConfig {
  std::string method = "globalpointer";  // or "globalpointer-pp"
  int trials = 1;
  std::uint64_t seed = 0;
  InitMode init = InitMode::Random;
  std::vector<int> m_grid{10};
  std::vector<int> n_grid{10};
  std::vector<double> sigma_p_grid{0.0};
  std::vector<double> sigma_init_grid{0.0};
  std::vector<double> overlap_grid{1.0};
  double box_half_extent = 25.0;
  int points_per_obs = 100;
  GpConfig gp;
  GppConfig gpp;
  std::string out_csv = "results.csv";
  std::string out_json = "summary.json";

  void validate() const;
};

RunConfig load_run_config(const std::string& path);

inline constexpr const char* kCsvHeader =
    "method,m,n,sigma_p,sigma_init,overlap,trial,seed,iterations,converged,"
    "e_total,e_R_med,e_t_med,e_n_med,e_d_med,wall_ms,gap_max,rank_ratio_max,status";

struct TrialRow {
  std::string method;
  int m = 0, n = 0;
  double sigma_p = 0.0, sigma_init = 0.0, overlap = 1.0;
  int trial = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;
  double e_total = 0.0, e_r_med = 0.0, e_t_med = 0.0, e_n_med = 0.0, e_d_med = 0.0;
  double wall_ms = 0.0, gap_max = 0.0, rank_ratio_max = 0.0;
  std::string status = "ok";

  std::string to_csv() const;
};

struct ExperimentResult {
  std::vector<TrialRow> rows;
};

// One scene + solve + metrics; shared by the sweep, the bench, and the
// acceptance suite.
TrialRow run_trial(const RunConfig& config, int cell_index, int trial, int m, int n,
                   double sigma_p, double sigma_init, double overlap);

ExperimentResult run_experiment(const RunConfig& config);

struct BenchConfig {
  std::vector<int> values{5, 10, 20, 40};
  int fixed = 10;
  int trials = 10;
  std::uint64_t seed = 0;
  std::string method = "globalpointer";
  double sigma_init = 0.01;
  int points_per_obs = 100;
  std::string out_json;
};

struct BenchResult {
  struct Cell {
    int m = 0, n = 0;
    double median_wall_ms = 0.0;
  };
  std::vector<Cell> m_sweep, n_sweep;
  double slope_m = 0.0;  // log-log slope of median wall time vs m (n fixed)
  double slope_n = 0.0;
};

BenchResult run_bench(const BenchConfig& config);

}  // namespace pa
