#pragma once

#include <string>

#include "pa/gp_solver.hpp"
#include "pa/sim.hpp"

namespace pa {

// Line-delimited JSON dataset: one header record, one record per frame with
// [plane_id, x, y, z] point rows in local coordinates, and an optional
// ground-truth record. Doubles are serialized with 17 significant digits so
// write-then-read reproduces the in-memory values exactly.
void write_dataset(const std::string& path, const Scene& scene, bool include_ground_truth = true);
Scene read_dataset(const std::string& path);

struct Estimates {
  std::string method;
  std::vector<Pose> poses;
  std::vector<Plane> planes;
};

// Solve output: estimates plus the convergence report.
void write_report_json(const std::string& path, const std::string& method,
                       const SolveReport& report);
Estimates read_estimates(const std::string& path);

std::string format_double(double v);  // %.17g

}  // namespace pa
