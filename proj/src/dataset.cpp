#include "pa/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace pa {

namespace {

using nlohmann::json;

std::string fmt_pose(const Pose& p) {
  std::ostringstream os;
  os << "{\"r\":[";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      os << format_double(p.rotation(r, c)) << ((r == 2 && c == 2) ? "" : ",");
  os << "],\"t\":[" << format_double(p.translation[0]) << "," << format_double(p.translation[1])
     << "," << format_double(p.translation[2]) << "]}";
  return os.str();
}

std::string fmt_plane(const Plane& p) {
  std::ostringstream os;
  os << "{\"n\":[" << format_double(p.normal[0]) << "," << format_double(p.normal[1]) << ","
     << format_double(p.normal[2]) << "],\"d\":" << format_double(p.d) << "}";
  return os.str();
}

Pose parse_pose(const json& j) {
  Pose p;
  const auto& r = j.at("r");
  if (r.size() != 9) throw std::runtime_error("pose rotation needs 9 entries");
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) p.rotation(row, col) = r[3 * row + col].get<double>();
  const auto& t = j.at("t");
  if (t.size() != 3) throw std::runtime_error("pose translation needs 3 entries");
  for (int k = 0; k < 3; ++k) p.translation[k] = t[k].get<double>();
  return p;
}

Plane parse_plane(const json& j) {
  Plane p;
  const auto& n = j.at("n");
  if (n.size() != 3) throw std::runtime_error("plane normal needs 3 entries");
  for (int k = 0; k < 3; ++k) p.normal[k] = n[k].get<double>();
  p.d = j.at("d").get<double>();
  return p;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_dataset(const std::string& path, const Scene& scene, bool include_ground_truth) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "{\"type\":\"header\",\"version\":1,\"m\":" << scene.spec.m
      << ",\"n\":" << scene.spec.n << ",\"units\":\"meters\"}\n";

  std::vector<std::vector<const LabeledPoint*>> by_frame(scene.spec.m);
  for (const auto& pt : scene.points) by_frame[pt.frame_id].push_back(&pt);
  for (int i = 0; i < scene.spec.m; ++i) {
    out << "{\"type\":\"frame\",\"frame\":" << i << ",\"points\":[";
    for (std::size_t k = 0; k < by_frame[i].size(); ++k) {
      const LabeledPoint& pt = *by_frame[i][k];
      out << (k ? "," : "") << "[" << pt.plane_id << "," << format_double(pt.p_local[0]) << ","
          << format_double(pt.p_local[1]) << "," << format_double(pt.p_local[2]) << "]";
    }
    out << "]}\n";
  }

  if (include_ground_truth && scene.has_ground_truth) {
    out << "{\"type\":\"ground_truth\",\"poses\":[";
    for (std::size_t i = 0; i < scene.gt_poses.size(); ++i)
      out << (i ? "," : "") << fmt_pose(scene.gt_poses[i]);
    out << "],\"planes\":[";
    for (std::size_t j = 0; j < scene.gt_planes.size(); ++j)
      out << (j ? "," : "") << fmt_plane(scene.gt_planes[j]);
    out << "]}\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

Scene read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  Scene scene;
  scene.has_ground_truth = false;
  bool have_header = false;
  std::vector<bool> frame_seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string type = j.value("type", "");
    if (type == "header") {
      if (have_header) throw std::runtime_error("line " + std::to_string(line_no) + ": duplicate header");
      const int version = j.at("version").get<int>();
      if (version != 1)
        throw std::runtime_error("line " + std::to_string(line_no) + ": unknown version " +
                                 std::to_string(version));
      scene.spec.m = j.at("m").get<int>();
      scene.spec.n = j.at("n").get<int>();
      if (scene.spec.m < 1 || scene.spec.n < 1)
        throw std::runtime_error("line " + std::to_string(line_no) + ": invalid m or n");
      frame_seen.assign(scene.spec.m, false);
      have_header = true;
    } else if (type == "frame") {
      if (!have_header)
        throw std::runtime_error("line " + std::to_string(line_no) + ": frame before header");
      const int i = j.at("frame").get<int>();
      if (i < 0 || i >= scene.spec.m)
        throw std::runtime_error("line " + std::to_string(line_no) + ": frame " +
                                 std::to_string(i) + " out of range");
      if (frame_seen[i])
        throw std::runtime_error("line " + std::to_string(line_no) + ": duplicate frame " +
                                 std::to_string(i));
      frame_seen[i] = true;
      for (const auto& row : j.at("points")) {
        if (row.size() != 4)
          throw std::runtime_error("line " + std::to_string(line_no) + ": point row needs 4 entries");
        LabeledPoint pt;
        pt.frame_id = i;
        pt.plane_id = row[0].get<int>();
        if (pt.plane_id < 0 || pt.plane_id >= scene.spec.n)
          throw std::runtime_error("line " + std::to_string(line_no) + ": plane_id " +
                                   std::to_string(pt.plane_id) + " out of range (n=" +
                                   std::to_string(scene.spec.n) + ")");
        for (int k = 0; k < 3; ++k) {
          pt.p_local[k] = row[k + 1].get<double>();
          if (!std::isfinite(pt.p_local[k]))
            throw std::runtime_error("line " + std::to_string(line_no) + ": non-finite coordinate");
        }
        scene.points.push_back(pt);
      }
    } else if (type == "ground_truth") {
      if (!have_header)
        throw std::runtime_error("line " + std::to_string(line_no) + ": ground truth before header");
      for (const auto& pj : j.at("poses")) scene.gt_poses.push_back(parse_pose(pj));
      for (const auto& pj : j.at("planes")) scene.gt_planes.push_back(parse_plane(pj));
      if (static_cast<int>(scene.gt_poses.size()) != scene.spec.m ||
          static_cast<int>(scene.gt_planes.size()) != scene.spec.n)
        throw std::runtime_error("line " + std::to_string(line_no) + ": ground truth size mismatch");
      scene.has_ground_truth = true;
    } else {
      throw std::runtime_error("line " + std::to_string(line_no) + ": unknown record type");
    }
  }
  if (!have_header) throw std::runtime_error("no header record");
  for (int i = 0; i < scene.spec.m; ++i)
    if (!frame_seen[i]) throw std::runtime_error("no frames");
  scene.graph = ObservationGraph::from_points(scene.spec.m, scene.spec.n, scene.points);
  return scene;
}

void write_report_json(const std::string& path, const std::string& method,
                       const SolveReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "{\"method\":\"" << method << "\",\"converged\":" << (report.converged ? "true" : "false")
      << ",\"iterations\":" << report.iterations
      << ",\"gap_max\":" << format_double(report.gap_max)
      << ",\"rank_ratio_max\":" << format_double(report.rank_ratio_max)
      << ",\"sub_failures\":" << report.sub_failures
      << ",\"wall_ms\":" << format_double(report.wall.total_ms) << ",\"objective_trace\":[";
  for (std::size_t k = 0; k < report.objective_trace.size(); ++k)
    out << (k ? "," : "") << format_double(report.objective_trace[k]);
  out << "],\"point_objective_trace\":[";
  for (std::size_t k = 0; k < report.point_objective_trace.size(); ++k)
    out << (k ? "," : "") << format_double(report.point_objective_trace[k]);
  out << "],\"poses\":[";
  for (std::size_t i = 0; i < report.poses.size(); ++i) out << (i ? "," : "") << fmt_pose(report.poses[i]);
  out << "],\"planes\":[";
  for (std::size_t j = 0; j < report.planes.size(); ++j)
    out << (j ? "," : "") << fmt_plane(report.planes[j]);
  out << "]}\n";
}

Estimates read_estimates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  Estimates est;
  est.method = j.value("method", "");
  for (const auto& pj : j.at("poses")) est.poses.push_back(parse_pose(pj));
  for (const auto& pj : j.at("planes")) est.planes.push_back(parse_plane(pj));
  return est;
}

}  // namespace pa
