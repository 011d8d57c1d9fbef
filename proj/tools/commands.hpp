#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace posepoison::cli {

struct GenOptions {
  std::string mesh_path;
  std::string object_id;  // defaults to the mesh stem
  int count = 0;
  std::string out;
  std::uint64_t seed = 0;
  bool force = false;
  int threads = 0;
  int width = 640;
  int height = 480;
  std::vector<double> intrinsics;  // fx fy cx cy; empty = derived from size
  std::string background = "flat";
  std::vector<int> bg_color;           // r g b
  double checker_z = 2.5;
  std::vector<std::string> clutter_meshes;
  std::vector<double> pose_box;        // x0 y0 z0 x1 y1 z1
  int keypoints = 8;
};

struct PoisonOptions {
  std::string in;
  std::string out;
  double rate = 0.0;
  std::uint64_t seed = 0;
  bool force = false;
  int threads = 0;
  std::string strategy = "e2e";
  std::string trigger_mesh;
  std::string trigger_id;
  std::vector<double> delta_trans;  // 3
  std::vector<double> delta_rot;    // 3, rotation vector in degrees
  std::string offset_frame = "camera";
  double min_visible = 0.25;
  std::string keypoint_mode = "reproject";
  std::vector<double> const_px;       // flat du dv pairs
  std::vector<double> trigger_pose;   // tx ty tz rx ry rz (deg), fixed placement
  std::string annotations;            // default <in>/annotations.jsonl
  std::string log_path;               // default <out>/poison_log.jsonl
};

struct SolveOptions {
  std::string dataset;
  std::string annotations;  // default <dataset>/annotations.jsonl
  std::string out;
  std::uint64_t seed = 0;
  bool force = false;
  int threads = 0;
  std::string route = "direct";
  int ransac_hypotheses = 128;
  double inlier_cos = 0.99;
  int gn_iters = 30;
  double gn_tol = 1e-10;
};

struct EvalOptions {
  std::string dataset;
  std::string predictions;
  std::string out;
  std::uint64_t seed = 0;
  bool force = false;
  int points = 2000;
  double th_add_frac = 0.1;
  double th_trans = 0.05;
  double th_rot_deg = 5.0;
  double th_px = 5.0;
  bool per_sample = false;
};

struct DefenseOptions {
  std::string dataset;
  std::string out;
  std::uint64_t seed = 0;
  bool force = false;
  int points = 2000;
  double th_add_frac = 0.1;
  double th_trans = 0.05;
  double th_rot_deg = 5.0;
  double th_px = 5.0;
  std::vector<std::string> runs;  // "ratio=predictions_path"
  std::string simulate;           // "ratio:drift,ratio:drift,..."
};

int run_gen(const GenOptions& opt);
int run_poison(const PoisonOptions& opt);
int run_solve(const SolveOptions& opt);
int run_eval(const EvalOptions& opt);
int run_defense(const DefenseOptions& opt);

}  // namespace posepoison::cli
