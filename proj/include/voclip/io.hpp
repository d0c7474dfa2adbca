#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "voclip/adam.hpp"
#include "voclip/clip.hpp"
#include "voclip/kitti_eval.hpp"
#include "voclip/loss.hpp"
#include "voclip/model_config.hpp"
#include "voclip/se3.hpp"
#include "voclip/tensor.hpp"

namespace voclip {

// ---- pose files (12 reals per line, row-major 3x4 [R | t]) ----

Trajectory read_kitti_poses(const std::string& path);
void write_kitti_poses(const Trajectory& traj, const std::string& path);

// ---- synthetic fixtures ----

struct SyntheticSpec {
  enum class Shape { Line, Circle, FigureEight };
  Shape shape = Shape::Circle;
  int n_frames = 67;
  double step_m = 1.0;      // arc step per frame
  double curvature = 0.05;  // turn rate, rad per meter
  double noise_std = 0.0;   // std of the per-motion perturbation
  std::uint64_t seed = 1;

  void validate() const;
};

SyntheticSpec::Shape synth_shape_from_string(const std::string& s);
std::string to_string(SyntheticSpec::Shape s);

struct SyntheticResult {
  Trajectory gt;
  Trajectory noisy;
};

/// Ground-truth trajectory of the requested shape plus a drifting copy whose
/// relative motions carry zero-mean Gaussian noise before re-integration.
SyntheticResult generate_synthetic(const SyntheticSpec& spec);

/// Procedural frames whose texture shifts with the pose, so consecutive
/// frames encode the motion. Pixel values are in [0, 1].
std::vector<Tensor<double>> render_frames(const Trajectory& traj, const ModelConfig& cfg, std::uint64_t seed);
std::vector<Tensor<double>> generate_synthetic_frames(const SyntheticSpec& spec, const ModelConfig& cfg);

// ---- run configuration ----

struct RunConfig {
  ModelConfig model;  // toy defaults
  SamplerConfig sampler;
  LossConfig loss;
  AdamConfig optim;
  int train_steps = 200;
  std::uint64_t seed = 42;
  SyntheticSpec synth;
  std::string gt_poses_path;  // optional, must exist when set
  std::vector<std::string> train_sequences{"00", "02", "08", "09"};
  std::vector<std::string> test_sequences{"01", "03", "04", "05", "06", "07", "10"};

  void validate() const;
};

/// Strict parser: unknown keys, bad values and train/test overlaps are
/// rejected with the offending key in the message. An empty file yields the
/// defaults above.
RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig read_config(const std::string& path);
std::string config_to_text(const RunConfig& cfg);
void write_config(const RunConfig& cfg, const std::string& path);

// ---- CSV ----

void export_trajectory_csv(const Trajectory& traj, const std::string& path);
void export_report_csv(const EvalReport& report, const std::string& path);
std::vector<Vec3> read_trajectory_positions_csv(const std::string& path);

// ---- motion estimate files (used by the losscheck command) ----

struct MotionsFile {
  int n_frames = 0;
  std::vector<std::pair<std::int64_t, Motions>> clips;  // (start frame, rows)
};

MotionsFile read_motions_file(const std::string& path);
void write_motions_file(const MotionsFile& mf, const std::string& path);

// ---- shared helpers ----

/// Writes to a temp file in the same directory, then renames over path, so
/// failures never leave partial output behind.
void atomic_write(const std::string& path, const std::string& content);

std::string read_text_file(const std::string& path);

}  // namespace voclip
