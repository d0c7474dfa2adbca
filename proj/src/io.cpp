#include "voclip/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "voclip/rng.hpp"

namespace voclip {

namespace fs = std::filesystem;

// ---- shared helpers ----

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const std::string& path, const std::string& content) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
  }
  fs::rename(tmp, target);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      const std::string t = trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur += c;
    }
  }
  const std::string t = trim(cur);
  if (!t.empty()) out.push_back(t);
  return out;
}

double parse_double_tok(const std::string& tok, const std::string& where) {
  double v = 0.0;
  const char* b = tok.data();
  const char* e = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) {
    throw std::runtime_error(where + ": expected a number, got '" + tok + "'");
  }
  return v;
}

std::int64_t parse_int_tok(const std::string& tok, const std::string& where) {
  std::int64_t v = 0;
  const char* b = tok.data();
  const char* e = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) {
    throw std::runtime_error(where + ": expected an integer, got '" + tok + "'");
  }
  return v;
}

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

// ---- pose files ----

Trajectory read_kitti_poses(const std::string& path) {
  const std::string text = read_text_file(path);
  Trajectory traj;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::vector<std::string> toks = split_ws(t);
    if (toks.size() != 12) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 12 values per pose line, got " +
                               std::to_string(toks.size()));
    }
    double v[12];
    for (int i = 0; i < 12; ++i) {
      v[i] = parse_double_tok(toks[static_cast<std::size_t>(i)], path + ":" + std::to_string(line_no));
    }
    Mat3 r{{{v[0], v[1], v[2]}, {v[4], v[5], v[6]}, {v[8], v[9], v[10]}}};
    if (orthonormality_error(r) > 1e-3 || mat3_det(r) < 0.0) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": rotation block is not orthonormal");
    }
    TransformSE3 pose;
    pose.rotation = RotationMatrix::unchecked(reorthonormalize(r));
    pose.translation = {v[3], v[7], v[11]};
    traj.poses.push_back(pose);
  }
  if (traj.poses.empty()) throw std::runtime_error(path + ": empty pose file");
  return traj;
}

void write_kitti_poses(const Trajectory& traj, const std::string& path) {
  std::string out;
  out.reserve(traj.size() * 240);
  for (const auto& p : traj.poses) {
    const Mat3& r = p.rotation.m;
    const Vec3& t = p.translation;
    for (int i = 0; i < 3; ++i) {
      if (i) out += ' ';
      out += fmt_g17(r[i][0]) + ' ' + fmt_g17(r[i][1]) + ' ' + fmt_g17(r[i][2]) + ' ' + fmt_g17(t[i]);
    }
    out += '\n';
  }
  atomic_write(path, out);
}

// ---- synthetic fixtures ----

void SyntheticSpec::validate() const {
  if (n_frames < 2) throw std::invalid_argument("synthetic spec: n_frames must be >= 2");
  if (!(step_m > 0.0)) throw std::invalid_argument("synthetic spec: step must be positive");
  if (noise_std < 0.0) throw std::invalid_argument("synthetic spec: noise_std must be >= 0");
}

SyntheticSpec::Shape synth_shape_from_string(const std::string& s) {
  if (s == "line") return SyntheticSpec::Shape::Line;
  if (s == "circle") return SyntheticSpec::Shape::Circle;
  if (s == "figure-eight") return SyntheticSpec::Shape::FigureEight;
  throw std::invalid_argument("unknown synthetic shape '" + s + "' (expected line|circle|figure-eight)");
}

std::string to_string(SyntheticSpec::Shape s) {
  switch (s) {
    case SyntheticSpec::Shape::Line: return "line";
    case SyntheticSpec::Shape::Circle: return "circle";
    case SyntheticSpec::Shape::FigureEight: return "figure-eight";
  }
  return "line";
}

SyntheticResult generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int n_steps = spec.n_frames - 1;
  const double theta = spec.curvature * spec.step_m;  // yaw per step

  std::vector<Pose6DoF> motions(static_cast<std::size_t>(n_steps));
  for (int k = 0; k < n_steps; ++k) {
    Pose6DoF m;
    m.translation = {0.0, 0.0, spec.step_m};
    switch (spec.shape) {
      case SyntheticSpec::Shape::Line: break;
      case SyntheticSpec::Shape::Circle:
        m.angles[1] = theta;
        break;
      case SyntheticSpec::Shape::FigureEight:
        m.angles[1] = (k < n_steps / 2) ? theta : -theta;
        break;
    }
    motions[static_cast<std::size_t>(k)] = m;
  }

  SyntheticResult out;
  out.gt = relative_to_absolute(motions);

  Rng rng(spec.seed);
  std::vector<Pose6DoF> noisy = motions;
  for (auto& m : noisy) {
    for (int d = 0; d < 3; ++d) m.angles[d] += spec.noise_std * rng.normal();
    for (int d = 0; d < 3; ++d) m.translation[d] += spec.noise_std * rng.normal();
  }
  out.noisy = relative_to_absolute(noisy);
  return out;
}

std::vector<Tensor<double>> render_frames(const Trajectory& traj, const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int C = cfg.channels, H = cfg.height, W = cfg.width, P = cfg.patch;

  // three seeded phases per channel, drawn in channel order
  Rng rng(seed);
  std::vector<std::array<double, 3>> phases(static_cast<std::size_t>(C));
  for (auto& ph : phases) {
    for (double& p : ph) p = rng.uniform(0.0, 2.0 * M_PI);
  }
  const double fu1 = 1.0 / (3.7 * P), fv1 = 1.0 / (2.3 * P);
  const double fu2 = 1.0 / (1.3 * P);
  const double fv3 = 1.0 / (5.1 * P);
  const double yaw_gain_px = 32.0;

  std::vector<Tensor<double>> frames;
  frames.reserve(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const Vec3 pos = traj.position(t);
    const double yaw = matrix_to_euler(traj.poses[t].rotation)[1];
    const double du = P * pos[0] + yaw_gain_px * yaw;
    const double dv = P * pos[2];
    Tensor<double> frame({C, H, W});
    for (int c = 0; c < C; ++c) {
      const auto& ph = phases[static_cast<std::size_t>(c)];
      for (int v = 0; v < H; ++v) {
        const double vv = v + dv;
        for (int u = 0; u < W; ++u) {
          const double uu = u + du;
          const double val = 0.5 + 0.2 * std::sin(2.0 * M_PI * (fu1 * uu + fv1 * vv) + ph[0]) +
                             0.2 * std::sin(2.0 * M_PI * fu2 * uu + ph[1]) +
                             0.1 * std::sin(2.0 * M_PI * fv3 * vv + ph[2]);
          frame.data[static_cast<std::size_t>((c * H + v) * W + u)] = val;
        }
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<Tensor<double>> generate_synthetic_frames(const SyntheticSpec& spec, const ModelConfig& cfg) {
  return render_frames(generate_synthetic(spec).gt, cfg, spec.seed);
}

// ---- run configuration ----

void RunConfig::validate() const {
  model.validate();
  sampler.validate();
  loss.validate();
  synth.validate();
  if (optim.lr <= 0.0) throw std::invalid_argument("config: optim.lr must be positive");
  if (train_steps < 1) throw std::invalid_argument("config: train.steps must be >= 1");
  if (!gt_poses_path.empty() && !fs::exists(gt_poses_path)) {
    throw std::invalid_argument("config: data.gt_poses path '" + gt_poses_path + "' does not exist");
  }
  std::set<std::string> train(train_sequences.begin(), train_sequences.end());
  for (const auto& s : test_sequences) {
    if (train.count(s)) {
      throw std::invalid_argument("config: sequence '" + s + "' appears in both train and test lists");
    }
  }
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto sep = t.find_first_of("=:");
    if (sep == std::string::npos) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, sep));
    const std::string value = trim(t.substr(sep + 1));
    const std::string where = origin + ":" + std::to_string(line_no) + " (" + key + ")";
    auto as_int = [&](int lo) {
      const std::int64_t v = parse_int_tok(value, where);
      if (v < lo) throw std::runtime_error(where + ": value must be >= " + std::to_string(lo));
      return static_cast<int>(v);
    };

    if (key == "model.n_frames") cfg.model.n_frames = as_int(2);
    else if (key == "model.channels") cfg.model.channels = as_int(1);
    else if (key == "model.height") cfg.model.height = as_int(1);
    else if (key == "model.width") cfg.model.width = as_int(1);
    else if (key == "model.patch") cfg.model.patch = as_int(1);
    else if (key == "model.embed_dim") cfg.model.embed_dim = as_int(1);
    else if (key == "model.depth") cfg.model.depth = as_int(1);
    else if (key == "model.heads") cfg.model.heads = as_int(1);
    else if (key == "sampler.stride") cfg.sampler.stride = as_int(1);
    else if (key == "sampler.batch_size") cfg.sampler.batch_size = as_int(1);
    else if (key == "loss.alpha" || key == "alpha") {
      cfg.loss.alpha = parse_double_tok(value, where);
      if (cfg.loss.alpha < 0.0) throw std::runtime_error(where + ": alpha must be >= 0");
    } else if (key == "loss.mc_reduction") {
      if (value == "sum") cfg.loss.mc_reduction = McReduction::Sum;
      else if (value == "mean") cfg.loss.mc_reduction = McReduction::Mean;
      else throw std::runtime_error(where + ": expected sum|mean, got '" + value + "'");
    } else if (key == "optim.lr") {
      cfg.optim.lr = parse_double_tok(value, where);
      if (cfg.optim.lr <= 0.0) throw std::runtime_error(where + ": lr must be positive");
    } else if (key == "optim.beta1") cfg.optim.beta1 = parse_double_tok(value, where);
    else if (key == "optim.beta2") cfg.optim.beta2 = parse_double_tok(value, where);
    else if (key == "optim.eps") cfg.optim.eps = parse_double_tok(value, where);
    else if (key == "train.steps") cfg.train_steps = as_int(1);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int_tok(value, where));
    else if (key == "synth.shape") cfg.synth.shape = synth_shape_from_string(value);
    else if (key == "synth.frames") cfg.synth.n_frames = as_int(2);
    else if (key == "synth.step") {
      cfg.synth.step_m = parse_double_tok(value, where);
      if (cfg.synth.step_m <= 0.0) throw std::runtime_error(where + ": step must be positive");
    } else if (key == "synth.curvature") cfg.synth.curvature = parse_double_tok(value, where);
    else if (key == "synth.noise_std") {
      cfg.synth.noise_std = parse_double_tok(value, where);
      if (cfg.synth.noise_std < 0.0) throw std::runtime_error(where + ": noise_std must be >= 0");
    } else if (key == "synth.seed") cfg.synth.seed = static_cast<std::uint64_t>(parse_int_tok(value, where));
    else if (key == "data.gt_poses") cfg.gt_poses_path = value;
    else if (key == "data.train_sequences") cfg.train_sequences = split_commas(value);
    else if (key == "data.test_sequences") cfg.test_sequences = split_commas(value);
    else throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": unknown config key '" + key + "'");
  }
  cfg.sampler.n_frames = cfg.model.n_frames;
  cfg.sampler.shuffle_seed = cfg.seed;
  cfg.validate();
  return cfg;
}

RunConfig read_config(const std::string& path) {
  return parse_config_text(read_text_file(path), path);
}

std::string config_to_text(const RunConfig& cfg) {
  std::ostringstream o;
  o << "model.n_frames = " << cfg.model.n_frames << "\n";
  o << "model.channels = " << cfg.model.channels << "\n";
  o << "model.height = " << cfg.model.height << "\n";
  o << "model.width = " << cfg.model.width << "\n";
  o << "model.patch = " << cfg.model.patch << "\n";
  o << "model.embed_dim = " << cfg.model.embed_dim << "\n";
  o << "model.depth = " << cfg.model.depth << "\n";
  o << "model.heads = " << cfg.model.heads << "\n";
  o << "sampler.stride = " << cfg.sampler.stride << "\n";
  o << "sampler.batch_size = " << cfg.sampler.batch_size << "\n";
  o << "loss.alpha = " << fmt_g17(cfg.loss.alpha) << "\n";
  o << "loss.mc_reduction = " << (cfg.loss.mc_reduction == McReduction::Sum ? "sum" : "mean") << "\n";
  o << "optim.lr = " << fmt_g17(cfg.optim.lr) << "\n";
  o << "optim.beta1 = " << fmt_g17(cfg.optim.beta1) << "\n";
  o << "optim.beta2 = " << fmt_g17(cfg.optim.beta2) << "\n";
  o << "optim.eps = " << fmt_g17(cfg.optim.eps) << "\n";
  o << "train.steps = " << cfg.train_steps << "\n";
  o << "seed = " << cfg.seed << "\n";
  o << "synth.shape = " << to_string(cfg.synth.shape) << "\n";
  o << "synth.frames = " << cfg.synth.n_frames << "\n";
  o << "synth.step = " << fmt_g17(cfg.synth.step_m) << "\n";
  o << "synth.curvature = " << fmt_g17(cfg.synth.curvature) << "\n";
  o << "synth.noise_std = " << fmt_g17(cfg.synth.noise_std) << "\n";
  o << "synth.seed = " << cfg.synth.seed << "\n";
  if (!cfg.gt_poses_path.empty()) o << "data.gt_poses = " << cfg.gt_poses_path << "\n";
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += v[i];
    }
    return s;
  };
  o << "data.train_sequences = " << join(cfg.train_sequences) << "\n";
  o << "data.test_sequences = " << join(cfg.test_sequences) << "\n";
  return o.str();
}

void write_config(const RunConfig& cfg, const std::string& path) {
  atomic_write(path, config_to_text(cfg));
}

// ---- CSV ----

void export_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::string out = "frame,x,y,z\n";
  char buf[160];
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vec3 p = traj.position(i);
    std::snprintf(buf, sizeof(buf), "%zu,%.9f,%.9f,%.9f\n", i, p[0], p[1], p[2]);
    out += buf;
  }
  atomic_write(path, out);
}

void export_report_csv(const EvalReport& report, const std::string& path) {
  std::string out = "metric,value\n";
  char buf[128];
  auto row = [&](const char* k, double v) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f\n", k, v);
    out += buf;
  };
  row("t_err_percent", report.t_err_percent);
  row("r_err_deg_per_100m", report.r_err_deg_per_100m);
  row("ate_m", report.ate_m);
  row("rpe_trans_m", report.rpe_trans_m);
  row("rpe_rot_deg", report.rpe_rot_deg);
  out += "alignment," + to_string(report.alignment) + "\n";
  for (const auto& [len, c] : report.n_segments_per_length) {
    std::snprintf(buf, sizeof(buf), "n_segments_%dm,%lld\n", len, static_cast<long long>(c));
    out += buf;
  }
  atomic_write(path, out);
}

std::vector<Vec3> read_trajectory_positions_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  std::vector<Vec3> out;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (line_no == 1) {
      if (t != "frame,x,y,z") throw std::runtime_error(path + ":1: expected header 'frame,x,y,z'");
      continue;
    }
    const std::vector<std::string> cells = split_commas(t);
    if (cells.size() != 4) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 4 columns");
    }
    Vec3 p;
    for (int d = 0; d < 3; ++d) {
      p[static_cast<std::size_t>(d)] =
          parse_double_tok(cells[static_cast<std::size_t>(d + 1)], path + ":" + std::to_string(line_no));
    }
    out.push_back(p);
  }
  return out;
}

// ---- motion estimate files ----

MotionsFile read_motions_file(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  MotionsFile mf;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const std::vector<std::string> toks = split_ws(t);
    if (!saw_header) {
      if (toks.size() != 2 || toks[0] != "n_frames") {
        throw std::runtime_error(where + ": expected 'n_frames <N>' header");
      }
      mf.n_frames = static_cast<int>(parse_int_tok(toks[1], where));
      if (mf.n_frames < 2) throw std::runtime_error(where + ": n_frames must be >= 2");
      saw_header = true;
      continue;
    }
    if (toks[0] == "clip") {
      if (toks.size() != 2) throw std::runtime_error(where + ": expected 'clip <start_frame>'");
      mf.clips.emplace_back(parse_int_tok(toks[1], where), Motions{});
      continue;
    }
    if (mf.clips.empty()) throw std::runtime_error(where + ": motion row before any 'clip' line");
    if (toks.size() != 6) throw std::runtime_error(where + ": expected 6 values per motion row, got " + std::to_string(toks.size()));
    Vec6 row;
    for (int d = 0; d < 6; ++d) row[static_cast<std::size_t>(d)] = parse_double_tok(toks[static_cast<std::size_t>(d)], where);
    if (static_cast<int>(mf.clips.back().second.size()) >= mf.n_frames - 1) {
      throw std::runtime_error(where + ": clip has more than n_frames-1 motion rows");
    }
    mf.clips.back().second.push_back(row);
  }
  if (!saw_header) throw std::runtime_error(path + ": missing 'n_frames' header");
  for (std::size_t c = 0; c < mf.clips.size(); ++c) {
    if (static_cast<int>(mf.clips[c].second.size()) != mf.n_frames - 1) {
      throw std::runtime_error(path + ": clip " + std::to_string(c) + " has " +
                               std::to_string(mf.clips[c].second.size()) + " rows, expected " +
                               std::to_string(mf.n_frames - 1));
    }
  }
  return mf;
}

void write_motions_file(const MotionsFile& mf, const std::string& path) {
  std::ostringstream o;
  o << "n_frames " << mf.n_frames << "\n";
  for (const auto& [start, rows] : mf.clips) {
    o << "clip " << start << "\n";
    for (const Vec6& r : rows) {
      for (int d = 0; d < 6; ++d) {
        if (d) o << ' ';
        o << fmt_g17(r[static_cast<std::size_t>(d)]);
      }
      o << "\n";
    }
  }
  atomic_write(path, o.str());
}

}  // namespace voclip
