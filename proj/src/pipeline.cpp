#include "pdlvo/pipeline.h"

#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "pdlvo/kv_file.h"

namespace pdlvo {

void PipelineConfig::validate() const {
  tracking.validate();
  window.validate();
  if (window_size < KeyframeWindow::kMinCapacity) {
    throw Error(ErrorCode::ParseError, "window size must be at least " +
                                           std::to_string(KeyframeWindow::kMinCapacity));
  }
  if (keypoints.block_size < 1 || keypoints.max_points < 1 || depth_cell_size < 1) {
    throw Error(ErrorCode::ParseError, "keypoint block size, point cap and depth cell size must be positive");
  }
}

namespace {

using Setter = std::function<void(const KvSection&, const std::string&)>;

template <typename T>
Setter num(T& field) {
  return [&field](const KvSection& s, const std::string& k) {
    if constexpr (std::is_same_v<T, int>) {
      field = s.get_int(k);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      field = static_cast<std::uint64_t>(s.get_int(k));
    } else if constexpr (std::is_same_v<T, bool>) {
      field = s.get_bool(k);
    } else {
      field = s.get_double(k);
    }
  };
}

void apply(const KvSection& sec, const std::map<std::string, Setter>& setters) {
  for (const auto& [key, value] : sec.entries) {
    auto it = setters.find(key);
    if (it == setters.end()) {
      throw Error(ErrorCode::ParseError, "section [" + sec.name + "]: unknown key '" + key + "'");
    }
    it->second(sec, key);
  }
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& text, const std::string& origin) {
  PipelineConfig cfg;
  const KvFile file = parse_kv(text, origin);
  TrackingConfig& tr = cfg.tracking;
  WindowConfig& win = cfg.window;
  KeypointConfig& kp = cfg.keypoints;
  SequenceSpec& sim = cfg.simulation;

  const std::map<std::string, std::map<std::string, Setter>> sections{
      {"tracking",
       {{"huber", num(tr.huber)},
        {"pyramid_levels", num(tr.pyramid_levels)},
        {"max_iterations", num(tr.max_iterations)},
        {"convergence_step", num(tr.convergence_step)},
        {"min_valid", num(tr.min_valid)},
        {"cross_view", num(tr.cross_view)},
        {"reference_gradient", num(tr.reference_gradient)},
        {"views", [&tr](const KvSection& s, const std::string& k) {
           tr.active_views.clear();
           for (double v : s.get_doubles(k)) tr.active_views.push_back(static_cast<int>(v));
         }}}},
      {"window",
       {{"size", num(cfg.window_size)},
        {"max_iterations", num(win.max_iterations)},
        {"flow_threshold", num(win.flow_threshold)},
        {"min_ratio", num(win.min_ratio)},
        {"reference_gradient", num(win.reference_gradient)}}},
      {"keypoints",
       {{"block_size", num(kp.block_size)},
        {"gradient_offset", num(kp.gradient_offset)},
        {"depth_radius", num(kp.depth_radius)},
        {"max_points", num(kp.max_points)},
        {"median_prefilter", num(kp.median_prefilter)},
        {"depth_consistency", num(kp.depth_consistency)},
        {"support_radius", num(kp.support_radius)},
        {"depth_cell_size", num(cfg.depth_cell_size)}}},
      {"simulation",
       {{"seed", num(sim.seed)},
        {"frames", num(sim.frames)},
        {"trajectory", [&sim](const KvSection& s, const std::string& k) {
           auto kind = parse_trajectory_kind(s.get(k));
           if (!kind) throw Error(ErrorCode::ParseError, "unknown trajectory kind '" + s.get(k) + "'");
           sim.kind = *kind;
         }},
        {"step", num(sim.trajectory.step)},
        {"turn_deg", num(sim.trajectory.turn_deg)},
        {"ramp_steps", num(sim.trajectory.ramp_steps)},
        {"landmarks", num(sim.sim.landmarks)},
        {"texture_contrast", num(sim.sim.texture_contrast)},
        {"image_noise", num(sim.sim.image_noise)},
        {"range_noise", num(sim.sim.range_noise)},
        {"max_range", num(sim.sim.max_range)},
        {"lidar_channels", num(sim.sim.lidar_channels)},
        {"lidar_columns", num(sim.sim.lidar_columns)},
        {"lidar_vfov_deg", num(sim.sim.lidar_vfov_deg)},
        {"lidar_hfov_deg", num(sim.sim.lidar_hfov_deg)},
        {"frame_interval", num(sim.sim.frame_interval)},
        {"supersample", num(sim.sim.supersample)},
        {"blank_view", num(sim.blank_view)},
        {"blank_begin", num(sim.blank_begin)},
        {"blank_count", num(sim.blank_count)},
        {"salt_pepper", num(sim.salt_pepper)}}},
  };

  for (const auto& sec : file.sections) {
    if (sec.name.empty() && sec.entries.empty()) continue;
    auto it = sections.find(sec.name);
    if (it == sections.end()) {
      throw Error(ErrorCode::ParseError, origin + ": unknown section [" + sec.name + "]");
    }
    apply(sec, it->second);
  }
  win.huber = tr.huber;
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pipeline_config(ss.str(), path.string());
}

Pose transform_integration(const Pose& world_from_kf, const Pose& cur_from_kf) {
  return world_from_kf * cur_from_kf.inverse();
}

Keyframe build_keyframe(const FrameInput& in, Frame frame, const Pose& world_from_body,
                        const RigCalibration& rig, const PipelineConfig& cfg) {
  Keyframe kf{std::move(frame), world_from_body, {}, {}};
  for (int v : cfg.tracking.active_views) {
    const SparseDepthMap depth =
        build_sparse_depth(in.scan, rig, v, rig.body_from_lidar(), cfg.depth_cell_size);
    kf.keypoints[static_cast<size_t>(v - 1)] = select_keypoints(kf.frame.image(v), depth, cfg.keypoints);
  }
  build_reference(kf);
  return kf;
}

Keyframe build_keyframe(const FrameInput& in, const Pose& world_from_body, const RigCalibration& rig,
                        const PipelineConfig& cfg) {
  return build_keyframe(in, make_frame(in.id, in.timestamp, in.images, cfg.tracking.pyramid_levels),
                        world_from_body, rig, cfg);
}

OdometryResult run_odometry(const RigCalibration& rig, size_t frame_count, const FrameLoader& load,
                            const PipelineConfig& cfg) {
  cfg.validate();
  if (frame_count == 0) throw Error(ErrorCode::EmptyDataset, "dataset has no frames");
  WindowConfig wcfg = cfg.window;
  wcfg.huber = cfg.tracking.huber;

  OdometryResult result;
  KeyframeWindow window(cfg.window_size);

  // Frame 0 defines the world frame.
  {
    FrameInput in = load(0);
    Frame frame = make_frame(in.id, in.timestamp, in.images, cfg.tracking.pyramid_levels);
    window.add(build_keyframe(in, std::move(frame), Pose::identity(), rig, cfg));
    result.trajectory.push_back(in.timestamp, Pose::identity());
    result.keyframe_ids.push_back(in.id);
  }

  Pose prev_prev = Pose::identity();
  Pose prev = Pose::identity();
  for (size_t i = 1; i < frame_count; ++i) {
    FrameInput in = load(i);
    Frame frame = make_frame(in.id, in.timestamp, in.images, cfg.tracking.pyramid_levels);
    const Keyframe& kf = window.newest();

    // Constant-velocity prediction in the world, expressed against the keyframe.
    const Pose predicted = i >= 2 ? prev * (prev_prev.inverse() * prev) : prev;
    const Pose init = predicted.inverse() * kf.world_from_body;

    TrackResult tr;
    try {
      tr = track_frame(kf, frame, init, rig, cfg.tracking);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientResiduals && e.code() != ErrorCode::Diverged) throw;
      result.lost = true;
      result.lost_reason = e.code();
      result.lost_frame = in.id;
      result.message = "tracking lost at frame " + std::to_string(in.id) + ": " + e.what();
      return result;
    }
    for (size_t j = 0; j < kNumViews; ++j) {
      for (size_t l = 0; l < kNumViews; ++l) result.pair_usage[j][l] += tr.pair_counts[j][l];
    }

    Pose world_from_cur = transform_integration(kf.world_from_body, tr.cur_from_kf).renormalized();
    if (keyframe_decision(tr, wcfg)) {
      window.add(build_keyframe(in, std::move(frame), world_from_cur, rig, cfg));
      result.keyframe_ids.push_back(in.id);
      optimize_window(window, rig, wcfg);
      world_from_cur = window.newest().world_from_body;
      if (window.full()) marginalize_oldest(window, rig, wcfg);
    }
    result.trajectory.push_back(in.timestamp, world_from_cur);
    prev_prev = prev;
    prev = world_from_cur;
  }
  return result;
}

OdometryResult run_odometry(const DatasetStream& stream, const PipelineConfig& cfg) {
  return run_odometry(stream.rig, stream.records.size(),
                      [&stream](size_t i) { return load_record(stream.records[i]); }, cfg);
}

OdometryResult run_odometry(const SyntheticSequence& seq, const PipelineConfig& cfg) {
  return run_odometry(seq.rig(), seq.size(), [&seq](size_t i) { return seq.frame(i); }, cfg);
}

}  // namespace pdlvo
