#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pdlvo/association.h"
#include "pdlvo/image.h"
#include "pdlvo/rig.h"

namespace pdlvo {

// On-disk layout:
//
//   DIR/calib.txt            rig calibration (see rig.h)
//   DIR/index.txt            "frame <id> <t>" and "scan <id> <t>" lines
//   DIR/frames/<id>_<v>.pgm  one 8-bit PGM per view, id zero-padded to 6
//   DIR/scans/<id>.xyz       ASCII points in the LiDAR frame
//   DIR/groundtruth.txt      optional, written by the simulator
//
// A frame uses the scan whose timestamp is nearest, within 0.02 s.
inline constexpr double kScanAssociationTolerance = 0.02;

std::string frame_file_name(std::int64_t id, int view);
std::string scan_file_name(std::int64_t id);

struct DatasetRecord {
  std::int64_t id = 0;
  double timestamp = 0.0;
  std::array<std::filesystem::path, kNumViews> images;
  std::filesystem::path scan;
  double scan_timestamp = 0.0;
};

struct DatasetStream {
  std::filesystem::path root;
  RigCalibration rig;
  std::vector<DatasetRecord> records;

  const Pose& body_from_lidar() const { return rig.body_from_lidar(); }
};

// Throws MissingView, MissingScan, NonMonotoneTimestamps or ParseError.
DatasetStream ingest_dataset(const std::filesystem::path& dir);

// Everything the odometry needs for one capture.
struct FrameInput {
  std::int64_t id = 0;
  double timestamp = 0.0;
  std::array<Image, kNumViews> images;
  LidarScan scan;
};

FrameInput load_record(const DatasetRecord& record);

// Incremental writer; the index is appended as frames and scans arrive.
class DatasetWriter {
 public:
  DatasetWriter(const std::filesystem::path& dir, const RigCalibration& rig);

  void add_frame(std::int64_t id, double timestamp, const std::array<Image, kNumViews>& images);
  void add_scan(std::int64_t id, double timestamp, const LidarScan& scan);
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  std::ofstream index_;
};

}  // namespace pdlvo
