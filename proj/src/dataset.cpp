#include "pdlvo/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "pdlvo/error.h"

namespace pdlvo {

namespace fs = std::filesystem;

std::string frame_file_name(std::int64_t id, int view) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%06lld_%d.pgm", static_cast<long long>(id), view);
  return buf;
}

std::string scan_file_name(std::int64_t id) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%06lld.xyz", static_cast<long long>(id));
  return buf;
}

namespace {

struct IndexEntry {
  std::int64_t id;
  double t;
  int line;
};

}  // namespace

DatasetStream ingest_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::ParseError, dir.string() + " is not a directory");
  RigCalibration rig = load_rig(dir / "calib.txt");

  const fs::path index_path = dir / "index.txt";
  std::ifstream in(index_path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + index_path.string());
  std::vector<IndexEntry> frames, scans;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    IndexEntry e{0, 0.0, lineno};
    std::string extra;
    if (!(ls >> e.id >> e.t) || (ls >> extra)) {
      throw Error(ErrorCode::ParseError, index_path.string() + ":" + std::to_string(lineno) + ": expected '<kind> <id> <t>'");
    }
    if (kind == "frame") {
      frames.push_back(e);
    } else if (kind == "scan") {
      scans.push_back(e);
    } else {
      throw Error(ErrorCode::ParseError, index_path.string() + ":" + std::to_string(lineno) + ": unknown record kind '" + kind + "'");
    }
  }

  for (size_t i = 1; i < frames.size(); ++i) {
    if (!(frames[i].t > frames[i - 1].t)) {
      throw Error(ErrorCode::NonMonotoneTimestamps,
                  "frame " + std::to_string(frames[i].id) + " (line " + std::to_string(frames[i].line) +
                      ") does not follow frame " + std::to_string(frames[i - 1].id));
    }
  }
  std::sort(scans.begin(), scans.end(), [](const IndexEntry& a, const IndexEntry& b) { return a.t < b.t; });

  DatasetStream stream{dir, std::move(rig), {}};
  for (const auto& f : frames) {
    DatasetRecord rec;
    rec.id = f.id;
    rec.timestamp = f.t;
    for (int v = 1; v <= kNumViews; ++v) {
      rec.images[static_cast<size_t>(v - 1)] = dir / "frames" / frame_file_name(f.id, v);
      if (!fs::is_regular_file(rec.images[static_cast<size_t>(v - 1)])) {
        throw Error(ErrorCode::MissingView,
                    "frame " + std::to_string(f.id) + " is missing view " + std::to_string(v));
      }
    }
    auto it = std::lower_bound(scans.begin(), scans.end(), f.t,
                               [](const IndexEntry& s, double t) { return s.t < t; });
    const IndexEntry* best = nullptr;
    double best_dt = kScanAssociationTolerance + 1e-9;
    for (auto c : {it, it == scans.begin() ? scans.end() : std::prev(it)}) {
      if (c == scans.end()) continue;
      if (const double dt = std::abs(c->t - f.t); dt <= best_dt) best_dt = dt, best = &*c;
    }
    if (!best) {
      throw Error(ErrorCode::MissingScan, "no scan within 0.02 s of frame " + std::to_string(f.id));
    }
    rec.scan = dir / "scans" / scan_file_name(best->id);
    rec.scan_timestamp = best->t;
    if (!fs::is_regular_file(rec.scan)) {
      throw Error(ErrorCode::MissingScan, "scan file " + rec.scan.string() + " for frame " +
                                              std::to_string(f.id) + " does not exist");
    }
    stream.records.push_back(std::move(rec));
  }
  return stream;
}

FrameInput load_record(const DatasetRecord& record) {
  FrameInput in;
  in.id = record.id;
  in.timestamp = record.timestamp;
  for (size_t v = 0; v < kNumViews; ++v) in.images[v] = load_pgm(record.images[v]);
  in.scan = load_scan(record.scan, record.scan_timestamp);
  return in;
}

DatasetWriter::DatasetWriter(const fs::path& dir, const RigCalibration& rig) : root_(dir) {
  fs::create_directories(dir / "frames");
  fs::create_directories(dir / "scans");
  save_rig(rig, dir / "calib.txt");
  index_.open(dir / "index.txt");
  if (!index_) throw Error(ErrorCode::ParseError, "cannot write " + (dir / "index.txt").string());
  index_ << "# kind id timestamp\n";
}

void DatasetWriter::add_frame(std::int64_t id, double timestamp,
                              const std::array<Image, kNumViews>& images) {
  for (int v = 1; v <= kNumViews; ++v) {
    save_pgm(images[static_cast<size_t>(v - 1)], root_ / "frames" / frame_file_name(id, v));
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "frame %lld %.6f\n", static_cast<long long>(id), timestamp);
  index_ << buf << std::flush;
}

void DatasetWriter::add_scan(std::int64_t id, double timestamp, const LidarScan& scan) {
  save_scan(scan, root_ / "scans" / scan_file_name(id));
  char buf[96];
  std::snprintf(buf, sizeof buf, "scan %lld %.6f\n", static_cast<long long>(id), timestamp);
  index_ << buf << std::flush;
}

}  // namespace pdlvo
