#pragma once

#include <map>
#include <string>
#include <vector>

#include "crowdtrack/geometry.hpp"
#include "crowdtrack/tracker.hpp"
#include "crowdtrack/training.hpp"

namespace crowdtrack::evalio {

/// One MOTChallenge CSV row. The box is held in the internal center-size
/// form; top-left conversion happens on parse/write only. visibility < 0
/// marks a detection-style row (trailing fields written as -1).
struct MotRow {
    int frame = 0;
    int id = -1;
    Box box;
    double score = 1.0;
    int cls = -1;
    double visibility = -1.0;
};

/// Parses a MOT CSV file; throws std::runtime_error naming the offending
/// line on malformed input. Rows are sorted by frame (stable).
std::vector<MotRow> parse_mot(const std::string& path);

void write_mot(const std::string& path, const std::vector<MotRow>& rows);

std::map<int, std::vector<Detection>> to_detections(const std::vector<MotRow>& rows);
training::TrajectorySet to_trajectories(const std::vector<MotRow>& rows);
std::vector<MotRow> from_track_rows(const std::vector<TrackRow>& rows);

// flat `key = value` config files, '#' comments
std::map<std::string, std::string> read_kv(const std::string& path);
void write_kv(const std::string& path,
              const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace crowdtrack::evalio
