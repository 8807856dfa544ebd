#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crowdtrack/geometry.hpp"
#include "crowdtrack/training.hpp"

namespace crowdtrack::datagen {

struct Occluder {
    double left = 0.0, top = 0.0, width = 0.0, height = 0.0;
    int start_frame = 1;
    int end_frame = 1 << 30;
};

struct SimConfig {
    double frame_w = 1000.0;
    double frame_h = 800.0;
    int num_agents = 6;
    int num_frames = 150;
    double speed_min = 2.0;
    double speed_max = 3.5;
    double repulsion_strength = 0.0;  // px/frame^2 at zero distance
    double repulsion_radius = 40.0;   // exponential decay length, px
    double box_w_min = 22.0;
    double box_w_max = 38.0;
    double box_aspect_min = 1.8;      // h = aspect * w, aspect per agent
    double box_aspect_max = 2.6;
    std::vector<std::array<double, 2>> goals;  // shared pool; empty = random
    std::vector<Occluder> occluders;
    double noise_pos_std = 0.0;
    double noise_size_std = 0.0;
    double fn_rate = 0.0;
    double fp_rate = 0.0;
    uint64_t seed = 1;
    // deterministic per-agent overrides for scripted scenarios
    std::map<int, std::array<double, 2>> scripted_start;
    std::map<int, double> scripted_speed;
    std::map<int, std::vector<std::array<double, 2>>> scripted_waypoints;
};

struct AgentTrack {
    int id = 0;
    std::vector<Box> boxes;          // index frame-1
    std::vector<double> visibility;  // same indexing
};

struct SimOutput {
    SimConfig cfg;
    std::vector<AgentTrack> gt;
    std::map<int, std::vector<Detection>> detections;
    // exact bookkeeping: detections = visible - fn + fp per frame
    std::map<int, int> visible_counts;
    std::map<int, int> suppressed_counts;  // visibility < 0.25
    std::map<int, int> fn_counts;
    std::map<int, int> fp_counts;
};

/// Goal-seeking agents with pairwise exponential repulsion, explicit Euler at
/// one step per frame, reflective boundaries. Fully seed-deterministic.
SimOutput simulate(const SimConfig& cfg);

/// Frozen named scenarios used by tests and experiments.
std::map<std::string, SimConfig> scenario_library();
SimConfig scenario(const std::string& name);

training::TrajectorySet gt_trajectories(const SimOutput& sim);

/// Longest run of frames with visibility < 0.25 per agent id.
std::map<int, int> longest_occlusion(const SimOutput& sim);

}  // namespace crowdtrack::datagen
