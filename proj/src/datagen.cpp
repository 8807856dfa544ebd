#include "crowdtrack/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace crowdtrack::datagen {

namespace {

struct Agent {
    double x = 0.0, y = 0.0;
    double vx = 0.0, vy = 0.0;
    double w = 0.0, h = 0.0;
    double speed = 0.0;
    std::vector<std::array<double, 2>> waypoints;
    size_t waypoint_idx = 0;
    bool scripted = false;
};

constexpr double kGoalGain = 0.25;
constexpr double kVisibilityFloor = 0.25;

double overlap_fraction(const Box& b, const Occluder& o) {
    const double ox = std::min(b.right(), o.left + o.width) - std::max(b.left(), o.left);
    const double oy = std::min(b.bottom(), o.top + o.height) - std::max(b.top(), o.top);
    if (ox <= 0.0 || oy <= 0.0) {
        return 0.0;
    }
    return (ox * oy) / b.area();
}

}  // namespace

SimOutput simulate(const SimConfig& cfg) {
    if (cfg.frame_w <= 0 || cfg.frame_h <= 0 || cfg.fn_rate < 0 || cfg.fn_rate > 1 ||
        cfg.fp_rate < 0 || cfg.fp_rate > 1) {
        throw std::invalid_argument("simulate: invalid config");
    }
    std::mt19937_64 rng(cfg.seed);
    auto uniform = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    auto gauss = [&](double std) {
        return std == 0.0 ? 0.0 : std::normal_distribution<double>(0.0, std)(rng);
    };

    SimOutput out;
    out.cfg = cfg;

    std::vector<Agent> agents(cfg.num_agents);
    const double margin_x = 0.05 * cfg.frame_w;
    const double margin_y = 0.05 * cfg.frame_h;
    for (int i = 0; i < cfg.num_agents; ++i) {
        Agent& a = agents[i];
        a.x = uniform(margin_x, cfg.frame_w - margin_x);
        a.y = uniform(margin_y, cfg.frame_h - margin_y);
        a.w = uniform(cfg.box_w_min, cfg.box_w_max);
        a.h = uniform(cfg.box_aspect_min, cfg.box_aspect_max) * a.w;
        a.speed = uniform(cfg.speed_min, cfg.speed_max);
        if (!cfg.goals.empty()) {
            a.waypoints = cfg.goals;
            a.waypoint_idx = static_cast<size_t>(i) % cfg.goals.size();
        } else {
            a.waypoints.push_back({uniform(margin_x, cfg.frame_w - margin_x),
                                   uniform(margin_y, cfg.frame_h - margin_y)});
        }
    }
    for (const auto& [id, start] : cfg.scripted_start) {
        agents.at(id).x = start[0];
        agents.at(id).y = start[1];
    }
    for (const auto& [id, speed] : cfg.scripted_speed) {
        agents.at(id).speed = speed;
    }
    for (const auto& [id, wps] : cfg.scripted_waypoints) {
        agents.at(id).waypoints = wps;
        agents.at(id).waypoint_idx = 0;
        agents.at(id).scripted = true;
    }

    out.gt.resize(cfg.num_agents);
    for (int i = 0; i < cfg.num_agents; ++i) {
        out.gt[i].id = i + 1;
        out.gt[i].boxes.reserve(cfg.num_frames);
        out.gt[i].visibility.reserve(cfg.num_frames);
    }

    for (int frame = 1; frame <= cfg.num_frames; ++frame) {
        // forces and integration
        std::vector<std::array<double, 2>> accel(cfg.num_agents, {0.0, 0.0});
        for (int i = 0; i < cfg.num_agents; ++i) {
            Agent& a = agents[i];
            const auto& goal = a.waypoints[a.waypoint_idx];
            double gx = goal[0] - a.x, gy = goal[1] - a.y;
            const double gd = std::hypot(gx, gy);
            if (gd > 1e-9) {
                gx /= gd;
                gy /= gd;
            }
            accel[i][0] += kGoalGain * (gx * a.speed - a.vx);
            accel[i][1] += kGoalGain * (gy * a.speed - a.vy);
            if (cfg.repulsion_strength > 0.0) {
                for (int j = 0; j < cfg.num_agents; ++j) {
                    if (j == i) continue;
                    double dx = a.x - agents[j].x, dy = a.y - agents[j].y;
                    const double d = std::hypot(dx, dy);
                    if (d < 1e-9 || d > 6.0 * cfg.repulsion_radius) continue;
                    const double f =
                        cfg.repulsion_strength * std::exp(-d / cfg.repulsion_radius);
                    accel[i][0] += f * dx / d;
                    accel[i][1] += f * dy / d;
                }
            }
        }
        for (int i = 0; i < cfg.num_agents; ++i) {
            Agent& a = agents[i];
            a.vx += accel[i][0];
            a.vy += accel[i][1];
            const double sp = std::hypot(a.vx, a.vy);
            const double cap = 1.5 * a.speed;
            if (sp > cap) {
                a.vx *= cap / sp;
                a.vy *= cap / sp;
            }
            a.x += a.vx;
            a.y += a.vy;
            // reflective boundaries keep the whole box inside the frame
            const double lo_x = 0.5 * a.w, hi_x = cfg.frame_w - 0.5 * a.w;
            const double lo_y = 0.5 * a.h, hi_y = cfg.frame_h - 0.5 * a.h;
            if (a.x < lo_x) { a.x = lo_x; a.vx = -a.vx; }
            if (a.x > hi_x) { a.x = hi_x; a.vx = -a.vx; }
            if (a.y < lo_y) { a.y = lo_y; a.vy = -a.vy; }
            if (a.y > hi_y) { a.y = hi_y; a.vy = -a.vy; }
            // advance waypoints on arrival
            const auto& goal = a.waypoints[a.waypoint_idx];
            if (std::hypot(goal[0] - a.x, goal[1] - a.y) < 2.0 * a.speed) {
                if (a.waypoint_idx + 1 < a.waypoints.size()) {
                    ++a.waypoint_idx;
                } else if (!a.scripted && cfg.goals.empty()) {
                    a.waypoints[a.waypoint_idx] = {
                        uniform(margin_x, cfg.frame_w - margin_x),
                        uniform(margin_y, cfg.frame_h - margin_y)};
                } else if (!a.scripted && !cfg.goals.empty()) {
                    a.waypoint_idx = (a.waypoint_idx + 1) % a.waypoints.size();
                }
                // scripted agents park at their final waypoint
            }
        }

        // ground truth, visibility, detections
        auto& dets = out.detections[frame];
        int visible = 0, suppressed = 0, fn = 0, fp = 0;
        for (int i = 0; i < cfg.num_agents; ++i) {
            const Agent& a = agents[i];
            const Box box{a.x, a.y, a.w, a.h};
            double occluded = 0.0;
            for (const auto& occ : cfg.occluders) {
                if (frame < occ.start_frame || frame > occ.end_frame) continue;
                occluded = std::max(occluded, overlap_fraction(box, occ));
            }
            const double vis = 1.0 - occluded;
            out.gt[i].boxes.push_back(box);
            out.gt[i].visibility.push_back(vis);
            if (vis < kVisibilityFloor) {
                ++suppressed;
                continue;
            }
            ++visible;
            if (cfg.fn_rate > 0.0 && uniform(0.0, 1.0) < cfg.fn_rate) {
                ++fn;
                continue;
            }
            Box noisy = box;
            noisy.x += gauss(cfg.noise_pos_std);
            noisy.y += gauss(cfg.noise_pos_std);
            noisy.w = std::max(2.0, noisy.w + gauss(cfg.noise_size_std));
            noisy.h = std::max(2.0, noisy.h + gauss(cfg.noise_size_std));
            // saturating confidence: deep partial occlusion lands in the low
            // band, clean boxes regain full confidence quickly
            const double conf_scale = std::min(1.0, vis / 0.5);
            const double score = uniform(0.7, 1.0) * conf_scale;
            dets.push_back({frame, noisy, score});
        }
        if (cfg.fp_rate > 0.0) {
            for (int i = 0; i < cfg.num_agents; ++i) {
                if (uniform(0.0, 1.0) >= cfg.fp_rate) continue;
                ++fp;
                const double w = uniform(cfg.box_w_min, cfg.box_w_max);
                const double h = uniform(cfg.box_aspect_min, cfg.box_aspect_max) * w;
                const Box box{uniform(0.5 * w, cfg.frame_w - 0.5 * w),
                              uniform(0.5 * h, cfg.frame_h - 0.5 * h), w, h};
                dets.push_back({frame, box, uniform(0.1, 0.8)});
            }
        }
        out.visible_counts[frame] = visible;
        out.suppressed_counts[frame] = suppressed;
        out.fn_counts[frame] = fn;
        out.fp_counts[frame] = fp;
    }
    return out;
}

training::TrajectorySet gt_trajectories(const SimOutput& sim) {
    training::TrajectorySet set;
    for (const auto& track : sim.gt) {
        training::Trajectory traj;
        for (size_t f = 0; f < track.boxes.size(); ++f) {
            traj.emplace_back(static_cast<int>(f) + 1, track.boxes[f]);
        }
        set[track.id] = std::move(traj);
    }
    return set;
}

std::map<int, int> longest_occlusion(const SimOutput& sim) {
    std::map<int, int> out;
    for (const auto& track : sim.gt) {
        int best = 0, run = 0;
        for (double v : track.visibility) {
            run = v < kVisibilityFloor ? run + 1 : 0;
            best = std::max(best, run);
        }
        out[track.id] = best;
    }
    return out;
}

std::map<std::string, SimConfig> scenario_library() {
    std::map<std::string, SimConfig> lib;

    {
        SimConfig c;
        c.frame_w = 1000;
        c.frame_h = 800;
        c.num_agents = 6;
        c.num_frames = 150;
        c.speed_min = 5.0;
        c.speed_max = 8.0;
        c.seed = 11;
        lib["clean"] = c;
    }
    {
        SimConfig c;
        c.frame_w = 1000;
        c.frame_h = 600;
        c.num_agents = 2;
        c.num_frames = 110;
        c.seed = 5;
        c.scripted_start[0] = {80.0, 290.0};
        c.scripted_start[1] = {920.0, 310.0};
        c.scripted_speed[0] = 6.0;
        c.scripted_speed[1] = 6.0;
        c.scripted_waypoints[0] = {{920.0, 310.0}};
        c.scripted_waypoints[1] = {{80.0, 290.0}};
        lib["crossing_pair"] = c;
    }
    {
        SimConfig c;
        c.frame_w = 1100;
        c.frame_h = 700;
        c.num_agents = 22;
        c.num_frames = 150;
        c.speed_min = 6.0;
        c.speed_max = 10.0;
        c.repulsion_strength = 1.1;
        c.repulsion_radius = 65.0;
        c.noise_pos_std = 0.6;
        c.noise_size_std = 0.4;
        c.fn_rate = 0.02;
        c.fp_rate = 0.01;
        c.seed = 21;
        lib["dense_crowd_20"] = c;
    }
    {
        SimConfig c;
        c.frame_w = 1000;
        c.frame_h = 800;
        c.num_agents = 8;
        c.num_frames = 170;
        c.speed_min = 5.0;
        c.speed_max = 8.0;
        c.noise_pos_std = 0.3;
        c.fn_rate = 0.01;
        c.seed = 31;
        // vertical band; crossings hide an agent for ~15-22 frames
        c.occluders.push_back({450.0, 0.0, 90.0, 800.0, 1, 170});
        // two agents cross the band and turn behind it
        c.scripted_start[0] = {120.0, 200.0};
        c.scripted_speed[0] = 6.0;
        c.scripted_waypoints[0] = {{495.0, 230.0}, {880.0, 420.0}};
        c.scripted_start[1] = {880.0, 600.0};
        c.scripted_speed[1] = 6.0;
        c.scripted_waypoints[1] = {{485.0, 560.0}, {140.0, 360.0}};
        lib["occlusion_30"] = c;
    }
    {
        // fully choreographed: agent 0 turns behind the occluder for a
        // ~105-frame occlusion, everyone else runs straight lanes clear of it
        SimConfig c;
        c.frame_w = 1000;
        c.frame_h = 800;
        c.num_agents = 7;
        c.num_frames = 280;
        c.speed_min = 5.0;
        c.speed_max = 7.0;
        c.noise_pos_std = 0.3;
        c.seed = 41;
        c.occluders.push_back({380.0, 260.0, 240.0, 260.0, 1, 280});
        c.scripted_start[0] = {150.0, 390.0};
        c.scripted_speed[0] = 4.2;
        c.scripted_waypoints[0] = {{430.0, 390.0}, {560.0, 350.0}, {480.0, 460.0},
                                   {850.0, 640.0}};
        const double lane_y[4] = {90.0, 170.0, 640.0, 720.0};
        for (int a = 1; a <= 4; ++a) {
            const bool eastbound = a % 2 == 1;
            c.scripted_start[a] = {eastbound ? 60.0 : 940.0, lane_y[a - 1]};
            c.scripted_speed[a] = 5.0 + 0.6 * a;
            c.scripted_waypoints[a] = {{eastbound ? 940.0 : 60.0, lane_y[a - 1]},
                                       {eastbound ? 60.0 : 940.0, lane_y[a - 1]},
                                       {eastbound ? 940.0 : 60.0, lane_y[a - 1]}};
        }
        for (int a = 5; a <= 6; ++a) {
            const double x = a == 5 ? 130.0 : 870.0;
            c.scripted_start[a] = {x, a == 5 ? 100.0 : 700.0};
            c.scripted_speed[a] = 5.4;
            c.scripted_waypoints[a] = {{x, a == 5 ? 700.0 : 100.0},
                                       {x, a == 5 ? 100.0 : 700.0},
                                       {x, a == 5 ? 700.0 : 100.0}};
        }
        lib["occlusion_120"] = c;
    }
    {
        SimConfig c;
        c.frame_w = 1100;
        c.frame_h = 800;
        c.num_agents = 16;
        c.num_frames = 200;
        c.speed_min = 4.0;
        c.speed_max = 7.0;
        c.repulsion_strength = 0.8;
        c.repulsion_radius = 50.0;
        c.noise_pos_std = 0.4;
        c.fn_rate = 0.01;
        c.seed = 51;
        c.occluders.push_back({300.0, 150.0, 180.0, 240.0, 1, 200});
        c.occluders.push_back({640.0, 420.0, 220.0, 260.0, 1, 200});
        // slow crossers pick up long low-visibility spells
        c.scripted_start[0] = {150.0, 260.0};
        c.scripted_speed[0] = 1.6;
        c.scripted_waypoints[0] = {{390.0, 270.0}, {940.0, 240.0}};
        c.scripted_start[1] = {980.0, 540.0};
        c.scripted_speed[1] = 1.6;
        c.scripted_waypoints[1] = {{740.0, 545.0}, {120.0, 580.0}};
        lib["crowd_vis025"] = c;
    }
    return lib;
}

SimConfig scenario(const std::string& name) {
    const auto lib = scenario_library();
    const auto it = lib.find(name);
    if (it == lib.end()) {
        throw std::invalid_argument("unknown scenario: " + name);
    }
    return it->second;
}

}  // namespace crowdtrack::datagen
