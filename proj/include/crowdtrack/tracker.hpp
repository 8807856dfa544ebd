#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crowdtrack/geometry.hpp"
#include "crowdtrack/interaction.hpp"
#include "crowdtrack/kalman.hpp"
#include "crowdtrack/refind.hpp"
#include "crowdtrack/trackstore.hpp"

namespace crowdtrack {

enum class TrackerMode { kBaselineKf, kInteraction, kInteractionRefind };

std::string to_string(TrackerMode mode);
TrackerMode tracker_mode_from_string(const std::string& s);

struct TrackerConfig {
    double high_thresh = 0.6;   // first-association detection score floor
    double low_thresh = 0.1;    // second-association detection score floor
    double iou_reject = 0.2;    // IoU gate after assignment
    double init_score = 0.7;    // new-tracklet score floor
    int max_lost_age = 60;      // 60 for MOT17-style, 120 for MOT20-style
    double refind_thresh = 0.9; // correlation acceptance
    double mask_xi = 0.6;       // interaction mask threshold
    TrackerMode mode = TrackerMode::kInteractionRefind;
    double frame_w = 1920.0;
    double frame_h = 1080.0;

    void validate() const;  // throws std::invalid_argument
};

/// Row-major 2x3 affine for the external camera-motion hook.
struct Affine {
    double a = 1.0, b = 0.0, tx = 0.0;
    double c = 0.0, d = 1.0, ty = 0.0;
};

Box apply_affine(const Affine& t, const Box& box);

struct TrackRow {
    int frame = 0;
    int id = 0;
    Box box;
    double score = 0.0;
    bool compensated = false;
};

struct FrameResult {
    std::vector<TrackRow> rows;  // this frame's rows plus any backfill
    int stage1_matches = 0;
    int stage2_matches = 0;
    int refind_matches = 0;
    int spawned = 0;
    int reaped = 0;
};

/// Per-frame tracking engine. One instance tracks one sequence.
class Tracker {
public:
    Tracker(TrackerConfig cfg, std::optional<interaction::Model> interaction_model,
            std::optional<refind::Model> refind_model);

    /// Runs one frame: predict, two-stage IoU association, refind, lifecycle.
    /// Detections must all carry `frame`; frames must arrive in order.
    FrameResult step(int frame, const std::vector<Detection>& detections,
                     const std::optional<Affine>& camera = std::nullopt);

    const TrackStore& store() const { return store_; }
    const TrackerConfig& config() const { return cfg_; }

private:
    std::map<int, Box> predict_all(const std::optional<Affine>& camera);

    TrackerConfig cfg_;
    std::optional<interaction::Model> interaction_;
    std::optional<refind::Model> refind_;
    TrackStore store_;
    std::map<int, KfState> kf_states_;  // baseline mode only
    int last_frame_ = 0;
    bool started_ = false;
};

/// Tracks a whole sequence; output rows sorted by (frame, id). Deterministic
/// given inputs, config and model weights.
std::vector<TrackRow> run_sequence(
    const std::map<int, std::vector<Detection>>& detections_by_frame,
    const TrackerConfig& cfg,
    std::optional<interaction::Model> interaction_model,
    std::optional<refind::Model> refind_model,
    const std::map<int, Affine>& camera_motion = {});

}  // namespace crowdtrack
