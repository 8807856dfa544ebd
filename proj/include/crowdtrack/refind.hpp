#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crowdtrack/geometry.hpp"
#include "crowdtrack/nnet.hpp"
#include "crowdtrack/trackstore.hpp"

namespace crowdtrack::refind {

/// Trajectory windows of the lost tracklets: the last 30 alive locations
/// per tracklet, oldest first, padded by repetition when short.
struct LostWindowBatch {
    std::vector<int> tracklet_ids;
    std::vector<std::vector<std::pair<int, Box>>> windows;
    std::vector<std::pair<int, Box>> last_alive;  // (frame, box) per tracklet

    int count() const { return static_cast<int>(tracklet_ids.size()); }
};

/// Unmatched detections of the current frame.
struct RestDetBatch {
    int frame = 0;
    std::vector<int> det_refs;  // indices into the frame's detection list
    std::vector<Box> boxes;

    int count() const { return static_cast<int>(det_refs.size()); }
};

/// Shared coordinate/time encoding for windows and detections: x,w by frame
/// width, y,h by frame height, t as (current - t) / max_lost_age.
struct Normalizer {
    double frame_w = 1.0;
    double frame_h = 1.0;
    int current_frame = 0;
    int max_lost_age = 60;

    std::array<double, 5> encode(int frame, const Box& b) const {
        return {static_cast<double>(current_frame - frame) / max_lost_age,
                b.x / frame_w, b.y / frame_h, b.w / frame_w, b.h / frame_h};
    }
};

struct Match {
    int tracklet_id = 0;
    int det_ref = 0;
    double score = 0.0;
};

struct CorrelationResult {
    int rows = 0;                 // S
    int cols = 0;                 // U
    std::vector<double> scores;   // S x U, row-major
    std::vector<Match> matches;
    nnet::Value scores_value;     // (S*U) x 1, graph output

    double score_at(int s, int u) const { return scores[s * cols + u]; }
};

class Model {
public:
    /// channels runs input->...->feature width, e.g. {5, 16, 32};
    /// the final entry is the feature dimension D.
    static Model create(const std::vector<int>& channels, int kappa,
                        uint64_t seed, int window_len = 30);
    static Model from_checkpoint(const std::string& path);
    void save(const std::string& path) const;

    nnet::Params& params() { return params_; }
    const nnet::Params& params() const { return params_; }
    int feature_dim() const { return channels_.back(); }
    int window_len() const { return window_len_; }
    const std::vector<int>& channels() const { return channels_; }

    /// Eq. 5: conv along time per layer, then along the attribute axis,
    /// mean-pooled to one feature row per lost tracklet. Returns S x D.
    nnet::Value traj_features(const LostWindowBatch& batch,
                              const Normalizer& norm) const;

    /// Eq. 6 evaluated pairwise: concat(det, det - last_alive) projected to
    /// D dims. Returns (S*U) x D, row (s*U + u).
    nnet::Value det_features(const RestDetBatch& dets,
                             const LostWindowBatch& batch,
                             const Normalizer& norm) const;

    /// Correlation head over concatenated pair features. Returns (S*U) x 1.
    nnet::Value correlate(const nnet::Value& traj, const nnet::Value& dete,
                          int pairs_per_traj) const;

    /// Full scoring plus greedy matching at threshold theta.
    CorrelationResult score_and_match(const LostWindowBatch& batch,
                                      const RestDetBatch& dets,
                                      const Normalizer& norm,
                                      double theta) const;

private:
    nnet::Params params_;
    std::vector<int> channels_;
    int kappa_ = 0;
    int window_len_ = 0;
};

/// Greedy selection of the globally maximal remaining score >= theta; ties
/// break toward the lower row then lower column.
std::vector<Match> greedy_match(const std::vector<double>& scores, int rows,
                                int cols, double theta,
                                const std::vector<int>& tracklet_ids,
                                const std::vector<int>& det_refs);

/// Eq. 7 error compensation. The tracklet must be Lost with its newest
/// history entry being the unobserved prediction at det.frame. Rewrites the
/// occluded boxes, installs the detection as observed, and revives the
/// tracklet. Returns the corrected interior rows (frames t1+1 .. t2-1).
std::vector<std::pair<int, Box>> error_compensate(Tracklet& tracklet,
                                                  const Detection& det);

}  // namespace crowdtrack::refind
