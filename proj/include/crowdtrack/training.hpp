#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crowdtrack/geometry.hpp"
#include "crowdtrack/interaction.hpp"
#include "crowdtrack/nnet.hpp"
#include "crowdtrack/refind.hpp"

namespace crowdtrack::training {

/// Ground truth in per-identity form: id -> (frame, box), frames ascending.
using Trajectory = std::vector<std::pair<int, Box>>;
using TrajectorySet = std::map<int, Trajectory>;

/// Three consecutive ground-truth frames of a co-visible target set. The
/// first two form the model input, the third is the supervision.
struct IntrSample {
    int frame_t = 0;
    std::vector<int> ids;
    std::vector<Box> boxes_t2;
    std::vector<Box> boxes_t1;
    std::vector<Box> boxes_gt;
};

/// One (history window, candidate detection) pair with a same-trajectory
/// label. Window rows are raw (frame, box); encoding happens at feature time.
struct CorrSample {
    std::vector<std::pair<int, Box>> window;
    int det_frame = 0;
    Box det_box;
    int label = 0;
};

/// Composes normalized offsets onto previous boxes as a graph op; width and
/// height columns are clamped like apply_offset does.
nnet::Value compose_boxes_value(const nnet::Value& offsets,
                                const std::vector<Box>& prev, double frame_w,
                                double frame_h);

/// Eq. 8: mean over rows of 1 - IoU(pred, gt)^2, differentiable through the
/// predicted box parameters.
nnet::Value intr_loss(const nnet::Value& pred_boxes, const std::vector<Box>& gt);

/// Eq. 9: mean binary cross-entropy with scores clamped to [1e-7, 1-1e-7].
nnet::Value corr_loss(const nnet::Value& scores, const std::vector<double>& labels);

/// Module-specific learning rates: the IoU loss back-propagates through the
/// frame de-normalization, so its gradient scale is frame-sized.
inline constexpr double kInteractionLr = 1e-5;
inline constexpr double kRefindLr = 3e-4;
inline constexpr int kInteractionEpochs = 120;
inline constexpr int kRefindEpochs = 150;

struct TrainConfig {
    double lr = kInteractionLr;
    double momentum = 0.9;
    int epochs = 40;
    int patience = 8;           // early stopping on validation loss
    double val_fraction = 0.1;
    uint64_t seed = 1;
    double frame_w = 1920.0;
    double frame_h = 1080.0;
    int max_lost_age = 60;      // time encoding for correlation windows
    double mask_xi = 0.6;
    bool sanity_gradcheck = true;
    // rollout stabilization (interaction training only)
    int rollout_horizon = 12;   // frames per span
    int rollout_stride = 8;
    int rollout_refresh = 5;    // regenerate every N epochs; 0 disables
};

std::vector<IntrSample> build_intr_samples(const TrajectorySet& gt);

/// Straight constant-velocity trajectories spanning the given speed range;
/// mixed into interaction training so the iterated predictor keeps coasting
/// on states no simulator sample covers.
TrajectorySet straight_line_trajectories(double frame_w, double frame_h,
                                         double speed_min, double speed_max,
                                         int span_frames = 40);

/// A co-visible identity set over a span of consecutive frames; the raw
/// material for rollout-stabilized training.
struct RolloutSpan {
    int first_frame = 0;
    std::vector<int> ids;
    std::vector<std::vector<Box>> boxes;  // [frame offset][row]
};

std::vector<RolloutSpan> build_rollout_spans(const TrajectorySet& gt, int horizon,
                                             int stride);

/// Rolls the model forward feeding its own predictions and emits one-step
/// samples from the drifted states toward the ground truth. Keeps the
/// iterated predictor from drifting during occlusion spells.
std::vector<IntrSample> rollout_samples(const interaction::Model& model,
                                        const std::vector<RolloutSpan>& spans,
                                        const TrainConfig& cfg);

std::vector<CorrSample> build_corr_samples(const TrajectorySet& gt,
                                           int negatives_per_positive,
                                           uint64_t seed, int max_gap = 60,
                                           int window_len = 30,
                                           int positives_per_traj = 8);

struct TrainReport {
    std::vector<std::array<double, 3>> curve;  // epoch, train loss, val loss
    double best_val = 0.0;
    int best_epoch = -1;
    bool aborted_nan = false;
};

TrainReport train_interaction(interaction::Model& model,
                              const std::vector<IntrSample>& samples,
                              const TrainConfig& cfg);

TrainReport train_refind(refind::Model& model,
                         const std::vector<CorrSample>& samples,
                         const TrainConfig& cfg);

/// Classification accuracy of the correlation head at the given acceptance
/// threshold: predicted positive iff score >= theta.
double refind_accuracy(const refind::Model& model,
                       const std::vector<CorrSample>& samples,
                       const TrainConfig& cfg, double theta);

/// Mean Eq. 8 loss of the last-offset (constant velocity) predictor over the
/// same samples; the reference the trained model must beat.
double constant_velocity_loss(const std::vector<IntrSample>& samples);

/// Per-sample forward pass to the Eq. 8 loss; shared by training and tests.
nnet::Value interaction_sample_loss(const interaction::Model& model,
                                    const IntrSample& sample,
                                    const TrainConfig& cfg);

/// Rollout-sample loss: Eq. 8 plus a box-scale-normalized quadratic pull
/// toward the target, which keeps a gradient once drifted boxes stop
/// overlapping their targets.
nnet::Value interaction_rollout_loss(const interaction::Model& model,
                                     const IntrSample& sample,
                                     const TrainConfig& cfg);
nnet::Value refind_sample_loss(const refind::Model& model,
                               const CorrSample& sample, const TrainConfig& cfg);

void write_loss_curve(const std::string& path, const TrainReport& report);

}  // namespace crowdtrack::training
