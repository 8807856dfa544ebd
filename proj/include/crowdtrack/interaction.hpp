#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crowdtrack/geometry.hpp"
#include "crowdtrack/nnet.hpp"
#include "crowdtrack/trackstore.hpp"

namespace crowdtrack::interaction {

/// Per-tracklet model input: absolute box at the previous frame concatenated
/// with the offset from two frames back, both in frame-normalized units.
struct Input {
    int rows = 0;
    std::vector<int> row_ids;         // tracklet ids, ascending
    nnet::Value features;             // M x 8, normalized
    std::vector<Box> prev_boxes;      // absolute boxes at t-1, row order
    double frame_w = 0.0;
    double frame_h = 0.0;
};

/// Attention and its masked, row-normalized derivative.
struct Matrices {
    nnet::Value attention;        // M x M, row-stochastic
    nnet::Value cascade;          // M x M, output of the conv cascade
    std::vector<double> mask;     // M x M in {0,1}, diagonal forced to 1
    nnet::Value adjacency;        // M x M, nonzero rows sum to 1
};

struct Prediction {
    std::vector<Offset> offsets;  // pixel units
    std::vector<Box> boxes;       // composed onto the previous boxes, clamped
    std::vector<char> clamped;
    nnet::Value offsets_value;    // M x 4, normalized units (graph output)
    Matrices matrices;
};

/// One row per non-dead tracklet (lost tracklets keep being predicted).
/// Single-entry tracklets get a zero offset.
Input build_input(const TrackStore& store, double frame_w, double frame_h);

/// Keeps an iterated prediction inside a margin around the frame so the
/// self-fed feedback (lost-tracklet ghosts, training rollouts) stays in the
/// coordinate range the model was fit on.
Box clamp_to_frame(const Box& b, double frame_w, double frame_h,
                   double margin = 0.2);

/// Builds the same input from explicit (box at t-2, box at t-1) pairs; used
/// for training samples and prediction-quality probes.
Input build_input_from_pairs(const std::vector<Box>& prev2,
                             const std::vector<Box>& prev1,
                             const std::vector<int>& ids, double frame_w,
                             double frame_h);

class Model {
public:
    static Model create(int embed_dim, int kappa, int cascade_layers,
                        uint64_t seed);
    static Model from_checkpoint(const std::string& path);
    void save(const std::string& path) const;

    nnet::Params& params() { return params_; }
    const nnet::Params& params() const { return params_; }
    int embed_dim() const { return embed_dim_; }
    int kappa() const { return kappa_; }
    int cascade_layers() const { return cascade_layers_; }

    /// Eq. 1: row-stochastic attention over tracklet pairs.
    nnet::Value attention(const Input& input) const;

    /// Eq. 2-3: asymmetric-conv cascade, threshold mask (strict >, diagonal
    /// retained), and row-normalized adjacency.
    Matrices directed_mask(const nnet::Value& attention, double xi) const;

    /// Eq. 4 on top of the adjacency: fused offsets through the MLP head.
    nnet::Value predict_offsets(const Input& input,
                                const nnet::Value& adjacency) const;

    /// Full forward pass to pixel-space boxes.
    Prediction predict(const Input& input, double xi) const;

private:
    nnet::Params params_;
    int embed_dim_ = 0;
    int kappa_ = 0;
    int cascade_layers_ = 0;
};

}  // namespace crowdtrack::interaction
