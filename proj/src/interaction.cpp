#include "crowdtrack/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crowdtrack::interaction {

using nnet::Shape;
using nnet::Value;

Box clamp_to_frame(const Box& b, double frame_w, double frame_h, double margin) {
    Box out = b;
    out.x = std::clamp(out.x, -margin * frame_w, (1.0 + margin) * frame_w);
    out.y = std::clamp(out.y, -margin * frame_h, (1.0 + margin) * frame_h);
    out.w = std::clamp(out.w, kMinBoxExtent, frame_w);
    out.h = std::clamp(out.h, kMinBoxExtent, frame_h);
    return out;
}

Input build_input_from_pairs(const std::vector<Box>& prev2,
                             const std::vector<Box>& prev1,
                             const std::vector<int>& ids, double frame_w,
                             double frame_h) {
    if (prev2.size() != prev1.size() || prev1.size() != ids.size()) {
        throw std::invalid_argument("build_input: row count mismatch");
    }
    const int m = static_cast<int>(prev1.size());
    std::vector<double> feat(static_cast<size_t>(m) * 8);
    for (int i = 0; i < m; ++i) {
        const Box& b = prev1[i];
        const Offset o = offset_between(prev2[i], prev1[i]);
        double* row = feat.data() + i * 8;
        row[0] = b.x / frame_w;
        row[1] = b.y / frame_h;
        row[2] = b.w / frame_w;
        row[3] = b.h / frame_h;
        row[4] = o.dx / frame_w;
        row[5] = o.dy / frame_h;
        row[6] = o.dw / frame_w;
        row[7] = o.dh / frame_h;
    }
    Input in;
    in.rows = m;
    in.row_ids = ids;
    in.features = Value::leaf({1, m, 8}, std::move(feat));
    in.prev_boxes = prev1;
    in.frame_w = frame_w;
    in.frame_h = frame_h;
    return in;
}

Input build_input(const TrackStore& store, double frame_w, double frame_h) {
    std::vector<Box> prev2, prev1;
    std::vector<int> ids;
    for (int id : store.active_ids()) {
        const Tracklet& t = store.tracklet(id);
        const Box& last = t.newest().box;
        // single-entry tracklets get a zero offset
        const Box before =
            t.history.size() >= 2 ? t.history[t.history.size() - 2].box : last;
        prev2.push_back(before);
        prev1.push_back(last);
        ids.push_back(id);
    }
    return build_input_from_pairs(prev2, prev1, ids, frame_w, frame_h);
}

Model Model::create(int embed_dim, int kappa, int cascade_layers, uint64_t seed) {
    if (kappa % 2 == 0) {
        throw std::invalid_argument("interaction: kappa must be odd");
    }
    Model m;
    m.embed_dim_ = embed_dim;
    m.kappa_ = kappa;
    m.cascade_layers_ = cascade_layers;
    std::mt19937_64 rng(seed);
    auto& p = m.params_;
    const int d = embed_dim;
    p.add("interaction/embed/w", nnet::init_uniform({1, 8, d}, 8, rng));
    p.add("interaction/embed/b", Value::zeros({1, 1, d}));
    p.add("interaction/query/w", nnet::init_uniform({1, d, d}, d, rng));
    p.add("interaction/query/b", Value::zeros({1, 1, d}));
    p.add("interaction/key/w", nnet::init_uniform({1, d, d}, d, rng));
    p.add("interaction/key/b", Value::zeros({1, 1, d}));
    for (int l = 0; l < cascade_layers; ++l) {
        const std::string base = "interaction/cascade" + std::to_string(l);
        p.add(base + "/kcol", nnet::init_uniform({1, 1, kappa}, kappa, rng));
        p.add(base + "/krow", nnet::init_uniform({1, 1, kappa}, kappa, rng));
        p.add(base + "/slope", Value::scalar(0.25));
    }
    // frame-normalized offsets are O(1e-2); the fuse layer opens at a
    // matching gain so its activations start at a trainable scale
    p.add("interaction/fuse/w", nnet::init_uniform({1, 4, d}, 4, rng, 64.0));
    p.add("interaction/fuse/b", Value::zeros({1, 1, d}));
    p.add("interaction/fuse/slope", Value::scalar(0.25));
    p.add("interaction/mlp/w1", nnet::init_uniform({1, d, d}, d, rng));
    p.add("interaction/mlp/b1", Value::zeros({1, 1, d}));
    p.add("interaction/mlp/slope", Value::scalar(0.25));
    // near-zero head keeps the initial predictions at the previous box, so
    // early-training IoU stays positive
    p.add("interaction/mlp/w2", nnet::init_uniform({1, d, 4}, d, rng, 0.01));
    p.add("interaction/mlp/b2", Value::zeros({1, 1, 4}));
    return m;
}

void Model::save(const std::string& path) const {
    nnet::Params with_meta;
    with_meta.merge_from(params_);
    with_meta.add("interaction/meta",
                  Value::leaf({1, 1, 3},
                              {static_cast<double>(embed_dim_),
                               static_cast<double>(kappa_),
                               static_cast<double>(cascade_layers_)}));
    nnet::save_params(with_meta, path);
}

Model Model::from_checkpoint(const std::string& path) {
    nnet::Params loaded = nnet::load_params(path);
    const Value meta = loaded.get("interaction/meta");
    Model m = create(static_cast<int>(meta.data()[0]),
                     static_cast<int>(meta.data()[1]),
                     static_cast<int>(meta.data()[2]), /*seed=*/0);
    for (const auto& [name, v] : loaded.items()) {
        if (name == "interaction/meta") continue;
        m.params_.get(name).data() = v.data();
    }
    return m;
}

nnet::Value Model::attention(const Input& input) const {
    const auto& p = params_;
    const Value e = nnet::linear(input.features, p.get("interaction/embed/w"),
                                 p.get("interaction/embed/b"));
    const Value q =
        nnet::linear(e, p.get("interaction/query/w"), p.get("interaction/query/b"));
    const Value k =
        nnet::linear(e, p.get("interaction/key/w"), p.get("interaction/key/b"));
    const Value logits = nnet::matmul_nt(q, k);
    return nnet::softmax_rows(logits, std::sqrt(static_cast<double>(embed_dim_)));
}

Matrices Model::directed_mask(const nnet::Value& attention, double xi) const {
    const int m = attention.rows();
    Matrices out;
    out.attention = attention;
    Value a = attention;
    for (int l = 0; l < cascade_layers_; ++l) {
        const std::string base = "interaction/cascade" + std::to_string(l);
        const Value row_pass =
            nnet::conv_asym(a, params_.get(base + "/kcol"), nnet::ConvAxis::kCols);
        const Value col_pass =
            nnet::conv_asym(a, params_.get(base + "/krow"), nnet::ConvAxis::kRows);
        a = nnet::prelu(nnet::add(row_pass, col_pass), params_.get(base + "/slope"));
    }
    out.cascade = a;

    // sgn(sigmoid(A_L) - xi) with strict >; equality treated as masked.
    out.mask.assign(static_cast<size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const double s = 1.0 / (1.0 + std::exp(-a.at(i, j)));
            out.mask[i * m + j] = s > xi ? 1.0 : 0.0;
        }
        out.mask[i * m + i] = 1.0;  // a tracklet always influences itself
    }

    const Value masked = nnet::mul_const(attention, out.mask);
    if (m == 0) {
        out.adjacency = masked;
        return out;
    }
    const Value ones = Value::leaf({1, m, 1}, std::vector<double>(m, 1.0));
    const Value sums = nnet::matmul(masked, ones);
    out.adjacency = nnet::div_rows(masked, sums);
    return out;
}

nnet::Value Model::predict_offsets(const Input& input,
                                   const nnet::Value& adjacency) const {
    const int m = input.rows;
    std::vector<double> off(static_cast<size_t>(m) * 4);
    for (int i = 0; i < m; ++i) {
        for (int c = 0; c < 4; ++c) {
            off[i * 4 + c] = input.features.at(i, 4 + c);
        }
    }
    const Value offsets = Value::leaf({1, m, 4}, std::move(off));
    const Value fused = nnet::matmul(adjacency, offsets);
    const auto& p = params_;
    const Value h = nnet::prelu(nnet::linear(fused, p.get("interaction/fuse/w"),
                                             p.get("interaction/fuse/b")),
                                p.get("interaction/fuse/slope"));
    const Value z = nnet::prelu(
        nnet::linear(h, p.get("interaction/mlp/w1"), p.get("interaction/mlp/b1")),
        p.get("interaction/mlp/slope"));
    return nnet::linear(z, p.get("interaction/mlp/w2"), p.get("interaction/mlp/b2"));
}

Prediction Model::predict(const Input& input, double xi) const {
    Prediction pred;
    if (input.rows == 0) {
        pred.offsets_value = Value::zeros({1, 0, 4});
        pred.matrices.attention = Value::zeros({1, 0, 0});
        pred.matrices.cascade = Value::zeros({1, 0, 0});
        pred.matrices.adjacency = Value::zeros({1, 0, 0});
        return pred;
    }
    const Value att = attention(input);
    pred.matrices = directed_mask(att, xi);
    pred.offsets_value = predict_offsets(input, pred.matrices.adjacency);

    pred.offsets.resize(input.rows);
    pred.boxes.resize(input.rows);
    pred.clamped.resize(input.rows);
    for (int i = 0; i < input.rows; ++i) {
        const Offset o{pred.offsets_value.at(i, 0) * input.frame_w,
                       pred.offsets_value.at(i, 1) * input.frame_h,
                       pred.offsets_value.at(i, 2) * input.frame_w,
                       pred.offsets_value.at(i, 3) * input.frame_h};
        bool clamped = false;
        pred.offsets[i] = o;
        pred.boxes[i] = apply_offset(input.prev_boxes[i], o, &clamped);
        pred.clamped[i] = clamped ? 1 : 0;
    }
    return pred;
}

}  // namespace crowdtrack::interaction
