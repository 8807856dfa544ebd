#include "crowdtrack/refind.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crowdtrack::refind {

using nnet::Shape;
using nnet::Value;

Model Model::create(const std::vector<int>& channels, int kappa, uint64_t seed,
                    int window_len) {
    if (channels.size() < 2) {
        throw std::invalid_argument("refind: need at least one conv layer");
    }
    if (kappa % 2 == 0) {
        throw std::invalid_argument("refind: kappa must be odd");
    }
    Model m;
    m.channels_ = channels;
    m.kappa_ = kappa;
    m.window_len_ = window_len;
    std::mt19937_64 rng(seed);
    auto& p = m.params_;
    for (size_t l = 0; l + 1 < channels.size(); ++l) {
        const std::string base = "refind/time" + std::to_string(l);
        const int cin = channels[l], cout = channels[l + 1];
        p.add(base + "/kernel",
              nnet::init_uniform({kappa, cin, cout}, kappa * cin, rng));
        p.add(base + "/slope", Value::scalar(0.25));
    }
    p.add("refind/attr/kernel", nnet::init_uniform({1, 1, kappa}, kappa, rng));
    p.add("refind/attr/slope", Value::scalar(0.25));
    const int d = channels.back();
    // frame-normalized box sizes and their differences are O(1e-2); open
    // those rows at a matching gain so the size-consistency signal starts at
    // a trainable scale
    Value det_w = nnet::init_uniform({1, 10, d}, 10, rng);
    for (int r : {3, 4}) {
        for (int c = 0; c < d; ++c) {
            det_w.data()[r * d + c] *= 16.0;
        }
    }
    for (int r : {8, 9}) {
        for (int c = 0; c < d; ++c) {
            det_w.data()[r * d + c] *= 64.0;
        }
    }
    p.add("refind/det/w", det_w);
    p.add("refind/det/b", Value::zeros({1, 1, d}));
    p.add("refind/det/slope", Value::scalar(0.25));
    p.add("refind/head/w", nnet::init_uniform({1, 2 * d, 1}, 2 * d, rng));
    p.add("refind/head/b", Value::zeros({1, 1, 1}));
    return m;
}

void Model::save(const std::string& path) const {
    nnet::Params with_meta;
    with_meta.merge_from(params_);
    std::vector<double> meta{static_cast<double>(kappa_),
                             static_cast<double>(window_len_),
                             static_cast<double>(channels_.size())};
    for (int c : channels_) {
        meta.push_back(static_cast<double>(c));
    }
    with_meta.add("refind/meta",
                  Value::leaf({1, 1, static_cast<int>(meta.size())}, meta));
    nnet::save_params(with_meta, path);
}

Model Model::from_checkpoint(const std::string& path) {
    nnet::Params loaded = nnet::load_params(path);
    const Value meta = loaded.get("refind/meta");
    const auto& md = meta.data();
    const int kappa = static_cast<int>(md[0]);
    const int window_len = static_cast<int>(md[1]);
    const int nch = static_cast<int>(md[2]);
    std::vector<int> channels;
    for (int i = 0; i < nch; ++i) {
        channels.push_back(static_cast<int>(md[3 + i]));
    }
    Model m = create(channels, kappa, /*seed=*/0, window_len);
    for (const auto& [name, v] : loaded.items()) {
        if (name == "refind/meta") continue;
        m.params_.get(name).data() = v.data();
    }
    return m;
}

nnet::Value Model::traj_features(const LostWindowBatch& batch,
                                 const Normalizer& norm) const {
    const int s_count = batch.count();
    if (s_count == 0) {
        return Value::zeros({1, 0, feature_dim()});
    }
    std::vector<Value> pooled;
    pooled.reserve(s_count);
    for (int s = 0; s < s_count; ++s) {
        const auto& window = batch.windows[s];
        if (static_cast<int>(window.size()) != window_len_) {
            throw std::invalid_argument("refind: window length mismatch");
        }
        std::vector<double> raw(static_cast<size_t>(window_len_) * channels_[0]);
        for (int t = 0; t < window_len_; ++t) {
            const auto enc = norm.encode(window[t].first, window[t].second);
            std::copy(enc.begin(), enc.end(), raw.begin() + t * channels_[0]);
        }
        Value x = Value::leaf({1, window_len_, channels_[0]}, std::move(raw));
        for (size_t l = 0; l + 1 < channels_.size(); ++l) {
            const std::string base = "refind/time" + std::to_string(l);
            x = nnet::prelu(nnet::conv_time(x, params_.get(base + "/kernel")),
                            params_.get(base + "/slope"));
        }
        x = nnet::prelu(
            nnet::conv_asym(x, params_.get("refind/attr/kernel"), nnet::ConvAxis::kCols),
            params_.get("refind/attr/slope"));
        pooled.push_back(nnet::pool_mean(x));
    }
    return nnet::concat_rows(pooled);
}

nnet::Value Model::det_features(const RestDetBatch& dets,
                                const LostWindowBatch& batch,
                                const Normalizer& norm) const {
    const int s_count = batch.count();
    const int u_count = dets.count();
    const int d = feature_dim();
    if (s_count == 0 || u_count == 0) {
        return Value::zeros({1, 0, d});
    }
    std::vector<double> raw(static_cast<size_t>(s_count) * u_count * 10);
    for (int s = 0; s < s_count; ++s) {
        const auto last = norm.encode(batch.last_alive[s].first,
                                      batch.last_alive[s].second);
        for (int u = 0; u < u_count; ++u) {
            const auto det = norm.encode(dets.frame, dets.boxes[u]);
            double* row = raw.data() + (static_cast<size_t>(s) * u_count + u) * 10;
            for (int c = 0; c < 5; ++c) {
                row[c] = det[c];
                row[5 + c] = det[c] - last[c];
            }
        }
    }
    // the activation lets the linear head express two-sided tests on the
    // difference features (paired units recover absolute deviations)
    const Value x = Value::leaf({1, s_count * u_count, 10}, std::move(raw));
    return nnet::prelu(
        nnet::linear(x, params_.get("refind/det/w"), params_.get("refind/det/b")),
        params_.get("refind/det/slope"));
}

nnet::Value Model::correlate(const nnet::Value& traj, const nnet::Value& dete,
                             int pairs_per_traj) const {
    if (dete.rows() == 0) {
        return Value::zeros({1, 0, 1});
    }
    if (traj.rows() * pairs_per_traj != dete.rows()) {
        throw std::invalid_argument("correlate: pair count mismatch");
    }
    const Value tiled = nnet::tile_rows(traj, pairs_per_traj);
    const Value pair = nnet::concat_cols(tiled, dete);
    return nnet::sigmoid(
        nnet::linear(pair, params_.get("refind/head/w"), params_.get("refind/head/b")));
}

CorrelationResult Model::score_and_match(const LostWindowBatch& batch,
                                         const RestDetBatch& dets,
                                         const Normalizer& norm,
                                         double theta) const {
    CorrelationResult result;
    result.rows = batch.count();
    result.cols = dets.count();
    if (result.rows == 0 || result.cols == 0) {
        result.scores_value = Value::zeros({1, 0, 1});
        return result;
    }
    const Value traj = traj_features(batch, norm);
    const Value dete = det_features(dets, batch, norm);
    result.scores_value = correlate(traj, dete, result.cols);
    result.scores = result.scores_value.data();
    result.matches = greedy_match(result.scores, result.rows, result.cols, theta,
                                  batch.tracklet_ids, dets.det_refs);
    return result;
}

std::vector<Match> greedy_match(const std::vector<double>& scores, int rows,
                                int cols, double theta,
                                const std::vector<int>& tracklet_ids,
                                const std::vector<int>& det_refs) {
    std::vector<Match> matches;
    std::vector<char> row_used(rows, 0), col_used(cols, 0);
    while (true) {
        int best_r = -1, best_c = -1;
        double best = -1.0;
        for (int r = 0; r < rows; ++r) {
            if (row_used[r]) continue;
            for (int c = 0; c < cols; ++c) {
                if (col_used[c]) continue;
                if (scores[r * cols + c] > best) {
                    best = scores[r * cols + c];
                    best_r = r;
                    best_c = c;
                }
            }
        }
        if (best_r < 0 || best < theta) {
            break;
        }
        row_used[best_r] = 1;
        col_used[best_c] = 1;
        matches.push_back({tracklet_ids[best_r], det_refs[best_c], best});
    }
    return matches;
}

std::vector<std::pair<int, Box>> error_compensate(Tracklet& tracklet,
                                                  const Detection& det) {
    if (tracklet.state != TrackState::kLost) {
        throw std::logic_error("error_compensate: tracklet is not lost");
    }
    TrackEntry& newest = tracklet.history.back();
    if (newest.observed || newest.frame != det.frame) {
        throw std::logic_error(
            "error_compensate: newest entry must be the prediction at the refind frame");
    }
    const int t2 = det.frame;
    const int t1 = tracklet.last_observed_frame();
    const Offset err = offset_between(newest.box, det.box);

    std::vector<std::pair<int, Box>> corrected;
    for (auto& entry : tracklet.history) {
        if (entry.frame <= t1 || entry.frame >= t2) continue;
        if (entry.observed) {
            throw std::logic_error("error_compensate: occluded span contains observations");
        }
        const double factor =
            static_cast<double>(entry.frame - t1) / static_cast<double>(t2 - t1);
        entry.box.x += err.dx * factor;
        entry.box.y += err.dy * factor;
        entry.box.w += err.dw * factor;
        entry.box.h += err.dh * factor;
        entry.compensated = true;
        corrected.emplace_back(entry.frame, entry.box);
    }

    newest.box = det.box;
    newest.observed = true;
    newest.compensated = false;
    tracklet.state = TrackState::kAlive;
    tracklet.lost_frame.reset();
    const size_t n = tracklet.history.size();
    tracklet.last_offset =
        n >= 2 ? offset_between(tracklet.history[n - 2].box, det.box) : Offset{};
    return corrected;
}

}  // namespace crowdtrack::refind
