#include "crowdtrack/tracker.hpp"

#include <algorithm>
#include <stdexcept>

#include "crowdtrack/assignment.hpp"

namespace crowdtrack {

std::string to_string(TrackerMode mode) {
    switch (mode) {
        case TrackerMode::kBaselineKf: return "baseline_kf";
        case TrackerMode::kInteraction: return "interaction";
        case TrackerMode::kInteractionRefind: return "interaction+refind";
    }
    return "?";
}

TrackerMode tracker_mode_from_string(const std::string& s) {
    if (s == "baseline_kf") return TrackerMode::kBaselineKf;
    if (s == "interaction") return TrackerMode::kInteraction;
    if (s == "interaction+refind" || s == "interaction_refind") {
        return TrackerMode::kInteractionRefind;
    }
    throw std::invalid_argument("unknown tracker mode: " + s);
}

void TrackerConfig::validate() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!(low_thresh >= 0.0 && low_thresh < high_thresh && high_thresh <= 1.0)) {
        throw std::invalid_argument("config: need 0 <= low < high <= 1");
    }
    if (!unit(iou_reject) || !unit(init_score) || !unit(refind_thresh) ||
        !unit(mask_xi)) {
        throw std::invalid_argument("config: thresholds must lie in [0,1]");
    }
    if (max_lost_age < 1) {
        throw std::invalid_argument("config: max_lost_age must be >= 1");
    }
    if (frame_w <= 0.0 || frame_h <= 0.0) {
        throw std::invalid_argument("config: frame dims must be positive");
    }
}

Box apply_affine(const Affine& t, const Box& box) {
    // transform the corners, take the enclosing box
    const double xs[2] = {box.left(), box.right()};
    const double ys[2] = {box.top(), box.bottom()};
    double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
    for (double x : xs) {
        for (double y : ys) {
            const double nx = t.a * x + t.b * y + t.tx;
            const double ny = t.c * x + t.d * y + t.ty;
            lo_x = std::min(lo_x, nx);
            hi_x = std::max(hi_x, nx);
            lo_y = std::min(lo_y, ny);
            hi_y = std::max(hi_y, ny);
        }
    }
    return {0.5 * (lo_x + hi_x), 0.5 * (lo_y + hi_y),
            std::max(hi_x - lo_x, kMinBoxExtent),
            std::max(hi_y - lo_y, kMinBoxExtent)};
}

Tracker::Tracker(TrackerConfig cfg,
                 std::optional<interaction::Model> interaction_model,
                 std::optional<refind::Model> refind_model)
    : cfg_(cfg),
      interaction_(std::move(interaction_model)),
      refind_(std::move(refind_model)) {
    cfg_.validate();
    if (cfg_.mode != TrackerMode::kBaselineKf && !interaction_.has_value()) {
        throw std::invalid_argument("tracker: mode requires an interaction model");
    }
    if (cfg_.mode == TrackerMode::kInteractionRefind && !refind_.has_value()) {
        throw std::invalid_argument("tracker: mode requires a refind model");
    }
}

std::map<int, Box> Tracker::predict_all(const std::optional<Affine>& camera) {
    std::map<int, Box> pred;
    if (cfg_.mode == TrackerMode::kBaselineKf) {
        for (int id : store_.active_ids()) {
            KfState& s = kf_states_.at(id);
            s = kf_predict(s);
            pred[id] = kf_box(s);
        }
    } else {
        const interaction::Input input =
            interaction::build_input(store_, cfg_.frame_w, cfg_.frame_h);
        const interaction::Prediction p = interaction_->predict(input, cfg_.mask_xi);
        for (int i = 0; i < input.rows; ++i) {
            // iterated ghost predictions feed back as inputs; keep them in the
            // coordinate range the model was trained on
            pred[input.row_ids[i]] = interaction::clamp_to_frame(
                p.boxes[i], cfg_.frame_w, cfg_.frame_h);
        }
    }
    if (camera.has_value()) {
        for (auto& [id, box] : pred) {
            box = apply_affine(*camera, box);
        }
    }
    return pred;
}

FrameResult Tracker::step(int frame, const std::vector<Detection>& detections,
                          const std::optional<Affine>& camera) {
    if (started_ && frame != last_frame_ + 1) {
        throw std::invalid_argument("tracker: frames must be contiguous");
    }
    for (const auto& d : detections) {
        if (d.frame != frame) {
            throw std::invalid_argument("tracker: detection from wrong frame");
        }
    }
    started_ = true;
    last_frame_ = frame;

    FrameResult result;

    ////////// Step 1: predictions for every non-dead tracklet //////////
    const std::map<int, Box> predictions = predict_all(camera);

    std::vector<int> high_dets, low_dets;
    for (int i = 0; i < static_cast<int>(detections.size()); ++i) {
        const double s = detections[i].score;
        if (s >= cfg_.high_thresh) {
            high_dets.push_back(i);
        } else if (s >= cfg_.low_thresh) {
            low_dets.push_back(i);
        }
    }

    auto iou_assign = [&](const std::vector<int>& ids,
                          const std::vector<int>& det_idx,
                          std::map<int, int>& matched,
                          std::vector<int>& rest_ids,
                          std::vector<int>& rest_dets) {
        rest_ids.clear();
        rest_dets.clear();
        if (ids.empty() || det_idx.empty()) {
            rest_ids = ids;
            rest_dets = det_idx;
            return;
        }
        std::vector<double> cost(ids.size() * det_idx.size());
        for (size_t r = 0; r < ids.size(); ++r) {
            for (size_t c = 0; c < det_idx.size(); ++c) {
                cost[r * det_idx.size() + c] =
                    1.0 - iou(predictions.at(ids[r]), detections[det_idx[c]].box);
            }
        }
        const Assignment a = assign(cost, static_cast<int>(ids.size()),
                                    static_cast<int>(det_idx.size()));
        std::vector<char> det_taken(det_idx.size(), 0);
        std::vector<char> id_taken(ids.size(), 0);
        for (const auto& [r, c] : a.pairs) {
            if (1.0 - cost[r * det_idx.size() + c] < cfg_.iou_reject) {
                continue;
            }
            matched[ids[r]] = det_idx[c];
            id_taken[r] = 1;
            det_taken[c] = 1;
        }
        for (size_t r = 0; r < ids.size(); ++r) {
            if (!id_taken[r]) rest_ids.push_back(ids[r]);
        }
        for (size_t c = 0; c < det_idx.size(); ++c) {
            if (!det_taken[c]) rest_dets.push_back(det_idx[c]);
        }
    };

    ////////// Step 2: first association, high-score detections //////////
    std::map<int, int> matched;  // tracklet id -> detection index
    std::vector<int> unmatched_ids, rest_high;
    const std::vector<int> all_ids = store_.active_ids();
    const std::set<int> was_alive = store_.alive_ids();
    iou_assign(all_ids, high_dets, matched, unmatched_ids, rest_high);
    result.stage1_matches = static_cast<int>(matched.size());

    ////////// Step 3: second association, low-score detections //////////
    std::vector<int> second_ids;
    for (int id : unmatched_ids) {
        if (was_alive.contains(id)) {
            second_ids.push_back(id);
        }
    }
    std::vector<int> still_unmatched_second, rest_low;
    iou_assign(second_ids, low_dets, matched, still_unmatched_second, rest_low);
    result.stage2_matches = static_cast<int>(matched.size()) - result.stage1_matches;

    ////////// Step 4: update matched tracklets //////////
    for (const auto& [id, det_idx] : matched) {
        const Detection& det = detections[det_idx];
        Tracklet& t = store_.tracklet(id);
        if (t.state == TrackState::kLost) {
            // record this frame's prediction first so Eq. 7 sees p at t2
            store_.mark_lost(id, frame, predictions.at(id));
            const auto corrected = refind::error_compensate(t, det);
            store_.refresh_partition(id);
            for (const auto& [f, box] : corrected) {
                result.rows.push_back({f, id, box, det.score, true});
            }
        } else {
            store_.update_alive(id, det);
        }
        if (cfg_.mode == TrackerMode::kBaselineKf) {
            KfState& s = kf_states_.at(id);
            s = kf_update(s, det.box);
        }
        result.rows.push_back({frame, id, det.box, det.score, false});
    }

    ////////// Step 5: unmatched tracklets become/stay lost //////////
    std::vector<int> lost_now;
    for (int id : all_ids) {
        if (!matched.contains(id)) {
            store_.mark_lost(id, frame, predictions.at(id));
            lost_now.push_back(id);
        }
    }

    ////////// Step 6: refind lost tracklets among leftover high dets //////////
    if (cfg_.mode == TrackerMode::kInteractionRefind && !rest_high.empty() &&
        !store_.lost_ids().empty()) {
        refind::LostWindowBatch batch;
        for (int id : store_.lost_ids()) {
            const Tracklet& t = store_.tracklet(id);
            batch.tracklet_ids.push_back(id);
            batch.windows.push_back(store_.history_window(id, refind_->window_len()));
            batch.last_alive.emplace_back(t.last_observed_frame(),
                                          t.last_observed_box());
        }
        refind::RestDetBatch rest;
        rest.frame = frame;
        for (int det_idx : rest_high) {
            rest.det_refs.push_back(det_idx);
            rest.boxes.push_back(detections[det_idx].box);
        }
        refind::Normalizer norm{cfg_.frame_w, cfg_.frame_h, frame, cfg_.max_lost_age};
        const refind::CorrelationResult corr =
            refind_->score_and_match(batch, rest, norm, cfg_.refind_thresh);
        std::set<int> used_dets;
        for (const auto& m : corr.matches) {
            const Detection& det = detections[m.det_ref];
            Tracklet& t = store_.tracklet(m.tracklet_id);
            const auto corrected = refind::error_compensate(t, det);
            store_.refresh_partition(m.tracklet_id);
            for (const auto& [f, box] : corrected) {
                result.rows.push_back({f, m.tracklet_id, box, det.score, true});
            }
            result.rows.push_back({frame, m.tracklet_id, det.box, det.score, false});
            used_dets.insert(m.det_ref);
            ++result.refind_matches;
        }
        std::erase_if(rest_high, [&](int i) { return used_dets.contains(i); });
    }

    ////////// Step 7: spawn new tracklets from leftover high dets //////////
    for (int det_idx : rest_high) {
        const auto id = store_.spawn(detections[det_idx], cfg_.init_score);
        if (id.has_value()) {
            if (cfg_.mode == TrackerMode::kBaselineKf) {
                kf_states_.emplace(*id, kf_init(detections[det_idx].box));
            }
            result.rows.push_back({frame, *id, detections[det_idx].box,
                                   detections[det_idx].score, false});
            ++result.spawned;
        }
    }

    ////////// Step 8: retire tracklets lost for too long //////////
    const std::vector<int> reaped = store_.reap(frame, cfg_.max_lost_age);
    for (int id : reaped) {
        kf_states_.erase(id);
    }
    result.reaped = static_cast<int>(reaped.size());

    std::sort(result.rows.begin(), result.rows.end(),
              [](const TrackRow& a, const TrackRow& b) {
                  return std::tie(a.frame, a.id) < std::tie(b.frame, b.id);
              });
    return result;
}

std::vector<TrackRow> run_sequence(
    const std::map<int, std::vector<Detection>>& detections_by_frame,
    const TrackerConfig& cfg, std::optional<interaction::Model> interaction_model,
    std::optional<refind::Model> refind_model,
    const std::map<int, Affine>& camera_motion) {
    std::vector<TrackRow> rows;
    if (detections_by_frame.empty()) {
        return rows;
    }
    Tracker tracker(cfg, std::move(interaction_model), std::move(refind_model));
    const int first = detections_by_frame.begin()->first;
    const int last = detections_by_frame.rbegin()->first;
    static const std::vector<Detection> kNone;
    for (int frame = first; frame <= last; ++frame) {
        const auto it = detections_by_frame.find(frame);
        const auto& dets = it == detections_by_frame.end() ? kNone : it->second;
        std::optional<Affine> camera;
        if (const auto cit = camera_motion.find(frame); cit != camera_motion.end()) {
            camera = cit->second;
        }
        FrameResult fr = tracker.step(frame, dets, camera);
        rows.insert(rows.end(), fr.rows.begin(), fr.rows.end());
    }
    std::sort(rows.begin(), rows.end(), [](const TrackRow& a, const TrackRow& b) {
        return std::tie(a.frame, a.id) < std::tie(b.frame, b.id);
    });
    return rows;
}

}  // namespace crowdtrack
