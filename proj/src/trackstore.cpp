#include "crowdtrack/trackstore.hpp"

#include <algorithm>
#include <stdexcept>

namespace crowdtrack {

int Tracklet::last_observed_frame() const {
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
        if (it->observed) {
            return it->frame;
        }
    }
    throw std::logic_error("tracklet has no observed entries");
}

const Box& Tracklet::last_observed_box() const {
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
        if (it->observed) {
            return it->box;
        }
    }
    throw std::logic_error("tracklet has no observed entries");
}

int Tracklet::observed_count() const {
    return static_cast<int>(
        std::count_if(history.begin(), history.end(),
                      [](const TrackEntry& e) { return e.observed; }));
}

std::vector<std::pair<int, Box>> window_from_history(
    const std::vector<std::pair<int, Box>>& observed, int n) {
    if (observed.empty()) {
        throw std::invalid_argument("window_from_history: no observed entries");
    }
    std::vector<std::pair<int, Box>> out;
    out.reserve(n);
    const int count = static_cast<int>(observed.size());
    if (count >= n) {
        out.assign(observed.end() - n, observed.end());
        return out;
    }
    // repeat the earliest location to preserve positional scale
    for (int i = 0; i < n - count; ++i) {
        out.push_back(observed.front());
    }
    out.insert(out.end(), observed.begin(), observed.end());
    return out;
}

std::optional<int> TrackStore::spawn(const Detection& det, double init_threshold) {
    if (det.score < init_threshold) {
        return std::nullopt;
    }
    Tracklet t;
    t.id = next_id_++;
    t.state = TrackState::kAlive;
    t.birth_frame = det.frame;
    t.history.push_back({det.frame, det.box, /*observed=*/true, false});
    t.last_offset = Offset{};
    const int id = t.id;
    tracklets_.emplace(id, std::move(t));
    alive_.insert(id);
    return id;
}

void TrackStore::append_entry(Tracklet& t, const TrackEntry& entry) {
    if (entry.frame != t.newest_frame() + 1) {
        throw std::logic_error("tracklet history must stay contiguous");
    }
    t.last_offset = offset_between(t.newest().box, entry.box);
    t.history.push_back(entry);
}

void TrackStore::update_alive(int id, const Detection& det) {
    Tracklet& t = tracklet(id);
    if (t.state == TrackState::kDead) {
        throw std::logic_error("update_alive on dead tracklet");
    }
    append_entry(t, {det.frame, det.box, /*observed=*/true, false});
    t.state = TrackState::kAlive;
    t.lost_frame.reset();
    refresh_partition(id);
}

void TrackStore::mark_lost(int id, int frame, const Box& predicted) {
    Tracklet& t = tracklet(id);
    if (t.state == TrackState::kDead) {
        throw std::logic_error("mark_lost on dead tracklet");
    }
    append_entry(t, {frame, predicted, /*observed=*/false, false});
    if (t.state != TrackState::kLost) {
        t.state = TrackState::kLost;
        t.lost_frame = frame;
    }
    refresh_partition(id);
}

std::vector<int> TrackStore::reap(int current_frame, int max_lost_age) {
    std::vector<int> removed;
    for (auto it = tracklets_.begin(); it != tracklets_.end();) {
        Tracklet& t = it->second;
        if (t.state == TrackState::kLost &&
            current_frame - *t.lost_frame > max_lost_age) {
            removed.push_back(t.id);
            lost_.erase(t.id);
            alive_.erase(t.id);
            it = tracklets_.erase(it);
        } else {
            ++it;
        }
    }
    return removed;
}

std::vector<std::pair<int, Box>> TrackStore::history_window(int id, int n) const {
    const Tracklet& t = tracklet(id);
    std::vector<std::pair<int, Box>> observed;
    for (const auto& e : t.history) {
        if (e.observed) {
            observed.emplace_back(e.frame, e.box);
        }
    }
    return window_from_history(observed, n);
}

Tracklet& TrackStore::tracklet(int id) {
    auto it = tracklets_.find(id);
    if (it == tracklets_.end()) {
        throw std::out_of_range("unknown tracklet id");
    }
    return it->second;
}

const Tracklet& TrackStore::tracklet(int id) const {
    auto it = tracklets_.find(id);
    if (it == tracklets_.end()) {
        throw std::out_of_range("unknown tracklet id");
    }
    return it->second;
}

std::vector<int> TrackStore::active_ids() const {
    std::vector<int> ids;
    ids.reserve(tracklets_.size());
    for (const auto& [id, t] : tracklets_) {
        if (t.state != TrackState::kDead) {
            ids.push_back(id);
        }
    }
    return ids;
}

void TrackStore::refresh_partition(int id) {
    const Tracklet& t = tracklet(id);
    alive_.erase(id);
    lost_.erase(id);
    if (t.state == TrackState::kAlive) {
        alive_.insert(id);
    } else if (t.state == TrackState::kLost) {
        lost_.insert(id);
    }
}

}  // namespace crowdtrack
