#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "crowdtrack/geometry.hpp"

namespace crowdtrack {

enum class TrackState { kAlive, kLost, kDead };

/// One frame of a tracklet's trajectory. Observed entries come from matched
/// detections; unobserved entries are motion-model predictions recorded while
/// lost. Compensated entries are unobserved entries later corrected by the
/// refind error compensation.
struct TrackEntry {
    int frame = 0;
    Box box;
    bool observed = false;
    bool compensated = false;
};

struct Tracklet {
    int id = 0;
    TrackState state = TrackState::kAlive;
    int birth_frame = 0;
    std::optional<int> lost_frame;  // first unobserved frame of the current lost spell
    std::vector<TrackEntry> history;
    Offset last_offset;

    const TrackEntry& newest() const { return history.back(); }
    int newest_frame() const { return history.back().frame; }
    /// Frame of the most recent observed entry.
    int last_observed_frame() const;
    const Box& last_observed_box() const;
    int observed_count() const;
};

/// Pads/truncates an observed-location history to exactly `n` entries,
/// repeating the earliest entry when fewer than `n` exist.
std::vector<std::pair<int, Box>> window_from_history(
    const std::vector<std::pair<int, Box>>& observed, int n);

/// Mutable collection of tracklets for one sequence. Single-writer.
class TrackStore {
public:
    /// Creates an Alive tracklet when det.score >= init_threshold; returns
    /// the new id, or nullopt when the detection is below threshold.
    std::optional<int> spawn(const Detection& det, double init_threshold = 0.7);

    /// Appends a matched detection; tracklet becomes (or stays) Alive.
    /// Requires det.frame == newest history frame + 1.
    void update_alive(int id, const Detection& det);

    /// Appends a prediction for an unmatched tracklet; tracklet becomes
    /// (or stays) Lost.
    void mark_lost(int id, int frame, const Box& predicted);

    /// Kills tracklets lost for more than max_lost_age frames. Returns
    /// removed ids.
    std::vector<int> reap(int current_frame, int max_lost_age);

    /// Last n observed locations of a tracklet, oldest first, left-padded by
    /// repeating the earliest observed entry. Throws when none are observed.
    std::vector<std::pair<int, Box>> history_window(int id, int n = 30) const;

    Tracklet& tracklet(int id);
    const Tracklet& tracklet(int id) const;
    bool contains(int id) const { return tracklets_.contains(id); }

    /// Non-dead ids in ascending order.
    std::vector<int> active_ids() const;
    const std::set<int>& alive_ids() const { return alive_; }
    const std::set<int>& lost_ids() const { return lost_; }
    size_t size() const { return tracklets_.size(); }

    /// Moves a tracklet between the alive/lost partitions after an external
    /// state change (used by refind's error compensation).
    void refresh_partition(int id);

private:
    void append_entry(Tracklet& t, const TrackEntry& entry);

    std::map<int, Tracklet> tracklets_;
    std::set<int> alive_;
    std::set<int> lost_;
    int next_id_ = 1;
};

}  // namespace crowdtrack
