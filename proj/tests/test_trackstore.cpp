#include <doctest.h>

#include <random>
#include <set>

#include "crowdtrack/trackstore.hpp"

using namespace crowdtrack;

namespace {

Detection det(int frame, double x = 0, double y = 0, double score = 0.9) {
    return {frame, Box{x, y, 10, 20}, score};
}

/// Checks the documented tracklet invariants.
void check_invariants(const TrackStore& store) {
    std::set<int> seen;
    for (int id : store.active_ids()) {
        REQUIRE(!seen.contains(id));
        seen.insert(id);
        const Tracklet& t = store.tracklet(id);
        REQUIRE(!t.history.empty());
        for (size_t i = 1; i < t.history.size(); ++i) {
            REQUIRE(t.history[i].frame == t.history[i - 1].frame + 1);
        }
        if (t.state == TrackState::kAlive) {
            REQUIRE(t.newest().observed);
            REQUIRE(store.alive_ids().contains(id));
            REQUIRE(!store.lost_ids().contains(id));
        } else if (t.state == TrackState::kLost) {
            REQUIRE(t.lost_frame.has_value());
            REQUIRE(store.lost_ids().contains(id));
            for (const auto& e : t.history) {
                if (e.frame >= *t.lost_frame) {
                    REQUIRE(!e.observed);
                }
            }
        }
    }
}

}  // namespace

TEST_CASE("spawn: threshold, ids, rejection") {
    TrackStore store;
    const auto id = store.spawn(det(1, 0, 0, 0.8));
    REQUIRE(id.has_value());
    CHECK(*id == 1);
    CHECK(store.alive_ids().size() == 1);

    CHECK(!store.spawn(det(1, 5, 5, 0.69)).has_value());
    CHECK(store.size() == 1);

    const auto id2 = store.spawn(det(1, 9, 9, 0.95));
    REQUIRE(id2.has_value());
    CHECK(*id2 == 2);
}

TEST_CASE("update_alive: append, offset, contiguity contract") {
    TrackStore store;
    const int id = *store.spawn(det(5, 0, 0, 0.9));
    store.update_alive(id, det(6, 3, -1));
    const Tracklet& t = store.tracklet(id);
    CHECK(t.history.size() == 2);
    CHECK(t.last_offset == Offset{3, -1, 0, 0});
    CHECK(t.state == TrackState::kAlive);

    CHECK_THROWS_AS(store.update_alive(id, det(8, 0, 0)), std::logic_error);
}

TEST_CASE("mark_lost: transition, tail growth, stable lost_frame") {
    TrackStore store;
    const int id = *store.spawn(det(1, 0, 0, 0.9));
    store.mark_lost(id, 2, Box{1, 0, 10, 20});
    const Tracklet& t = store.tracklet(id);
    CHECK(t.state == TrackState::kLost);
    CHECK(t.lost_frame == 2);
    CHECK(!t.newest().observed);

    store.mark_lost(id, 3, Box{2, 0, 10, 20});
    CHECK(t.history.size() == 3);
    CHECK(t.lost_frame == 2);  // unchanged on repeated mark_lost
    CHECK(store.lost_ids().contains(id));
}

TEST_CASE("reap: age boundary and alive immunity") {
    TrackStore store;
    const int lost_id = *store.spawn(det(1, 0, 0, 0.9));
    const int alive_id = *store.spawn(det(1, 50, 0, 0.9));
    store.mark_lost(lost_id, 2, Box{0, 0, 10, 20});

    // lost for 60 frames at frame 62: kept
    CHECK(store.reap(62, 60).empty());
    CHECK(store.contains(lost_id));
    // lost for 61 frames at frame 63: reaped
    const auto removed = store.reap(63, 60);
    REQUIRE(removed.size() == 1);
    CHECK(removed[0] == lost_id);
    CHECK(!store.contains(lost_id));
    CHECK(store.contains(alive_id));

    // idempotent at a fixed frame
    CHECK(store.reap(63, 60).empty());
}

TEST_CASE("history_window: exact, padded, observed-only") {
    TrackStore store;
    const int id = *store.spawn(det(1, 1, 0, 0.9));
    for (int f = 2; f <= 40; ++f) {
        store.update_alive(id, det(f, f, 0));
    }
    auto window = store.history_window(id, 30);
    REQUIRE(window.size() == 30);
    CHECK(window.front().first == 11);
    CHECK(window.back().first == 40);

    TrackStore store2;
    const int id2 = *store2.spawn(det(1, 1, 0, 0.9));
    for (int f = 2; f <= 5; ++f) {
        store2.update_alive(id2, det(f, f, 0));
    }
    window = store2.history_window(id2, 30);
    REQUIRE(window.size() == 30);
    for (int i = 0; i < 26; ++i) {
        CHECK(window[i].first == 1);  // earliest repeated
    }
    CHECK(window[26].first == 2);
    CHECK(window[29].first == 5);
    for (size_t i = 1; i < window.size(); ++i) {
        CHECK(window[i].first >= window[i - 1].first);
    }

    // unobserved tail is skipped
    TrackStore store3;
    const int id3 = *store3.spawn(det(1, 1, 0, 0.9));
    for (int f = 2; f <= 30; ++f) {
        store3.update_alive(id3, det(f, f, 0));
    }
    for (int f = 31; f <= 40; ++f) {
        store3.mark_lost(id3, f, Box{0, 0, 10, 20});
    }
    window = store3.history_window(id3, 30);
    REQUIRE(window.size() == 30);
    CHECK(window.back().first == 30);
}

TEST_CASE("window_from_history rejects empty input") {
    CHECK_THROWS(window_from_history({}, 30));
}

TEST_CASE("model-based random op sequences keep invariants") {
    std::mt19937_64 rng(23);
    for (int run = 0; run < 50; ++run) {
        TrackStore store;
        int frame = 1;
        std::set<int> ever_issued;
        for (int op = 0; op < 200; ++op) {
            const int choice = static_cast<int>(rng() % 5);
            switch (choice) {
                case 0: {
                    const auto id = store.spawn(
                        det(frame, static_cast<double>(rng() % 100), 0.0,
                            0.5 + 0.5 * (rng() % 100) / 100.0));
                    if (id.has_value()) {
                        CHECK(!ever_issued.contains(*id));
                        ever_issued.insert(*id);
                    }
                    break;
                }
                case 1:
                case 2: {
                    // advance the frame: every tracklet must receive an entry
                    ++frame;
                    for (int id : store.active_ids()) {
                        if (rng() % 2 == 0) {
                            store.update_alive(id, det(frame, 0, 0));
                        } else {
                            store.mark_lost(id, frame, Box{0, 0, 10, 20});
                        }
                    }
                    break;
                }
                case 3:
                    store.reap(frame, 1 + static_cast<int>(rng() % 10));
                    break;
                case 4: {
                    const auto ids = store.active_ids();
                    if (!ids.empty()) {
                        const Tracklet& t =
                            store.tracklet(ids[rng() % ids.size()]);
                        if (t.observed_count() > 0) {
                            store.history_window(t.id, 30);
                        }
                    }
                    break;
                }
            }
            check_invariants(store);
        }
    }
}
