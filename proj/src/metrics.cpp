#include "crowdtrack/metrics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "crowdtrack/assignment.hpp"

namespace crowdtrack::evalio {

namespace {

constexpr double kBlocked = 1e6;

std::set<int> all_frames(const FrameBoxes& a, const FrameBoxes& b) {
    std::set<int> frames;
    for (const auto& [f, v] : a) frames.insert(f);
    for (const auto& [f, v] : b) frames.insert(f);
    return frames;
}

}  // namespace

FrameBoxes group_rows(const std::vector<MotRow>& rows) {
    FrameBoxes out;
    for (const auto& r : rows) {
        out[r.frame].emplace_back(r.id, r.box);
    }
    for (auto& [f, v] : out) {
        std::sort(v.begin(), v.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    return out;
}

ClearCounts clear_metrics(const FrameBoxes& gt, const FrameBoxes& hyp,
                          double iou_gate) {
    ClearCounts counts;
    std::map<int, int> last_match;          // gt id -> last assigned hyp id
    std::map<int, bool> matched_prev;       // gt id -> matched at its last appearance
    std::map<int, bool> ever_matched;

    static const std::vector<std::pair<int, Box>> kEmpty;
    for (int frame : all_frames(gt, hyp)) {
        const auto git = gt.find(frame);
        const auto hit = hyp.find(frame);
        const auto& gts = git == gt.end() ? kEmpty : git->second;
        const auto& hyps = hit == hyp.end() ? kEmpty : hit->second;
        counts.num_gt += static_cast<int>(gts.size());

        std::vector<char> gt_used(gts.size(), 0), hyp_used(hyps.size(), 0);
        std::vector<std::pair<int, int>> matches;  // (gt idx, hyp idx)

        // keep last frame's pairing while it still clears the gate
        for (size_t g = 0; g < gts.size(); ++g) {
            const auto prev = last_match.find(gts[g].first);
            if (prev == last_match.end()) continue;
            for (size_t h = 0; h < hyps.size(); ++h) {
                if (hyp_used[h] || hyps[h].first != prev->second) continue;
                if (iou(gts[g].second, hyps[h].second) >= iou_gate) {
                    matches.emplace_back(g, h);
                    gt_used[g] = 1;
                    hyp_used[h] = 1;
                }
                break;
            }
        }

        // optimal assignment over the rest
        std::vector<int> free_g, free_h;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (!gt_used[g]) free_g.push_back(static_cast<int>(g));
        }
        for (size_t h = 0; h < hyps.size(); ++h) {
            if (!hyp_used[h]) free_h.push_back(static_cast<int>(h));
        }
        if (!free_g.empty() && !free_h.empty()) {
            std::vector<double> cost(free_g.size() * free_h.size());
            for (size_t r = 0; r < free_g.size(); ++r) {
                for (size_t c = 0; c < free_h.size(); ++c) {
                    const double v =
                        iou(gts[free_g[r]].second, hyps[free_h[c]].second);
                    cost[r * free_h.size() + c] = v >= iou_gate ? 1.0 - v : kBlocked;
                }
            }
            const Assignment a = assign(cost, static_cast<int>(free_g.size()),
                                        static_cast<int>(free_h.size()));
            for (const auto& [r, c] : a.pairs) {
                if (cost[r * free_h.size() + c] >= kBlocked) continue;
                matches.emplace_back(free_g[r], free_h[c]);
            }
        }

        std::sort(matches.begin(), matches.end());
        std::vector<char> gt_matched(gts.size(), 0), hyp_matched(hyps.size(), 0);
        for (const auto& [g, h] : matches) {
            gt_matched[g] = 1;
            hyp_matched[h] = 1;
            ++counts.tp;
            const int gt_id = gts[g].first;
            const int hyp_id = hyps[h].first;
            const auto prev = last_match.find(gt_id);
            if (prev != last_match.end() && prev->second != hyp_id) {
                ++counts.id_switches;
            }
            if (ever_matched[gt_id] && !matched_prev[gt_id]) {
                ++counts.frag;  // matched -> gap -> matched again
            }
            last_match[gt_id] = hyp_id;
            ever_matched[gt_id] = true;
        }
        for (size_t g = 0; g < gts.size(); ++g) {
            matched_prev[gts[g].first] = gt_matched[g] != 0;
            if (!gt_matched[g]) ++counts.fn;
        }
        for (size_t h = 0; h < hyps.size(); ++h) {
            if (!hyp_matched[h]) ++counts.fp;
        }
    }
    return counts;
}

double idf1(const FrameBoxes& gt, const FrameBoxes& hyp, double iou_gate,
            MetricsReport* detail) {
    // per-id frame maps
    std::map<int, std::map<int, Box>> gt_ids, hyp_ids;
    for (const auto& [frame, boxes] : gt) {
        for (const auto& [id, box] : boxes) gt_ids[id][frame] = box;
    }
    for (const auto& [frame, boxes] : hyp) {
        for (const auto& [id, box] : boxes) hyp_ids[id][frame] = box;
    }
    std::vector<int> gids, hids;
    for (const auto& [id, m] : gt_ids) gids.push_back(id);
    for (const auto& [id, m] : hyp_ids) hids.push_back(id);
    const int ng = static_cast<int>(gids.size());
    const int nh = static_cast<int>(hids.size());

    int total_gt = 0, total_hyp = 0;
    for (const auto& [id, m] : gt_ids) total_gt += static_cast<int>(m.size());
    for (const auto& [id, m] : hyp_ids) total_hyp += static_cast<int>(m.size());
    if (total_gt + total_hyp == 0) {
        if (detail) {
            detail->idf1 = 1.0;
        }
        return 1.0;
    }
    if (ng == 0 || nh == 0) {
        if (detail) {
            detail->idtp = 0;
            detail->idfn = total_gt;
            detail->idfp = total_hyp;
            detail->idf1 = 0.0;
        }
        return 0.0;
    }

    // overlap counts m(g, h)
    std::vector<int> overlap(static_cast<size_t>(ng) * nh, 0);
    for (int g = 0; g < ng; ++g) {
        const auto& gmap = gt_ids[gids[g]];
        for (int h = 0; h < nh; ++h) {
            const auto& hmap = hyp_ids[hids[h]];
            int m = 0;
            for (const auto& [frame, gbox] : gmap) {
                const auto it = hmap.find(frame);
                if (it != hmap.end() && iou(gbox, it->second) >= iou_gate) {
                    ++m;
                }
            }
            overlap[g * nh + h] = m;
        }
    }

    // padded square assignment minimizing IDFP + IDFN
    const int n = ng + nh;
    std::vector<double> cost(static_cast<size_t>(n) * n, 0.0);
    auto gt_len = [&](int g) { return static_cast<double>(gt_ids[gids[g]].size()); };
    auto hyp_len = [&](int h) { return static_cast<double>(hyp_ids[hids[h]].size()); };
    for (int g = 0; g < n; ++g) {
        for (int h = 0; h < n; ++h) {
            double v;
            if (g < ng && h < nh) {
                v = gt_len(g) + hyp_len(h) - 2.0 * overlap[g * nh + h];
            } else if (g < ng) {
                v = gt_len(g);
            } else if (h < nh) {
                v = hyp_len(h);
            } else {
                v = 0.0;
            }
            cost[g * n + h] = v;
        }
    }
    const Assignment a = assign(cost, n, n);
    const double total_cost = a.total_cost;  // IDFN + IDFP
    const double idtp = 0.5 * (total_gt + total_hyp - total_cost);
    const double value = 2.0 * idtp / (total_gt + total_hyp);
    if (detail) {
        detail->idtp = static_cast<int>(idtp + 0.5);
        detail->idfn = total_gt - detail->idtp;
        detail->idfp = total_hyp - detail->idtp;
        detail->idf1 = value;
    }
    return value;
}

MetricsReport evaluate(const FrameBoxes& gt, const FrameBoxes& hyp, double iou_gate) {
    MetricsReport report;
    const ClearCounts c = clear_metrics(gt, hyp, iou_gate);
    report.mota = c.mota();
    report.fp = c.fp;
    report.fn = c.fn;
    report.id_switches = c.id_switches;
    report.frag = c.frag;
    report.num_gt = c.num_gt;
    idf1(gt, hyp, iou_gate, &report);
    return report;
}

std::vector<int> crowd_stratum(const std::vector<MotRow>& gt_rows, int min_duration,
                               double vis_threshold) {
    std::map<int, std::vector<std::pair<int, double>>> vis_by_id;
    for (const auto& r : gt_rows) {
        if (r.visibility < 0.0) {
            throw std::invalid_argument("crowd_mota: gt lacks visibility");
        }
        vis_by_id[r.id].emplace_back(r.frame, r.visibility);
    }
    std::vector<int> stratum;
    for (auto& [id, entries] : vis_by_id) {
        std::sort(entries.begin(), entries.end());
        int run = 0, best = 0, prev_frame = -2;
        for (const auto& [frame, vis] : entries) {
            if (vis < vis_threshold) {
                run = frame == prev_frame + 1 && run > 0 ? run + 1 : 1;
                best = std::max(best, run);
            } else {
                run = 0;
            }
            prev_frame = frame;
        }
        if (best >= min_duration) {
            stratum.push_back(id);
        }
    }
    return stratum;
}

std::optional<double> crowd_mota(const std::vector<MotRow>& gt_rows,
                                 const FrameBoxes& hyp, int min_duration,
                                 double vis_threshold, double iou_gate) {
    const std::vector<int> stratum = crowd_stratum(gt_rows, min_duration, vis_threshold);
    if (stratum.empty()) {
        return std::nullopt;
    }
    const std::set<int> keep(stratum.begin(), stratum.end());

    FrameBoxes gt_keep, gt_removed;
    for (const auto& r : gt_rows) {
        (keep.contains(r.id) ? gt_keep : gt_removed)[r.frame].emplace_back(r.id, r.box);
    }

    // drop hypothesis boxes that explain the removed gt, so they are not FP
    FrameBoxes hyp_kept;
    static const std::vector<std::pair<int, Box>> kEmpty;
    for (const auto& [frame, hboxes] : hyp) {
        const auto rit = gt_removed.find(frame);
        const auto& removed = rit == gt_removed.end() ? kEmpty : rit->second;
        std::vector<char> drop(hboxes.size(), 0);
        if (!removed.empty()) {
            std::vector<double> cost(removed.size() * hboxes.size());
            for (size_t r = 0; r < removed.size(); ++r) {
                for (size_t c = 0; c < hboxes.size(); ++c) {
                    const double v = iou(removed[r].second, hboxes[c].second);
                    cost[r * hboxes.size() + c] = v >= iou_gate ? 1.0 - v : kBlocked;
                }
            }
            const Assignment a = assign(cost, static_cast<int>(removed.size()),
                                        static_cast<int>(hboxes.size()));
            for (const auto& [r, c] : a.pairs) {
                if (cost[r * hboxes.size() + c] < kBlocked) {
                    drop[c] = 1;
                }
            }
        }
        for (size_t c = 0; c < hboxes.size(); ++c) {
            if (!drop[c]) {
                hyp_kept[frame].push_back(hboxes[c]);
            }
        }
    }
    return clear_metrics(gt_keep, hyp_kept, iou_gate).mota();
}

}  // namespace crowdtrack::evalio
