#pragma once

#include <map>
#include <optional>
#include <vector>

#include "crowdtrack/geometry.hpp"
#include "crowdtrack/mot_io.hpp"

namespace crowdtrack::evalio {

/// frame -> (id, box) list
using FrameBoxes = std::map<int, std::vector<std::pair<int, Box>>>;

FrameBoxes group_rows(const std::vector<MotRow>& rows);

struct ClearCounts {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    int id_switches = 0;
    int frag = 0;
    int num_gt = 0;

    double mota() const {
        return num_gt == 0 ? 1.0
                           : 1.0 - static_cast<double>(fp + fn + id_switches) / num_gt;
    }
};

struct MetricsReport {
    double mota = 0.0;
    double idf1 = 0.0;
    int fp = 0, fn = 0, id_switches = 0, frag = 0, num_gt = 0;
    int idtp = 0, idfp = 0, idfn = 0;
};

/// CLEAR protocol: per-frame matching that keeps the previous frame's match
/// when it still clears the IoU gate, optimal assignment for the rest.
ClearCounts clear_metrics(const FrameBoxes& gt, const FrameBoxes& hyp,
                          double iou_gate = 0.5);

/// Whole-sequence identity matching; IDF1 = 2*IDTP / (2*IDTP + IDFP + IDFN).
double idf1(const FrameBoxes& gt, const FrameBoxes& hyp, double iou_gate = 0.5,
            MetricsReport* detail = nullptr);

MetricsReport evaluate(const FrameBoxes& gt, const FrameBoxes& hyp,
                       double iou_gate = 0.5);

/// MOTA restricted to gt identities with at least min_duration consecutive
/// frames below the visibility threshold. Hypothesis boxes that match the
/// removed gt are discarded rather than counted as FP. Returns nullopt for an
/// empty stratum. Throws when gt rows lack visibility.
std::optional<double> crowd_mota(const std::vector<MotRow>& gt_rows,
                                 const FrameBoxes& hyp, int min_duration,
                                 double vis_threshold = 0.25,
                                 double iou_gate = 0.5);

/// The stratum ids crowd_mota evaluates.
std::vector<int> crowd_stratum(const std::vector<MotRow>& gt_rows,
                               int min_duration, double vis_threshold = 0.25);

}  // namespace crowdtrack::evalio
