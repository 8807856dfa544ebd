#pragma once

#include <Eigen/Dense>

#include "crowdtrack/geometry.hpp"

namespace crowdtrack {

/// Constant-velocity Kalman state over (x, y, w, h, vx, vy, vw, vh).
/// Noise scales follow the SORT lineage: standard deviations proportional to
/// the box height. The velocity prior is quasi-diffuse, so two updates pin an
/// exactly-linear track.
struct KfState {
    Eigen::Matrix<double, 8, 1> mean;
    Eigen::Matrix<double, 8, 8> covariance;
};

KfState kf_init(const Box& b);
KfState kf_predict(const KfState& s);
KfState kf_update(const KfState& s, const Box& det);

Box kf_box(const KfState& s);

}  // namespace crowdtrack
