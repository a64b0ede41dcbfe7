#pragma once

#include <array>

#include <Eigen/Core>

#include "langtrack/geometry.hpp"

namespace langtrack {

using StateVector = Eigen::Matrix<double, 7, 1>;
using StateMatrix = Eigen::Matrix<double, 7, 7>;
using MeasurementVector = Eigen::Matrix<double, 4, 1>;
using MeasurementMatrix = Eigen::Matrix<double, 4, 7>;
using MeasurementCov = Eigen::Matrix<double, 4, 4>;

/// Filter state. mean = [cx, cy, s, r, v_cx, v_cy, v_s]; the aspect ratio has no velocity.
struct KalmanState {
    StateVector mean = StateVector::Zero();
    StateMatrix cov = StateMatrix::Identity();

    StateBox state_box() const noexcept { return {mean(0), mean(1), mean(2), mean(3)}; }
};

/// Diagonals of the noise matrices. Defaults are the usual SORT-family constants.
struct NoiseConfig {
    std::array<double, 4> measurement{1.0, 1.0, 10.0, 10.0};
    std::array<double, 7> initial_cov{10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4};
    std::array<double, 7> process{1.0, 1.0, 1.0, 1.0, 1e-2, 1e-2, 1e-4};
};

/// Constant-velocity model with unit frame step.
class MotionModel {
public:
    explicit MotionModel(const NoiseConfig& noise = {});

    const StateMatrix& transition() const noexcept { return F_; }
    const MeasurementMatrix& observation() const noexcept { return H_; }
    const StateMatrix& process_noise() const noexcept { return Q_; }
    const MeasurementCov& measurement_noise() const noexcept { return R_; }

    /// Zero-velocity state centred on obs. Throws DegenerateStateError for s <= 0 or r <= 0.
    KalmanState init(const StateBox& obs) const;

    /// One frame ahead. A velocity that would drive the area negative is zeroed first.
    KalmanState predict(const KalmanState& state) const;

    /// Kalman correction (Joseph form). Throws DegenerateStateError on a non-finite or
    /// degenerate observation.
    KalmanState update(const KalmanState& state, const StateBox& obs) const;

    /// Re-update after a gap: replays predict+update from the state frozen at the last
    /// observation through gap-1 observations interpolated linearly (in StateBox space)
    /// between last_obs and new_obs, then new_obs itself. gap is the frame distance
    /// between the two real observations; throws UsageError when gap < 1.
    KalmanState reupdate(const KalmanState& state_at_loss, const StateBox& last_obs,
                         const StateBox& new_obs, int gap) const;

private:
    StateMatrix F_;
    MeasurementMatrix H_;
    StateMatrix Q_;
    MeasurementCov R_;
    StateMatrix P0_;
};

/// Mean box of a state; a zero-size box at the centre when the state has drifted degenerate.
BBox state_to_bbox(const KalmanState& state) noexcept;

/// Linear interpolation between two state boxes, t in [0,1].
StateBox interpolate(const StateBox& a, const StateBox& b, double t) noexcept;

}  // namespace langtrack
