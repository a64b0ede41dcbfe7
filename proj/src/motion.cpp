#include "langtrack/motion.hpp"

#include <Eigen/Cholesky>

#include "langtrack/error.hpp"

namespace langtrack {

namespace {

void require_observation(const StateBox& obs, const char* op) {
    if (!is_finite(obs)) {
        throw DegenerateStateError(std::string(op) + ": non-finite observation");
    }
    if (!(obs.s > 0.0) || !(obs.r > 0.0)) {
        throw DegenerateStateError(std::string(op) + ": observation needs s > 0 and r > 0");
    }
}

}  // namespace

MotionModel::MotionModel(const NoiseConfig& noise) {
    F_ = StateMatrix::Identity();
    F_(0, 4) = 1.0;
    F_(1, 5) = 1.0;
    F_(2, 6) = 1.0;

    H_ = MeasurementMatrix::Zero();
    H_.leftCols<4>().setIdentity();

    Q_ = StateMatrix::Zero();
    P0_ = StateMatrix::Zero();
    for (int i = 0; i < 7; ++i) {
        Q_(i, i) = noise.process[static_cast<std::size_t>(i)];
        P0_(i, i) = noise.initial_cov[static_cast<std::size_t>(i)];
    }
    R_ = MeasurementCov::Zero();
    for (int i = 0; i < 4; ++i) R_(i, i) = noise.measurement[static_cast<std::size_t>(i)];
}

KalmanState MotionModel::init(const StateBox& obs) const {
    require_observation(obs, "init");
    KalmanState st;
    st.mean << obs.cx, obs.cy, obs.s, obs.r, 0.0, 0.0, 0.0;
    st.cov = P0_;
    return st;
}

KalmanState MotionModel::predict(const KalmanState& state) const {
    KalmanState out = state;
    if (out.mean(2) + out.mean(6) < 0.0) out.mean(6) = 0.0;
    out.mean = F_ * out.mean;
    StateMatrix cov = F_ * state.cov * F_.transpose() + Q_;
    out.cov = 0.5 * (cov + cov.transpose());
    return out;
}

KalmanState MotionModel::update(const KalmanState& state, const StateBox& obs) const {
    require_observation(obs, "update");
    MeasurementVector z;
    z << obs.cx, obs.cy, obs.s, obs.r;

    const MeasurementVector innovation = z - H_ * state.mean;
    const MeasurementCov S = H_ * state.cov * H_.transpose() + R_;
    // K = P H^T S^-1, solved rather than inverted.
    const Eigen::Matrix<double, 7, 4> PHt = state.cov * H_.transpose();
    const Eigen::Matrix<double, 7, 4> K = S.ldlt().solve(PHt.transpose()).transpose();

    KalmanState out;
    out.mean = state.mean + K * innovation;
    const StateMatrix IKH = StateMatrix::Identity() - K * H_;
    StateMatrix cov = IKH * state.cov * IKH.transpose() + K * R_ * K.transpose();
    out.cov = 0.5 * (cov + cov.transpose());
    return out;
}

KalmanState MotionModel::reupdate(const KalmanState& state_at_loss, const StateBox& last_obs,
                                  const StateBox& new_obs, int gap) const {
    if (gap < 1) throw UsageError("reupdate: gap must be >= 1");
    require_observation(last_obs, "reupdate");
    require_observation(new_obs, "reupdate");

    KalmanState st = state_at_loss;
    for (int i = 1; i < gap; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(gap);
        st = update(predict(st), interpolate(last_obs, new_obs, t));
    }
    return update(predict(st), new_obs);
}

BBox state_to_bbox(const KalmanState& state) noexcept {
    const StateBox sb = state.state_box();
    if (is_finite(sb) && sb.s >= 0.0 && sb.r > 0.0) return from_state(sb);
    return BBox{sb.cx, sb.cy, 0.0, 0.0};
}

StateBox interpolate(const StateBox& a, const StateBox& b, double t) noexcept {
    return StateBox{a.cx + (b.cx - a.cx) * t, a.cy + (b.cy - a.cy) * t, a.s + (b.s - a.s) * t,
                    a.r + (b.r - a.r) * t};
}

}  // namespace langtrack
