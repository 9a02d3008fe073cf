#include "cellmb/motion.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace cellmb;

namespace {

// Integrates the continuous coordinated-turn ODE with classical RK4.
StateVec integrate_turn(StateVec x, double T, int steps) {
    auto deriv = [](const StateVec& s) {
        StateVec d;
        d << s(2), s(3), -s(4) * s(3), s(4) * s(2), 0.0;
        return d;
    };
    const double h = T / steps;
    for (int i = 0; i < steps; ++i) {
        const StateVec k1 = deriv(x);
        const StateVec k2 = deriv(x + 0.5 * h * k1);
        const StateVec k3 = deriv(x + 0.5 * h * k2);
        const StateVec k4 = deriv(x + h * k3);
        x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return x;
}

} // namespace

TEST(CoordinatedTurn, ConstantVelocityLimit) {
    StateVec x;
    x << 3, 4, 1, 0, 0;
    const StateVec y = coordinated_turn(x, 1.0);
    EXPECT_DOUBLE_EQ(y(0), 4.0);
    EXPECT_DOUBLE_EQ(y(1), 4.0);
    EXPECT_DOUBLE_EQ(y(2), 1.0);
    EXPECT_DOUBLE_EQ(y(3), 0.0);
}

TEST(CoordinatedTurn, QuarterTurnMatchesOde) {
    StateVec x;
    x << 0, 0, 1, 0, std::numbers::pi / 2;
    const StateVec y = coordinated_turn(x, 1.0);
    const StateVec ref = integrate_turn(x, 1.0, 2000);
    EXPECT_TRUE(y.isApprox(ref, 1e-10)) << y.transpose() << " vs " << ref.transpose();
    EXPECT_NEAR(y(2), 0.0, 1e-12);
    EXPECT_NEAR(y(3), 1.0, 1e-12);
}

TEST(CoordinatedTurn, GenericStateMatchesOde) {
    StateVec x;
    x << 10, -5, 3, -2, -0.37;
    EXPECT_TRUE(coordinated_turn(x, 2.5).isApprox(integrate_turn(x, 2.5, 4000), 1e-10));
}

TEST(CoordinatedTurn, ContinuousAcrossZeroTurn) {
    StateVec a, b;
    a << 1, 2, 3, 4, 0.0;
    b << 1, 2, 3, 4, 1e-7;
    EXPECT_TRUE(coordinated_turn(a, 1.0).isApprox(coordinated_turn(b, 1.0), 1e-6));
}

TEST(MotionModel, ProcessNoiseFollowsRoadDirection) {
    MotionModel m;
    m.sigma_t = 2.0;
    m.sigma_n = 0.5;
    m.sigma_turn_arcmin = 60.0;
    const auto Q0 = m.noise_cov(0.0);
    EXPECT_NEAR(Q0(0, 0), 4.0, 1e-12);
    EXPECT_NEAR(Q0(1, 1), 0.25, 1e-12);
    EXPECT_NEAR(Q0(0, 1), 0.0, 1e-12);
    const auto Q90 = m.noise_cov(std::numbers::pi / 2);
    EXPECT_NEAR(Q90(0, 0), 0.25, 1e-12);
    EXPECT_NEAR(Q90(1, 1), 4.0, 1e-12);
    EXPECT_NEAR(Q90(2, 2), std::pow(std::numbers::pi / 180.0, 2), 1e-15);
    // A road at 45 degrees mixes the axes equally.
    const auto Q45 = m.noise_cov(std::numbers::pi / 4);
    EXPECT_NEAR(Q45(0, 0), Q45(1, 1), 1e-12);
    EXPECT_NEAR(std::abs(Q45(0, 1)), 0.5 * (4.0 - 0.25), 1e-12);
}

TEST(MotionModel, ProcessCovIsGammaQGammaT) {
    MotionModel m;
    m.dt = 0.5;
    const auto G = m.noise_gain();
    EXPECT_DOUBLE_EQ(G(0, 0), 0.125);
    EXPECT_DOUBLE_EQ(G(2, 0), 0.5);
    EXPECT_DOUBLE_EQ(G(4, 2), 0.5);
    const StateMat P = m.process_cov(0.3);
    EXPECT_TRUE(P.isApprox(G * m.noise_cov(0.3) * G.transpose()));
    EXPECT_TRUE(P.isApprox(P.transpose()));
}

TEST(MotionModel, RoadAngleOffGridUsesNearestCell) {
    const CellGrid g(Vec2(0, 0), Vec2(10, 10), 2, 2);
    MotionModel m;
    m.road_angle = {0.1, 0.2, 0.3, 0.4};
    EXPECT_DOUBLE_EQ(m.road_angle_at(g, Vec2(15, 5)), 0.2);
    EXPECT_DOUBLE_EQ(m.road_angle_at(g, Vec2(25, -3)), 0.2);
    EXPECT_DOUBLE_EQ(m.road_angle_at(g, Vec2(-1, 30)), 0.3);
    m.road_angle.clear();
    EXPECT_DOUBLE_EQ(m.road_angle_at(g, Vec2(5, 5)), 0.0);
}

TEST(UnscentedTransform, ExactForAffineMaps) {
    StateMat A = StateMat::Identity();
    A(0, 2) = 0.7;
    A(1, 3) = -0.4;
    A(3, 4) = 2.0;
    StateVec b;
    b << 1, -2, 0.5, 0, 3;
    StateVec m;
    m << 4, 5, 1, -1, 0.1;
    StateMat L = StateMat::Zero();
    L.diagonal() << 2, 1.5, 0.4, 0.3, 0.02;
    L(1, 0) = 0.5;
    L(3, 2) = 0.1;
    const StateMat P = L * L.transpose();
    const auto [mu, S] = unscented_transform(m, P, [&](const StateVec& x) { return StateVec(A * x + b); });
    EXPECT_TRUE(mu.isApprox(A * m + b, 1e-12));
    EXPECT_TRUE(S.isApprox(A * P * A.transpose(), 1e-10));
}

TEST(UnscentedTransform, SemidefiniteCovariance) {
    StateVec m;
    m << 0, 0, 1, 0, 0;
    StateMat P = StateMat::Zero();
    P(0, 0) = 1.0;
    const auto [mu, S] = unscented_transform(m, P, [](const StateVec& x) { return coordinated_turn(x, 1.0); });
    EXPECT_TRUE(mu.allFinite());
    EXPECT_NEAR(S(0, 0), 1.0, 1e-12);
}
