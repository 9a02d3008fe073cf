#include "cellmb/undiscovered.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

using namespace cellmb;

namespace {

UndiscoveredModel identity_model(std::size_t P, double birth, double ps) {
    UndiscoveredModel m;
    m.lambda_birth.assign(P, birth);
    m.p_survival = ps;
    m.transition = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(P));
    return m;
}

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

} // namespace

TEST(PredictUndiscovered, IdentityIsUnchanged) {
    const std::vector<double> lam{0.1, 0.4, 0.0, 0.7};
    EXPECT_EQ(predict_undiscovered(lam, identity_model(4, 0.0, 1.0)), lam);
}

TEST(PredictUndiscovered, BirthAndSurvival) {
    const auto out = predict_undiscovered({1.0}, identity_model(1, 0.1, 0.9));
    EXPECT_NEAR(out[0], 1.0, 1e-15);
}

TEST(PredictUndiscovered, StochasticTransitionConservesMass) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd T(5, 5);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) T(i, j) = u(rng);
        T.row(i) /= T.row(i).sum();
    }
    UndiscoveredModel m = identity_model(5, 0.0, 1.0);
    m.transition = T;
    std::vector<double> lam{0.3, 0.2, 0.9, 0.1, 0.5};
    const double before = total(lam);
    for (int k = 0; k < 50; ++k) {
        lam = predict_undiscovered(lam, m);
        EXPECT_NEAR(total(lam), before, 1e-12);
    }
}

TEST(PredictUndiscovered, MatchesAffineRecursion) {
    Eigen::MatrixXd T(3, 3);
    T << 0.5, 0.5, 0.0, 0.2, 0.6, 0.2, 0.0, 0.3, 0.7;
    UndiscoveredModel m;
    m.lambda_birth = {0.01, 0.0, 0.02};
    m.p_survival = 0.95;
    m.transition = T;
    const std::vector<double> lam{0.4, 0.1, 0.2};
    const auto out = predict_undiscovered(lam, m);
    for (int j = 0; j < 3; ++j) {
        double expected = m.lambda_birth[j];
        for (int i = 0; i < 3; ++i) expected += m.p_survival * T(i, j) * lam[i];
        EXPECT_NEAR(out[j], expected, 1e-15);
    }
}

TEST(UpdateUndiscovered, Examples) {
    const std::vector<double> lam{0.137, 0.5, 0.2};
    EXPECT_EQ(update_undiscovered(lam, {false, false, false}, {0.9, 0.9, 0.9}), lam);
    const auto out = update_undiscovered(lam, {true, true, false}, {0.9, 1.0, 0.9});
    EXPECT_NEAR(out[0], 0.0137, 1e-15);
    EXPECT_EQ(out[1], 0.0);
    EXPECT_EQ(out[2], 0.2);
}

TEST(UndiscoveredModel, ValidateRejectsBadTransitions) {
    UndiscoveredModel m = identity_model(2, 0.0, 1.0);
    EXPECT_NO_THROW(m.validate());
    m.transition(0, 1) = 0.5;
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m.transition(0, 0) = 0.5;
    EXPECT_NO_THROW(m.validate());
    m.transition(1, 0) = -0.1;
    m.transition(1, 1) = 1.1;
    EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(DiffusionTransition, RowStochasticWithinRoi) {
    std::vector<bool> roi(9, false);
    for (CellIndex j : {1u, 3u, 4u, 5u, 7u}) roi[j] = true;
    const CellGrid g(Vec2(0, 0), Vec2(1, 1), 3, 3, roi, std::vector<bool>(9, true));
    const auto T = diffusion_transition(g, 0.6, 0.1);
    for (int i = 0; i < 9; ++i) EXPECT_NEAR(T.row(i).sum(), 1.0, 1e-12);
    // Centre cell: four ROI neighbours.
    EXPECT_NEAR(T(4, 4), 0.6, 1e-12);
    EXPECT_NEAR(T(4, 1), 0.1, 1e-12);
    // Edge cell 1 has one ROI neighbour (4): weights 0.6 and 0.1 renormalized.
    EXPECT_NEAR(T(1, 1), 0.6 / 0.7, 1e-12);
    EXPECT_NEAR(T(1, 4), 0.1 / 0.7, 1e-12);
    EXPECT_EQ(T(1, 0), 0.0);
    // Cells outside the ROI map to themselves.
    EXPECT_EQ(T(0, 0), 1.0);
}
