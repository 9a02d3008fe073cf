#include "cellmb/info_gain.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace cellmb;
using namespace cellmb::testing;

namespace {

std::vector<bool> mask_of(const CellGrid& g, std::initializer_list<CellIndex> cells) {
    std::vector<bool> m(g.num_cells(), false);
    for (auto j : cells) m[j] = true;
    return m;
}

double d_ref(double p) { return p + (1.0 - p) * std::log(1.0 - p); }

} // namespace

// ---- pseudo-likelihood ----

TEST(PseudoLikelihood, EmptySetInsideFootprint) {
    const CellGrid g(Vec2(0, 0), Vec2(20, 20), 2, 2);
    const auto sensor = SensorModel::uniform(g, 4.0, 0.9, 5.0);
    const GaussianMixturePhd prior({component(0.8, Vec2(10, 10), Mat2::Identity() * 4.0)});
    const std::vector<Vec2> z;
    EXPECT_NEAR(pseudo_likelihood(std::span<const Vec2>(z), Vec2(10, 10), g, mask_of(g, {0}), prior, sensor), 0.1, 1e-15);
}

TEST(PseudoLikelihood, OutsideFootprintIsOne) {
    const CellGrid g(Vec2(0, 0), Vec2(20, 20), 2, 2);
    const auto sensor = SensorModel::uniform(g, 4.0, 0.9, 5.0);
    const GaussianMixturePhd prior({component(0.8, Vec2(10, 10), Mat2::Identity() * 4.0)});
    const std::vector<Vec2> z{Vec2(11, 9)};
    EXPECT_EQ(pseudo_likelihood(std::span<const Vec2>(z), Vec2(30, 30), g, mask_of(g, {0}), prior, sensor), 1.0);
}

TEST(PseudoLikelihood, MatchesDenseGridDefinition) {
    const CellGrid g(Vec2(0, 0), Vec2(20, 20), 3, 3);
    auto sensor = SensorModel::uniform(g, 4.0, 0.85, 12.0);
    Mat2 P;
    P << 6, 2, 2, 5;
    const GaussianMixturePhd prior({component(0.7, Vec2(30, 28), P), component(0.4, Vec2(24, 33), P * 1.5)});
    const auto fov = mask_of(g, {0, 1, 2, 3, 4, 5, 6, 7, 8});
    const std::vector<Vec2> z{Vec2(29, 27), Vec2(40, 15)};
    const DirectPseudoLikelihood oracle(z, prior, g.bounds(), 0.85, sensor.meas_cov, sensor.clutter_density, 900);
    const PseudoLikelihood<GaussianMixturePhd> L(std::span<const Vec2>(z), g, fov, prior, sensor);
    for (const Vec2& x : {Vec2(30, 28), Vec2(25, 30), Vec2(39, 16), Vec2(5, 55)}) {
        const double ref = oracle(x);
        EXPECT_NEAR(L(x), ref, 1e-6 * std::max(1.0, ref)) << x.transpose();
    }
}

TEST(PseudoLikelihood, ZeroNormalizerIsDegenerate) {
    const CellGrid g(Vec2(0, 0), Vec2(20, 20), 2, 1);
    const auto sensor = SensorModel::uniform(g, 1.0, 0.9, 0.0);
    const GaussianMixturePhd prior;
    const std::vector<Vec2> z{Vec2(5, 5)};
    EXPECT_THROW(pseudo_likelihood(std::span<const Vec2>(z), Vec2(5, 5), g, mask_of(g, {0}), prior, sensor),
                 DegenerateModelError);
}

// ---- PHD-KLD gain ----

TEST(PhdKldGain, EmptyFootprintIsZero) {
    const CellGrid g(Vec2(0, 0), Vec2(20, 20), 2, 2);
    const auto sensor = SensorModel::uniform(g, 4.0, 0.9, 5.0);
    const GaussianMixturePhd prior({component(0.8, Vec2(10, 10), Mat2::Identity() * 4.0)});
    const std::vector<Vec2> z{Vec2(10, 10)};
    EXPECT_EQ(phd_kld_gain(std::span<const Vec2>(z), g, std::vector<bool>(4, false), prior, sensor), 0.0);
}

TEST(PhdKldGain, NullMeasurementClosedForm) {
    const CellGrid g(Vec2(0, 0), Vec2(30, 30), 2, 2);
    const auto sensor = SensorModel::uniform(g, 4.0, 0.7, 5.0);
    const GaussianMixturePhd prior({component(0.6, Vec2(15, 15), Mat2::Identity() * 4.0)});
    const std::vector<Vec2> none;
    const double m = 0.6;
    EXPECT_NEAR(phd_kld_gain(std::span<const Vec2>(none), g, mask_of(g, {0}), prior, sensor), m * d_ref(0.7), 1e-9);

    const PiecewisePhd lam(g, {0.2, 0.1, 0.4, 0.3});
    EXPECT_NEAR(phd_kld_gain(std::span<const Vec2>(none), g, mask_of(g, {0, 2}), lam, sensor), 0.6 * d_ref(0.7), 1e-9);
}

TEST(PhdKldGain, MatchesMonteCarloOfIntegrand) {
    const CellGrid g(Vec2(0, 0), Vec2(20, 20), 2, 2);
    const auto sensor = SensorModel::uniform(g, 4.0, 0.9, 10.0);
    Mat2 P;
    P << 9, 3, 3, 7;
    const GaussianMixturePhd prior({component(0.8, Vec2(14, 17), P), component(0.5, Vec2(27, 24), P * 0.6)});
    const auto fov = mask_of(g, {0, 1, 2, 3});
    const std::vector<Vec2> z{Vec2(15, 16)};
    const double gain = phd_kld_gain(std::span<const Vec2>(z), g, fov, prior, sensor, 64);

    const DirectPseudoLikelihood L(z, prior, g.bounds(), 0.9, sensor.meas_cov, sensor.clutter_density, 800);
    std::mt19937_64 rng(99);
    const auto mc = monte_carlo_integral([&](const Vec2& x) { return prior.density(x) * kld_integrand_ref(L(x)); },
                                         g.bounds(), 1000000, rng);
    EXPECT_NEAR(gain, mc.value, 3.0 * mc.std_error);
    EXPECT_GT(gain, 0.0);
}

TEST(PhdKldGain, Nonnegative) {
    const CellGrid g(Vec2(0, 0), Vec2(20, 20), 3, 3);
    const auto sensor = SensorModel::uniform(g, 6.0, 0.8, 20.0);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> pos(0.0, 60.0), w(0.05, 0.9);
    for (int t = 0; t < 20; ++t) {
        const GaussianMixturePhd prior(
            {component(w(rng), Vec2(pos(rng), pos(rng)), Mat2::Identity() * 5.0),
             component(w(rng), Vec2(pos(rng), pos(rng)), Mat2::Identity() * 12.0)});
        const std::vector<Vec2> z{Vec2(pos(rng), pos(rng)), Vec2(pos(rng), pos(rng))};
        std::vector<bool> fov(9);
        for (std::size_t j = 0; j < 9; ++j) fov[j] = (t + j) % 2 == 0;
        EXPECT_GE(phd_kld_gain(std::span<const Vec2>(z), g, fov, prior, sensor, 16), 0.0);
    }
}

// ---- cell decomposition ----

TEST(CellDecompose, ConfinedPriorLeavesOtherCellsZero) {
    const CellGrid g(Vec2(0, 0), Vec2(40, 40), 2, 2);
    const auto sensor = SensorModel::uniform(g, 1.0, 0.9, 4.0);
    const GaussianMixturePhd prior({component(0.7, Vec2(20, 20), Mat2::Identity() * 2.0)});
    const std::vector<Vec2> z{Vec2(21, 19), Vec2(60, 60)};
    const auto d = cell_decompose_gain(std::span<const Vec2>(z), g, std::vector<bool>(4, true), prior, sensor, 16);
    for (CellIndex j = 1; j < 4; ++j) EXPECT_NEAR(d.per_cell[j], 0.0, 1e-9);
    EXPECT_GT(d.per_cell[0], 0.0);
}

TEST(CellDecompose, SeparatedComponentsAreAdditive) {
    const CellGrid g(Vec2(0, 0), Vec2(40, 40), 2, 1);
    const auto sensor = SensorModel::uniform(g, 1.0, 0.9, 4.0);
    const GaussianMixturePhd prior(
        {component(0.6, Vec2(20, 20), Mat2::Identity() * 3.0), component(0.9, Vec2(60, 22), Mat2::Identity() * 2.0)});
    const std::vector<Vec2> z{Vec2(21, 21), Vec2(59, 23)};
    const auto d = cell_decompose_gain(std::span<const Vec2>(z), g, std::vector<bool>(2, true), prior, sensor, 32);
    EXPECT_NEAR(d.cell_sum, d.joint, 1e-6 * d.joint);
    EXPECT_LT(d.violation, 1e-6);
}

TEST(CellDecompose, StraddlingErrorBoundedBySpill) {
    const CellGrid g(Vec2(0, 0), Vec2(20, 20), 2, 1);
    const auto sensor = SensorModel::uniform(g, 4.0, 0.9, 4.0);
    const GaussianMixturePhd prior({component(0.8, Vec2(18, 10), Mat2::Identity() * 6.0)});
    const std::vector<Vec2> z{Vec2(19, 11)};
    const auto d = cell_decompose_gain(std::span<const Vec2>(z), g, std::vector<bool>(2, true), prior, sensor, 32);
    EXPECT_GT(d.additivity_error(), 0.0);
    EXPECT_GT(d.violation, 0.0);
    EXPECT_LE(d.additivity_error(), d.violation);
}

// ---- Theorem 1 ----

TEST(ExpectedGain, NoMeasurementsCertain) {
    const std::vector<double> r{0.0, 0.0}, nulls{1.5, 2.25}, cond{7.0, 9.0};
    EXPECT_DOUBLE_EQ(expected_gain_cellmb(r, nulls, cond), 3.75);
}

TEST(ExpectedGain, CertainMeasurementInFirstCell) {
    const std::vector<double> r{1.0, 0.0}, nulls{1.5, 2.25}, cond{7.0, 9.0};
    EXPECT_DOUBLE_EQ(expected_gain_cellmb(r, nulls, cond), 7.0 + 2.25);
}

TEST(ExpectedGain, MatchesEnumerationForCellAdditiveGain) {
    // An arbitrary cell-additive set function: cell j contributes a constant
    // when empty and a smooth function of its single point when occupied.
    const CellGrid g(Vec2(0, 0), Vec2(10, 10), 3, 1);
    Mat2 P;
    P << 8, 2, 2, 5;
    const GaussianMixturePhd phd({component(0.3, Vec2(4, 6), P), component(0.5, Vec2(16, 3), P), component(0.2, Vec2(27, 7), P)});
    const auto mb = fit_cell_mb(phd, g);
    const std::vector<double> empty_value{0.4, 1.1, 0.25};
    auto phi = [](CellIndex j, const Vec2& z) { return std::sin(0.3 * z.x() + j) + 0.01 * z.y() * z.y(); };
    const SetFunction f = [&](std::span<const Vec2> Z) {
        double v = 0.0;
        for (CellIndex j = 0; j < 3; ++j) {
            const Vec2* hit = nullptr;
            for (const auto& z : Z)
                if (g.cell_of(z) == j) hit = &z;
            v += hit ? phi(j, *hit) : empty_value[j];
        }
        return v;
    };
    // Conditional expectations on the same 8 x 8 lattice, normalized.
    const std::size_t n = 8;
    std::vector<double> cond(3);
    for (CellIndex j = 0; j < 3; ++j) {
        double num = 0.0, den = 0.0;
        for (const auto& z : g.lattice(j, n)) {
            num += mb.spatial_density(j, z) * phi(j, z);
            den += mb.spatial_density(j, z);
        }
        cond[j] = num / den;
    }
    const double closed = expected_gain_cellmb(mb, empty_value, cond);
    const double brute = brute_force_expected_gain(mb, f, n);
    EXPECT_NEAR(closed, brute, 1e-8);
}

TEST(BruteForce, ConstantAndCardinality) {
    const CellGrid g(Vec2(0, 0), Vec2(10, 10), 2, 2);
    const PiecewisePhd d(g, {0.1, 0.5, 0.9, 0.0});
    const auto mb = fit_cell_mb(d, g);
    EXPECT_NEAR(brute_force_expected_gain(mb, [](std::span<const Vec2>) { return 3.5; }, 4), 3.5, 1e-12);
    EXPECT_NEAR(brute_force_expected_gain(mb, [](std::span<const Vec2> z) { return double(z.size()); }, 4), 1.5, 1e-12);
}

TEST(BruteForce, RefusesLargeGrids) {
    const CellGrid g(Vec2(0, 0), Vec2(1, 1), 7, 1);
    const auto mb = fit_cell_mb(PiecewisePhd(g, std::vector<double>(7, 0.1)), g);
    EXPECT_THROW(brute_force_expected_gain(mb, [](std::span<const Vec2>) { return 0.0; }, 2), PreconditionError);
}

// ---- undiscovered null gain ----

TEST(UndiscoveredNullGain, Examples) {
    EXPECT_EQ(undiscovered_null_gain(0.7, 0.0, true), 0.0);
    EXPECT_DOUBLE_EQ(undiscovered_null_gain(0.5, 1.0, true), 0.5);
    EXPECT_NEAR(undiscovered_null_gain(1.0, 0.9, true), 0.669741, 1e-6);
    EXPECT_NEAR(undiscovered_null_gain(1.0, 0.9, true), 0.9 + 0.1 * std::log(0.1), 1e-12);
    EXPECT_EQ(undiscovered_null_gain(1.0, 0.9, false), 0.0);
}

TEST(NullGainFactor, InhomogeneousDetectionMatchesMidpoint) {
    const Rect cell{Vec2(0, 0), Vec2(10, 10)};
    auto pd = [](const Vec2& s) { return 0.5 + 0.04 * s.x() - 0.002 * s.y() * s.x(); };
    const double ref = midpoint_integral([&](const Vec2& s) { return d_ref(pd(s)); }, cell, 1500) / cell.area();
    EXPECT_NEAR(null_gain_factor(pd, cell), ref, 1e-6);
}

// ---- undiscovered conditional gain table ----

class GainTable : public ::testing::Test {
protected:
    QuadratureConfig quad = [] {
        QuadratureConfig q;
        q.lattice_n = 8;
        q.r_max = 8;
        return q;
    }();
    UndiscoveredGainTable table{Vec2(20, 20), 0.9, Mat2::Identity() * 4.0, 1e-3, quad, 11};
};

TEST_F(GainTable, PureClutterCellIsNonnegative) {
    EXPECT_GE(table.values().front(), 0.0);
    EXPECT_DOUBLE_EQ(table(0.0), table.values().front());
}

TEST_F(GainTable, KnotsReproduced) {
    for (std::size_t k = 0; k < table.knots().size(); ++k) EXPECT_DOUBLE_EQ(table(table.knots()[k]), table.values()[k]);
}

TEST_F(GainTable, MidpointsWithinBracket) {
    for (std::size_t k = 0; k + 1 < table.knots().size(); ++k) {
        const double mid = table(0.5 * (table.knots()[k] + table.knots()[k + 1]));
        EXPECT_GE(mid, std::min(table.values()[k], table.values()[k + 1]) - 1e-15);
        EXPECT_LE(mid, std::max(table.values()[k], table.values()[k + 1]) + 1e-15);
    }
}

TEST_F(GainTable, QueriesClampToUnitInterval) {
    EXPECT_DOUBLE_EQ(table(1.7), table(1.0));
    EXPECT_DOUBLE_EQ(table(-0.2), table(0.0));
}

// ---- discovered conditional gain ----

namespace {

struct ConditionalScene {
    CellGrid grid{Vec2(0, 0), Vec2(20, 20), 3, 3};
    SensorModel sensor = SensorModel::uniform(grid, 4.0, 0.9, 10.0);
    GaussianMixturePhd prior;
    std::vector<bool> fov = std::vector<bool>(9, true);

    ConditionalScene() {
        Mat2 P;
        P << 10, 3, 3, 6;
        prior = GaussianMixturePhd({component(0.6, Vec2(27, 33), P), component(0.3, Vec2(35, 24), P * 0.5)});
    }
};

} // namespace

TEST(DiscoveredConditionalGain, UniformIntensityIsOneRegion) {
    ConditionalScene s;
    QuadratureConfig quad;
    quad.lattice_n = 8;
    const GaussianMixturePhd flat({}, 0.002);
    const auto res = discovered_conditional_gain(4, s.grid, s.fov, s.prior, flat, s.sensor, quad);
    ASSERT_EQ(res.regions.size(), 1u);
    EXPECT_NEAR(res.regions[0].volume, s.grid.cell_area(), 1e-9);
    std::vector<bool> single(9, false);
    single[4] = true;
    const Vec2 z = res.regions[0].representative;
    const double g = phd_kld_gain(std::span<const Vec2>(&z, 1), s.grid, single, s.prior, s.sensor, quad.lattice_n);
    EXPECT_NEAR(res.value, g, 1e-9);
    EXPECT_LT((z - s.grid.cell_rect(4).center()).norm(), 20.0 / 8.0);
}

TEST(DiscoveredConditionalGain, VolumesPartitionTheCell) {
    ConditionalScene s;
    QuadratureConfig quad;
    quad.lattice_n = 8;
    quad.eps_min = -1e300;
    const auto res = discovered_conditional_gain(4, s.grid, s.fov, s.prior, s.sensor, quad);
    double vol = 0.0;
    for (const auto& r : res.regions) vol += r.volume;
    EXPECT_NEAR(vol, s.grid.cell_area(), 1e-9);

    quad.eps_min = std::log(0.01);
    const auto clipped = discovered_conditional_gain(4, s.grid, s.fov, s.prior, s.sensor, quad);
    double vol2 = 0.0;
    for (const auto& r : clipped.regions) vol2 += r.volume;
    EXPECT_LE(vol2, s.grid.cell_area());
    EXPECT_LT(vol2, s.grid.cell_area());
}

TEST(DiscoveredConditionalGain, FullRegionCountIsRiemannSum) {
    ConditionalScene s;
    QuadratureConfig quad;
    quad.lattice_n = 8;
    quad.r_max = quad.samples();
    const auto meas = predicted_measurement_phd(s.prior, s.grid, s.fov, s.sensor);
    const auto res = discovered_conditional_gain(4, s.grid, s.fov, s.prior, meas, s.sensor, quad);

    std::vector<bool> single(9, false);
    single[4] = true;
    const Rect cell = s.grid.cell_rect(4);
    const double r_v = meas.mass_in(cell);
    const double floor = std::log(1e-3 * s.sensor.clutter_density);
    const double dA = s.grid.cell_area() / quad.samples();
    double riemann = 0.0;
    for (const auto& z : s.grid.lattice(4, quad.lattice_n)) {
        const double dens = meas.density(z);
        if (std::log(dens) < floor) continue;
        riemann += phd_kld_gain(std::span<const Vec2>(&z, 1), s.grid, single, s.prior, s.sensor, quad.lattice_n) * dens /
                   r_v * dA;
    }
    EXPECT_NEAR(res.value, riemann, 1e-12 * std::max(1.0, riemann));
}

TEST(DiscoveredConditionalGain, ConvergesWithRegionCount) {
    ConditionalScene s;
    QuadratureConfig quad;
    quad.lattice_n = 16;
    const double ref = discovered_conditional_gain_reference(4, s.grid, s.fov, s.prior, s.sensor, quad);
    quad.r_max = 64;
    const double fine = discovered_conditional_gain(4, s.grid, s.fov, s.prior, s.sensor, quad).value;
    EXPECT_NEAR(fine, ref, 0.02 * ref);
}

// ---- predicted measurement intensity ----

TEST(PredictedMeasurementPhd, EmptyPriorIsClutterOnly) {
    const CellGrid g(Vec2(0, 0), Vec2(20, 20), 2, 2);
    const auto sensor = SensorModel::uniform(g, 4.0, 0.9, 8.0);
    const auto m = predicted_measurement_phd(GaussianMixturePhd(), g, std::vector<bool>(4, true), sensor);
    EXPECT_TRUE(m.empty());
    EXPECT_DOUBLE_EQ(m.background(), sensor.clutter_density);
}

TEST(PredictedMeasurementPhd, SingleComponentPushThrough) {
    const CellGrid g(Vec2(0, 0), Vec2(20, 20), 2, 2);
    const auto sensor = SensorModel::uniform(g, 4.0, 0.9, 8.0);
    const Mat2 P = Mat2::Identity() * 3.0;
    const auto m = predicted_measurement_phd(GaussianMixturePhd({component(1.0, Vec2(10, 10), P)}), g,
                                             std::vector<bool>(4, true), sensor);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_DOUBLE_EQ(m.components()[0].weight, 0.9);
    EXPECT_TRUE(m.components()[0].cov.isApprox(P + sensor.meas_cov));
}

TEST(PredictedMeasurementPhd, MassOverFootprint) {
    const CellGrid g(Vec2(0, 0), Vec2(30, 30), 3, 3);
    const auto sensor = SensorModel::uniform(g, 2.0, 0.9, 8.0);
    const GaussianMixturePhd prior({component(0.7, Vec2(40, 40), Mat2::Identity() * 5.0),
                                    component(0.5, Vec2(75, 15), Mat2::Identity() * 4.0)});
    const Fov f{1, 1, 1, 1};
    const auto mask = fov_mask(g, f);
    const auto m = predicted_measurement_phd(prior, g, mask, sensor);
    const Rect r = f.rect(g);
    EXPECT_NEAR(m.mass_in(r), 0.9 * prior.mass_in(r) + sensor.clutter_density * r.area(), 1e-3);
}

// ---- FoR gain arrays ----

namespace {

struct ArrayScene {
    CellGrid grid;
    SensorModel sensor;
    QuadratureConfig quad;
    std::unique_ptr<UndiscoveredGainModel> model;

    explicit ArrayScene(std::vector<bool> regard = std::vector<bool>(16, true))
        : grid(Vec2(0, 0), Vec2(20, 20), 4, 4, std::vector<bool>(16, true), std::move(regard)),
          sensor(SensorModel::uniform(grid, 4.0, 0.9, 5.0)) {
        quad.lattice_n = 8;
        quad.r_max = 8;
        model = std::make_unique<UndiscoveredGainModel>(grid, sensor, quad, 11);
    }
};

} // namespace

TEST(ForGainArrays, NoTracksUniformLambda) {
    ArrayScene s;
    const PiecewisePhd lam(s.grid, std::vector<double>(16, 0.2));
    const auto g = for_gain_arrays(s.grid, GaussianMixturePhd(), lam, s.sensor, s.quad, *s.model);
    for (CellIndex j = 0; j < 16; ++j) {
        EXPECT_EQ(g.discovered[j], 0.0);
        EXPECT_DOUBLE_EQ(g.undiscovered[j], g.undiscovered[0]);
    }
    EXPECT_GT(g.undiscovered[0], 0.0);
}

TEST(ForGainArrays, ConfidentTrackDominates) {
    ArrayScene s;
    const PiecewisePhd lam(s.grid, std::vector<double>(16, 0.05));
    const GaussianMixturePhd tracks({component(0.95, s.grid.cell_rect(5).center(), Mat2::Identity() * 6.0)});
    const auto g = for_gain_arrays(s.grid, tracks, lam, s.sensor, s.quad, *s.model);
    for (CellIndex j = 0; j < 16; ++j) {
        if (j != 5) {
            EXPECT_GT(g.discovered[5], g.discovered[j]);
        }
    }
}

TEST(ForGainArrays, OutsideRegardIsZero) {
    std::vector<bool> regard(16, true);
    regard[0] = regard[15] = false;
    ArrayScene s(regard);
    const PiecewisePhd lam(s.grid, std::vector<double>(16, 0.3));
    const GaussianMixturePhd tracks({component(0.9, Vec2(10, 10), Mat2::Identity() * 6.0)});
    const auto g = for_gain_arrays(s.grid, tracks, lam, s.sensor, s.quad, *s.model);
    for (CellIndex j : {0u, 15u}) {
        EXPECT_EQ(g.discovered[j], 0.0);
        EXPECT_EQ(g.undiscovered[j], 0.0);
    }
    EXPECT_GT(g.undiscovered[1], 0.0);
}

TEST(ForGainArrays, AssembledFromNullAndConditionalTerms) {
    ArrayScene s;
    const std::vector<double> lvec{0.1, 0.2, 0.0, 0.4, 0.3, 0.0, 0.1, 0.2, 0.5, 0.1, 0.0, 0.3, 0.2, 0.2, 0.1, 0.9};
    const PiecewisePhd lam(s.grid, lvec);
    const GaussianMixturePhd tracks({component(0.7, Vec2(31, 28), Mat2::Identity() * 5.0)});
    const auto g = for_gain_arrays(s.grid, tracks, lam, s.sensor, s.quad, *s.model);
    const auto& table = s.model->table(0.9);
    for (CellIndex j = 0; j < 16; ++j) {
        const double expected_u = lvec[j] * d_ref(0.9) * (1.0 - g.r_w[j]) + table(lvec[j]) * g.r_w[j];
        EXPECT_NEAR(g.undiscovered[j], expected_u, 1e-12);
        // A cell expecting more than one detection is clamped to certainty.
        EXPECT_NEAR(g.r_w[j], std::min(1.0, table.detection_mass(lvec[j])), 1e-12);
    }
    const std::vector<bool> all(16, true);
    const auto meas = predicted_measurement_phd(tracks, s.grid, all, s.sensor);
    const Rect c5 = s.grid.cell_rect(5);
    const double rv = meas.mass_in(c5);
    const double cond = discovered_conditional_gain(5, s.grid, all, tracks, meas, s.sensor, s.quad).value;
    EXPECT_NEAR(g.discovered[5], d_ref(0.9) * tracks.mass_in(c5) * (1.0 - rv) + cond * rv, 1e-12);
}
