#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace moca;

namespace {

const Shape kShape{4, 8, 8};

NoiseSchedule small_schedule(int T = 64) { return make_schedule(T, 0.0015, 0.03, ScheduleKind::linear); }

}  // namespace

TEST(PredictX0, ZeroNoiseRescales) {
    auto s = small_schedule();
    std::mt19937_64 g(1);
    auto x = testkit::random_frame(g, kShape);
    auto x0 = predict_x0(x, 20, LatentFrame(kShape), s);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x0[i], x[i] / std::sqrt(s.alpha_bar(20)), 1e-15);
}

TEST(PredictX0, InvertsForwardConstruction) {
    auto s = default_schedule();
    std::mt19937_64 g(2);
    for (int t : {1, 17, 300, 999, 1000}) {
        auto x0 = testkit::random_frame(g, kShape);
        auto eps = testkit::random_frame(g, kShape, -3, 3);
        auto xt = axpby(std::sqrt(s.alpha_bar(t)), x0, std::sqrt(1 - s.alpha_bar(t)), eps);
        EXPECT_LT(max_abs_diff(predict_x0(xt, t, eps, s), x0), 1e-9) << t;
    }
}

TEST(PredictX0, SmallTimestepIsNearInput) {
    auto s = default_schedule();
    std::mt19937_64 g(3);
    auto x = testkit::random_frame(g, kShape);
    EXPECT_LT(max_abs_diff(predict_x0(x, 1, LatentFrame(kShape, 0.1), s), x), 5e-3);
}

TEST(PredictX0, RejectsBadTimestepsAndShapes) {
    auto s = small_schedule();
    LatentFrame x(kShape);
    EXPECT_THROW(predict_x0(x, 0, x, s), ParameterError);
    EXPECT_THROW(predict_x0(x, 65, x, s), ParameterError);
    EXPECT_THROW(predict_x0(x, 3, LatentFrame(Shape{1, 8, 8}), s), ParameterError);
}

TEST(DdimStep, ZeroDenoiserRescales) {
    auto s = small_schedule();
    std::mt19937_64 g(4);
    auto x = testkit::random_frame(g, kShape);
    RandomSource rng(0);
    ZeroDenoiser zero;
    auto out = ddim_step(x, 30, zero, s, 0.0, rng);
    for (std::size_t i = 0; i < x.size(); ++i)
        EXPECT_NEAR(out.x_prev[i], std::sqrt(s.alpha_bar(29)) * x[i] / std::sqrt(s.alpha_bar(30)), 1e-14);
    EXPECT_EQ(rng.gaussian_draws(), 0u);
}

TEST(DdimStep, MatchesHandFormulaWithNoise) {
    auto s = small_schedule();
    auto den = testkit::wavy_denoiser(64);
    std::mt19937_64 g(5);
    auto x = testkit::random_frame(g, kShape);
    const int t = 40, tp = 36;
    const double eta = 0.7;
    RandomSource rng(9), twin(9);
    auto out = ddim_step(x, t, tp, den, s, eta, rng);

    double at = s.alpha_bar(t), ap = s.alpha_bar(tp);
    double sigma = eta * std::sqrt((1 - ap) / (1 - at)) * std::sqrt(1 - at / ap);
    auto eps = den.predict_eps(x, t);
    auto noise = twin.gaussian_frame(kShape);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double x0 = (x[i] - std::sqrt(1 - at) * eps[i]) / std::sqrt(at);
        double expect = std::sqrt(ap) * x0 + std::sqrt(1 - ap - sigma * sigma) * eps[i] + sigma * noise[i];
        EXPECT_NEAR(out.x_prev[i], expect, 1e-12);
    }
    EXPECT_NEAR(ddim_sigma(t, tp, s, eta), sigma, 1e-15);
}

TEST(DdimStep, StochasticStepIsReproducible) {
    auto s = small_schedule();
    auto den = testkit::wavy_denoiser(64);
    std::mt19937_64 g(6);
    auto x = testkit::random_frame(g, kShape);
    RandomSource a(77), b(77), c(78);
    auto xa = ddim_step(x, 10, den, s, 1.0, a).x_prev;
    EXPECT_EQ(xa, ddim_step(x, 10, den, s, 1.0, b).x_prev);
    EXPECT_NE(xa, ddim_step(x, 10, den, s, 1.0, c).x_prev);
}

TEST(DdimStep, NegativeRadicandIsRejected) {
    auto s = small_schedule();
    RandomSource rng(1);
    ZeroDenoiser zero;
    EXPECT_THROW(ddim_step(LatentFrame(kShape), 40, 10, zero, s, 1.5, rng), ParameterError);
    EXPECT_THROW(ddim_step(LatentFrame(kShape), 10, 10, zero, s, 0.0, rng), ParameterError);
}

TEST(DdimStep, OracleSweepRecoversTarget) {
    auto s = default_schedule();
    std::mt19937_64 g(7);
    auto x0 = testkit::random_frame(g, kShape);
    synth::OracleDenoiser oracle(x0, s);
    RandomSource rng(3);
    auto x = forward_diffuse(x0, s.steps(), s, rng);
    for (int t = s.steps(); t >= 1; --t) {
        auto eps = oracle.predict_eps(x, t);
        ASSERT_LT(max_abs_diff(predict_x0(x, t, eps, s), x0), 1e-9) << t;
        x = ddim_step(x, t, oracle, s, 0.0, rng).x_prev;
    }
    EXPECT_LT(max_abs_diff(x, x0), 1e-5);
}

TEST(Kappa, Endpoints) {
    for (int T : {1, 7, 64, 1000}) {
        EXPECT_EQ(kappa_at(T, T, 2.0), 0.0);
        EXPECT_EQ(kappa_at(0, T, 2.0), 2.0);
    }
    EXPECT_EQ(kappa_at(500, 1000, 1.0), 0.5);
}

TEST(Kappa, NonincreasingInT) {
    std::mt19937_64 g(8);
    std::uniform_real_distribution<double> k0(0.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        double kappa0 = k0(g);
        for (int t = 1; t <= 100; ++t) EXPECT_LE(kappa_at(t, 100, kappa0), kappa_at(t - 1, 100, kappa0));
    }
}

TEST(Momentum, ZeroKappaReducesToDdimOnRandomTrajectories) {
    auto s = small_schedule();
    auto den = testkit::wavy_denoiser(64);
    std::mt19937_64 g(10);
    for (int trial = 0; trial < 20; ++trial) {
        auto x = testkit::random_frame(g, kShape, -2, 2);
        auto y = x;
        double eta = trial % 2 == 0 ? 0.0 : 0.5;
        RandomSource ra(trial), rb(trial);
        MomentumState st(kShape, 64, {0.9, 1.0, 0.0});
        for (int t = 64; t >= 1; --t) {
            auto plain = ddim_step(x, t, den, s, eta, ra);
            auto mom = momentum_step(y, t, den, s, std::move(st), eta, rb);
            st = std::move(mom.state);
            ASSERT_EQ(mom.step.x_prev, plain.x_prev) << "trial " << trial << " t " << t;
            x = plain.x_prev;
            y = mom.step.x_prev;
        }
    }
}

TEST(Momentum, FrozenVelocityWhenBetaIsOne) {
    auto s = small_schedule();
    auto den = testkit::wavy_denoiser(64);
    std::mt19937_64 g(11);
    auto x = testkit::random_frame(g, kShape);
    auto y = x;
    RandomSource ra(1), rb(1);
    MomentumState st(kShape, 64, {1.0, 1.0, 2.0});
    for (int t = 64; t >= 1; --t) {
        auto plain = ddim_step(x, t, den, s, 0.0, ra);
        auto mom = momentum_step(y, t, den, s, std::move(st), 0.0, rb);
        st = std::move(mom.state);
        ASSERT_EQ(l2_norm(st.velocity()), 0.0);
        ASSERT_EQ(mom.step.x_prev, plain.x_prev);
        x = plain.x_prev;
        y = mom.step.x_prev;
    }
}

TEST(Momentum, FirstStepAtTIsVanilla) {
    auto s = small_schedule();
    auto den = testkit::wavy_denoiser(64);
    std::mt19937_64 g(12);
    auto x = testkit::random_frame(g, kShape);
    RandomSource ra(2), rb(2);
    auto plain = ddim_step(x, 64, den, s, 0.3, ra);
    auto mom = momentum_step(x, 64, den, s, MomentumState(kShape, 64, {}), 0.3, rb);
    EXPECT_EQ(mom.step.kappa_used, 0.0);
    EXPECT_EQ(mom.step.x_prev, plain.x_prev);
}

TEST(Momentum, CorrectionFollowsUpdateRule) {
    auto s = small_schedule();
    auto den = testkit::wavy_denoiser(64);
    std::mt19937_64 g(13);
    auto x = testkit::random_frame(g, kShape);
    const MomentumState::Params p{0.8, 0.5, 1.5};
    MomentumState st(kShape, 64, p);
    LatentFrame v(kShape);
    RandomSource r(4);
    for (int t = 64; t >= 50; --t) {
        RandomSource dummy(0);
        auto plain = ddim_step(x, t, den, s, 0.0, dummy);
        for (std::size_t i = 0; i < v.size(); ++i) {
            double gt = x[i] - plain.x_prev[i] + p.lambda * plain.dir[i];
            v[i] = p.beta * v[i] + (1 - p.beta) * gt;
        }
        double kappa = p.kappa0 * (1.0 - t / 64.0);
        auto mom = momentum_step(x, t, den, s, std::move(st), 0.0, r);
        st = std::move(mom.state);
        for (std::size_t i = 0; i < v.size(); ++i) {
            ASSERT_NEAR(st.velocity()[i], v[i], 1e-12);
            double corr = plain.x0_hat[i] + kappa * v[i];
            ASSERT_NEAR(mom.step.x_prev[i], std::sqrt(s.alpha_bar(t - 1)) * corr + plain.dir[i], 1e-12);
        }
        x = mom.step.x_prev;
    }
}

TEST(Momentum, ReusesOneNoiseDrawPerStep) {
    auto s = small_schedule();
    auto den = testkit::wavy_denoiser(64);
    LatentFrame x(kShape, 0.3);
    RandomSource a(5), b(5);
    ddim_step(x, 20, den, s, 1.0, a);
    momentum_step(x, 20, den, s, MomentumState(kShape, 64, {}), 1.0, b);
    EXPECT_EQ(a.gaussian_draws(), kShape.size());
    EXPECT_EQ(b.gaussian_draws(), a.gaussian_draws());
    EXPECT_EQ(a.gaussian(), b.gaussian());
}

TEST(Momentum, RejectsBadStateAndParams) {
    auto s = small_schedule();
    ZeroDenoiser zero;
    RandomSource r(0);
    EXPECT_THROW(momentum_step(LatentFrame(kShape), 5, zero, s, MomentumState({1, 8, 8}, 64, {}), 0.0, r),
                 ParameterError);
    EXPECT_THROW(momentum_step(LatentFrame(kShape), 5, zero, s, MomentumState(kShape, 10, {}), 0.0, r), ParameterError);
    EXPECT_THROW(MomentumState(kShape, 64, {1.1, 1.0, 1.0}), ParameterError);
    EXPECT_THROW(MomentumState(kShape, 64, {0.5, -1.0, 1.0}), ParameterError);
    EXPECT_THROW(MomentumState(kShape, 64, {0.5, 1.0, -1.0}), ParameterError);
}

TEST(Momentum, SingleStepScheduleNeverCorrects) {
    auto s = make_schedule(1, 0.5, 0.5, ScheduleKind::linear);
    auto den = testkit::wavy_denoiser(1);
    LatentFrame x(kShape, 0.2);
    RandomSource a(0), b(0);
    auto mom = momentum_step(x, 1, den, s, MomentumState(kShape, 1, {}), 0.0, a);
    EXPECT_EQ(mom.step.kappa_used, 0.0);
    EXPECT_EQ(mom.step.x_prev, ddim_step(x, 1, den, s, 0.0, b).x_prev);
}

TEST(Invert, ZeroStepsRejected) {
    ZeroDenoiser zero;
    EXPECT_THROW(ddim_invert(LatentFrame(kShape), zero, small_schedule(), 0), ParameterError);
}

TEST(Invert, ZeroDenoiserIsPureRescaling) {
    auto s = default_schedule();
    std::mt19937_64 g(14);
    auto x0 = testkit::random_frame(g, kShape);
    ZeroDenoiser zero;
    auto traj = ddim_invert(x0, zero, s, 10);
    ASSERT_EQ(traj.size(), 11u);
    EXPECT_EQ(traj[0], x0);
    auto grid = uniform_grid(1000, 10);
    for (std::size_t i = 0; i < traj.size(); ++i)
        for (std::size_t k = 0; k < x0.size(); ++k)
            EXPECT_NEAR(traj[i][k], std::sqrt(s.alpha_bar(grid[i])) * x0[k], 1e-12);
}

TEST(Invert, OracleRoundTrip) {
    auto s = default_schedule();
    std::mt19937_64 g(15);
    for (int trial = 0; trial < 5; ++trial) {
        auto x0 = testkit::random_frame(g, kShape);
        synth::OracleDenoiser oracle(x0, s);
        auto traj = ddim_invert(x0, oracle, s, 50);
        ASSERT_EQ(traj.size(), 51u);
        RandomSource r(0);
        auto back = ddim_sample(traj[50], uniform_grid(1000, 50), oracle, s, 0.0, r);
        EXPECT_LT(max_abs_diff(back, x0), 1e-4);
    }
}

TEST(Invert, PriorDenoiserRoundTripIsClose) {
    auto s = default_schedule();
    std::mt19937_64 g(16);
    auto x0 = testkit::random_frame(g, kShape, -0.5, 0.5);
    synth::GaussianPriorDenoiser den({{LatentFrame(kShape)}}, 1.0, s);
    auto traj = ddim_invert(x0, den, s, 50);
    RandomSource r(0);
    auto back = ddim_sample(traj[50], uniform_grid(1000, 50), den, s, 0.0, r);
    EXPECT_LT(max_abs_diff(back, x0), 0.05);
}
