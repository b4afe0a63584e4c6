#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace moca;

TEST(Oracle, RecoversDrawnNoise) {
    auto s = default_schedule();
    std::mt19937_64 g(1);
    auto x0 = testkit::random_frame(g, {4, 8, 8});
    synth::OracleDenoiser oracle(x0, s);
    for (int t : {1, 250, 1000}) {
        RandomSource a(static_cast<std::uint64_t>(t)), b(static_cast<std::uint64_t>(t));
        auto xt = forward_diffuse(x0, t, s, a);
        auto eps = b.gaussian_frame(x0.shape());
        EXPECT_LT(max_abs_diff(oracle.predict_eps(xt, t), eps), 1e-9) << t;
    }
}

TEST(Oracle, PredictsTargetFromAnyLatent) {
    auto s = default_schedule();
    std::mt19937_64 g(2);
    auto x0 = testkit::random_frame(g, {4, 8, 8});
    synth::OracleDenoiser oracle(x0, s);
    for (int t : {3, 500, 999}) {
        auto x = testkit::random_frame(g, {4, 8, 8}, -5, 5);
        EXPECT_LT(max_abs_diff(predict_x0(x, t, oracle.predict_eps(x, t), s), x0), 1e-9);
    }
    EXPECT_THROW(oracle.predict_eps(x0, 0), DomainError);
}

TEST(Oracle, PerFrameTargetsClampToLast) {
    auto s = default_schedule();
    LatentFrame a({1, 2, 2}, 1.0), b({1, 2, 2}, -1.0);
    synth::OracleDenoiser oracle(synth::OracleSpec{{a, b}}, s);
    LatentFrame x({1, 2, 2}, 0.3);
    EXPECT_LT(max_abs_diff(predict_x0(x, 10, oracle.predict_eps(x, 10, {0, false}), s), a), 1e-9);
    EXPECT_LT(max_abs_diff(predict_x0(x, 10, oracle.predict_eps(x, 10, {7, false}), s), b), 1e-9);
}

TEST(Oracle, FullSweepEndsAtTarget) {
    auto s = default_schedule();
    std::mt19937_64 g(3);
    auto x0 = testkit::random_frame(g, {4, 8, 8});
    synth::OracleDenoiser oracle(x0, s);
    RandomSource r(5);
    auto x = forward_diffuse(x0, 1000, s, r);
    std::vector<Timestep> grid(1001);
    for (int t = 0; t <= 1000; ++t) grid[static_cast<std::size_t>(t)] = t;
    EXPECT_LT(max_abs_diff(ddim_sample(x, grid, oracle, s, 0.0, r), x0), 1e-5);
}

TEST(GaussianPrior, ZeroSpreadIsOracle) {
    auto s = default_schedule();
    std::mt19937_64 g(4);
    auto mu = testkit::random_frame(g, {2, 4, 4});
    synth::GaussianPriorDenoiser prior({{mu}}, 0.0, s);
    synth::OracleDenoiser oracle(mu, s);
    auto x = testkit::random_frame(g, {2, 4, 4}, -3, 3);
    EXPECT_LT(max_abs_diff(prior.predict_eps(x, 400), oracle.predict_eps(x, 400)), 1e-12);
    EXPECT_THROW(synth::GaussianPriorDenoiser({{mu}}, -1.0, s), ParameterError);
    EXPECT_THROW(prior.predict_eps(x, 0), DomainError);
}

TEST(GaussianPrior, PosteriorMeanFormula) {
    auto s = default_schedule();
    LatentFrame mu({1, 1, 2}, 0.5);
    const double sd = 0.7;
    synth::GaussianPriorDenoiser prior({{mu}}, sd, s);
    LatentFrame x({1, 1, 2}, -0.2);
    const int t = 600;
    double ab = s.alpha_bar(t);
    double expect = 0.5 + std::sqrt(ab) * sd * sd / (ab * sd * sd + 1 - ab) * (-0.2 - std::sqrt(ab) * 0.5);
    auto x0 = predict_x0(x, t, prior.predict_eps(x, t), s);
    EXPECT_NEAR(x0[0], expect, 1e-12);
}

TEST(Scene, StaticSquareRepeats) {
    auto scene = synth::moving_square_scene(5, 8, 3, {0, 0});
    for (std::size_t f = 1; f < 5; ++f) {
        EXPECT_EQ(scene.latents[f], scene.latents[0]);
        EXPECT_EQ(scene.truth.masks[f], scene.truth.masks[0]);
    }
}

TEST(Scene, CentroidAdvancesUntilClamped) {
    auto scene = synth::moving_square_scene(16, 8, 3, {1, 0});
    for (std::size_t f = 0; f < 16; ++f) {
        const auto& m = scene.truth.masks[f];
        double cx = 0;
        for (std::size_t y = 0; y < 8; ++y)
            for (std::size_t x = 0; x < 8; ++x)
                if (m.at(y, x)) cx += static_cast<double>(x);
        cx /= static_cast<double>(m.area());
        EXPECT_EQ(m.area(), 9u);
        EXPECT_DOUBLE_EQ(cx, 1.0 + std::min<double>(static_cast<double>(f), 5.0)) << f;
    }
}

TEST(Scene, AdjacentIouOfThreeSquareIsHalf) {
    auto scene = synth::moving_square_scene(3, 8, 3, {1, 0});
    EXPECT_DOUBLE_EQ(iou(scene.truth.masks[0], scene.truth.masks[1]), 0.5);
    EXPECT_DOUBLE_EQ(scene.truth.overlap[1], 0.5);
}

TEST(Scene, ValuesAndSegmentationAgree) {
    auto scene = synth::moving_square_scene(6, 8, 4, {1, 1}, 3);
    for (std::size_t f = 0; f < 6; ++f) {
        EXPECT_EQ(threshold_segment(scene.latents[f], 0.5, false), scene.truth.masks[f]);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < 8; ++y)
                for (std::size_t x = 0; x < 8; ++x)
                    EXPECT_EQ(scene.latents[f].at(c, y, x), scene.truth.masks[f].at(y, x) ? 1.0 : 0.0);
    }
    EXPECT_THROW(synth::moving_square_scene(4, 8, 8, {1, 0}), ParameterError);
}

TEST(Proxy, ConstantFrameIsUniformDirection) {
    auto v = synth::patch_embedding_proxy(LatentFrame({4, 8, 8}, 3.0), 4);
    ASSERT_EQ(v.size(), 16u);
    for (double x : v) EXPECT_NEAR(x, 0.25, 1e-15);
}

TEST(Proxy, SelfAndNegation) {
    std::mt19937_64 g(5);
    auto f = testkit::random_frame(g, {4, 8, 8});
    auto a = synth::patch_embedding_proxy(f, 2), b = synth::patch_embedding_proxy(f, 2);
    auto n = synth::patch_embedding_proxy(scaled(f, -1.0), 2);
    EXPECT_NEAR(metrics::cosine_sim(a, b), 1.0, 1e-15);
    EXPECT_NEAR(metrics::cosine_sim(a, n), -1.0, 1e-15);
    EXPECT_THROW(synth::patch_embedding_proxy(f, 3), ParameterError);
}

TEST(Proxy, PatchMeans) {
    LatentFrame f({2, 4, 4});
    f.at(0, 0, 0) = 8.0;  // patch (0,0) mean = 8 / (2*2*2) = 1
    auto v = synth::patch_embedding_proxy(f, 2);
    EXPECT_NEAR(v[0], 1.0, 1e-15);
    EXPECT_NEAR(v[1] + v[2] + v[3], 0.0, 1e-15);
}
