#pragma once

// Analytic denoisers and synthetic scenes for exercising the samplers and trackers
// without a pretrained model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "moca/errors.hpp"
#include "moca/mask.hpp"
#include "moca/metrics.hpp"
#include "moca/scheduler.hpp"
#include "moca/tracking.hpp"

namespace moca::synth {

/// Ground-truth clean latents. A single frame serves every trajectory; with several frames the
/// denoiser picks FrameContext::frame, clamped to the last entry.
struct OracleSpec {
    std::vector<LatentFrame> x0_star;

    const LatentFrame& target(std::size_t frame) const { return x0_star[std::min(frame, x0_star.size() - 1)]; }
};

/// Exact noise predictor for a known clean latent: eps = (x_t - sqrt(abar_t) x0*) / sqrt(1 - abar_t).
class OracleDenoiser final : public Denoiser {
public:
    OracleDenoiser(OracleSpec spec, NoiseSchedule s) : spec_(std::move(spec)), schedule_(std::move(s)) {
        require(!spec_.x0_star.empty(), "oracle denoiser needs at least one target frame");
        for (const auto& f : spec_.x0_star) {
            require(f.shape() == spec_.x0_star.front().shape(), "oracle targets must share one shape");
            ensure_finite(f, "oracle target");
        }
    }
    OracleDenoiser(LatentFrame x0_star, NoiseSchedule s)
        : OracleDenoiser(OracleSpec{{std::move(x0_star)}}, std::move(s)) {}

    const OracleSpec& spec() const { return spec_; }

private:
    LatentFrame do_predict_eps(const LatentFrame& x, Timestep t, const FrameContext& ctx) const override {
        schedule_.check(t);
        if (t == 0) throw DomainError("oracle denoiser is undefined at t = 0 (1 - alpha_bar_0 = 0)");
        const LatentFrame& x0 = spec_.target(ctx.frame);
        require_same_shape(x, x0, "oracle denoiser");
        double ab = schedule_.alpha_bar(t);
        double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
        LatentFrame eps(x.shape());
        for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = (x[i] - sa * x0[i]) / sn;
        return eps;
    }

    OracleSpec spec_;
    NoiseSchedule schedule_;
};

/// Posterior-mean denoiser for a Gaussian data prior N(mean, prior_std^2 I):
///   x0_hat = mean + sqrt(abar) s^2 / (abar s^2 + 1 - abar) * (x_t - sqrt(abar) mean).
/// prior_std = 0 reduces to the oracle. A nonzero prior_std lets latent edits survive
/// denoising, which the oracle (by construction) erases.
class GaussianPriorDenoiser final : public Denoiser {
public:
    GaussianPriorDenoiser(OracleSpec means, double prior_std, NoiseSchedule s)
        : means_(std::move(means)), prior_std_(prior_std), schedule_(std::move(s)) {
        require(!means_.x0_star.empty(), "gaussian prior denoiser needs at least one mean frame");
        require(prior_std >= 0.0 && std::isfinite(prior_std), "prior_std must be finite and >= 0");
    }

    double prior_std() const { return prior_std_; }

private:
    LatentFrame do_predict_eps(const LatentFrame& x, Timestep t, const FrameContext& ctx) const override {
        schedule_.check(t);
        if (t == 0) throw DomainError("gaussian prior denoiser is undefined at t = 0");
        const LatentFrame& mu = means_.target(ctx.frame);
        require_same_shape(x, mu, "gaussian prior denoiser");
        double ab = schedule_.alpha_bar(t);
        double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
        double var = prior_std_ * prior_std_;
        double gain = sa * var / (ab * var + 1.0 - ab);
        LatentFrame eps(x.shape());
        for (std::size_t i = 0; i < eps.size(); ++i) {
            double x0 = mu[i] + gain * (x[i] - sa * mu[i]);
            eps[i] = (x[i] - sa * x0) / sn;
        }
        return eps;
    }

    OracleSpec means_;
    double prior_std_;
    NoiseSchedule schedule_;
};

struct Scene {
    LatentSequence latents;
    MaskTrack truth;
};

struct Velocity {
    int dx = 0;
    int dy = 0;
};

/// Bright square (1.0 on every channel) over a zero background, translating `velocity` cells
/// per frame and clamped at the borders. A moving axis starts at the edge it moves away from;
/// a static axis is centered.
inline Scene moving_square_scene(int frames, int grid, int square, Velocity velocity, int channels = 4) {
    require(frames >= 1, "scene needs at least one frame");
    require(grid >= 1 && channels >= 1, "scene grid and channel count must be positive");
    require(square >= 1 && square < grid, "square size must lie in [1, grid)");

    const int span = grid - square;
    auto start = [&](int v) { return v > 0 ? 0 : (v < 0 ? span : span / 2); };
    int x0 = start(velocity.dx), y0 = start(velocity.dy);

    Scene scene;
    scene.truth.tau = 0.5;
    const Shape shape{static_cast<std::size_t>(channels), static_cast<std::size_t>(grid), static_cast<std::size_t>(grid)};
    for (int f = 0; f < frames; ++f) {
        int px = std::clamp(x0 + f * velocity.dx, 0, span);
        int py = std::clamp(y0 + f * velocity.dy, 0, span);
        LatentFrame latent(shape);
        Mask mask(shape.height, shape.width);
        for (int y = py; y < py + square; ++y)
            for (int x = px; x < px + square; ++x) {
                mask.set(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
                for (std::size_t c = 0; c < shape.channels; ++c)
                    latent.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = 1.0;
            }
        scene.latents.push_back(std::move(latent));
        scene.truth.masks.push_back(std::move(mask));
        scene.truth.linked.push_back(true);
        scene.truth.overlap.push_back(f == 0 ? 1.0 : iou(scene.truth.masks[f], scene.truth.masks[f - 1]));
    }
    return scene;
}

inline std::vector<double> normalized(std::vector<double> v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (!(n > 0.0)) throw ParameterError("cannot normalize a zero embedding vector");
    for (double& x : v) x /= n;
    return v;
}

/// Stand-in visual embedding: per-patch channel means on a patches x patches grid, unit-normalized.
inline std::vector<double> patch_embedding_proxy(const LatentFrame& frame, int patches) {
    require(patches >= 1, "patch count must be >= 1");
    const auto p = static_cast<std::size_t>(patches);
    if (frame.height() % p != 0 || frame.width() % p != 0)
        throw ParameterError("patch count " + std::to_string(patches) + " does not divide latent grid " +
                             std::to_string(frame.height()) + "x" + std::to_string(frame.width()));
    const std::size_t ph = frame.height() / p, pw = frame.width() / p;
    std::vector<double> v(p * p, 0.0);
    const double inv = 1.0 / static_cast<double>(ph * pw * frame.channels());
    for (std::size_t c = 0; c < frame.channels(); ++c)
        for (std::size_t y = 0; y < frame.height(); ++y)
            for (std::size_t x = 0; x < frame.width(); ++x) v[(y / ph) * p + x / pw] += frame.at(c, y, x) * inv;
    return normalized(std::move(v));
}

/// Proxy visual embeddings for every frame of a sequence.
inline metrics::EmbeddingSet proxy_embeddings(const LatentSequence& seq, int patches) {
    metrics::EmbeddingSet e;
    e.kind = metrics::EmbeddingKind::visual;
    e.dim = static_cast<std::size_t>(patches) * static_cast<std::size_t>(patches);
    for (const auto& f : seq) e.frames.push_back(patch_embedding_proxy(f, patches));
    return e;
}

/// Stand-in text embedding of a video's prompt: the normalized mean of its frames' proxy embeddings.
inline metrics::EmbeddingSet proxy_prompt_embedding(const LatentSequence& seq, int patches) {
    auto frames = proxy_embeddings(seq, patches);
    metrics::EmbeddingSet e;
    e.kind = metrics::EmbeddingKind::text;
    e.dim = frames.dim;
    e.frames.push_back(normalized(frames.reference()));
    return e;
}

/// Constant-valued reference latent used as the conditioned concept in synthetic runs.
inline LatentFrame constant_reference(Shape shape, double value) { return LatentFrame(shape, value); }

}  // namespace moca::synth
