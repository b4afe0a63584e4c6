#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "moca/errors.hpp"
#include "moca/random.hpp"
#include "moca/schedule.hpp"
#include "moca/tensor.hpp"

namespace moca {

/// Which trajectory a denoiser call belongs to. Desk-scale denoisers use the frame index to pick
/// their per-frame target; `injected` lets a denoiser switch to a conditioned channel after the edit.
struct FrameContext {
    std::size_t frame = 0;
    bool injected = false;
};

/// Noise predictor eps_theta(x_t, t).
class Denoiser {
public:
    virtual ~Denoiser() = default;

    LatentFrame predict_eps(const LatentFrame& x_t, Timestep t, const FrameContext& ctx = {}) const {
        LatentFrame eps = do_predict_eps(x_t, t, ctx);
        if (eps.shape() != x_t.shape())
            throw ParameterError("denoiser returned shape " + eps.shape().str() + " for input " + x_t.shape().str());
        return eps;
    }

private:
    virtual LatentFrame do_predict_eps(const LatentFrame& x_t, Timestep t, const FrameContext& ctx) const = 0;
};

/// Adapts a callable into a Denoiser.
class FunctionDenoiser final : public Denoiser {
public:
    using Fn = std::function<LatentFrame(const LatentFrame&, Timestep, const FrameContext&)>;
    explicit FunctionDenoiser(Fn fn) : fn_(std::move(fn)) {}

private:
    LatentFrame do_predict_eps(const LatentFrame& x, Timestep t, const FrameContext& ctx) const override {
        return fn_(x, t, ctx);
    }
    Fn fn_;
};

class ZeroDenoiser final : public Denoiser {
    LatentFrame do_predict_eps(const LatentFrame& x, Timestep, const FrameContext&) const override {
        return LatentFrame(x.shape());
    }
};

/// x0_hat = (x_t - sqrt(1 - abar_t) * eps) / sqrt(abar_t)
inline LatentFrame predict_x0(const LatentFrame& x_t, Timestep t, const LatentFrame& eps_hat, const NoiseSchedule& s) {
    require(t >= 1 && t <= s.steps(), "predict_x0: timestep " + std::to_string(t) + " outside [1, T]");
    require_same_shape(x_t, eps_hat, "predict_x0");
    double ab = s.alpha_bar(t);
    if (!(ab > 0.0)) throw NumericError("predict_x0: singular schedule (alpha_bar = 0 at t=" + std::to_string(t) + ")");
    double sa = std::sqrt(ab);
    double sn = std::sqrt(1.0 - ab);
    LatentFrame out(x_t.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - sn * eps_hat[i]) / sa;
    ensure_finite(out, "predict_x0");
    return out;
}

/// DDIM sigma for the jump t -> t_prev.
inline double ddim_sigma(Timestep t, Timestep t_prev, const NoiseSchedule& s, double eta) {
    double ab = s.alpha_bar(t);
    double ab_prev = s.alpha_bar(t_prev);
    return eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab)) * std::sqrt(1.0 - ab / ab_prev);
}

struct StepOutput {
    LatentFrame x_prev;
    LatentFrame x0_hat;
    LatentFrame dir;
    double kappa_used = 0.0;
};

namespace detail {

struct StepParts {
    LatentFrame x0_hat;
    LatentFrame dir;
    LatentFrame noise;  // empty when sigma == 0 draws are skipped (eta == 0)
    double sqrt_ab_prev = 0.0;
    double sigma = 0.0;
};

inline StepParts prepare_step(const LatentFrame& x_t, Timestep t, Timestep t_prev, const Denoiser& denoiser,
                              const NoiseSchedule& s, double eta, RandomSource& rng, const FrameContext& ctx) {
    require(t >= 1 && t <= s.steps(), "ddim step: timestep " + std::to_string(t) + " outside [1, T]");
    require(t_prev >= 0 && t_prev < t, "ddim step: previous timestep must lie in [0, t)");
    require(eta >= 0.0, "ddim step: eta must be >= 0");

    StepParts p;
    LatentFrame eps = denoiser.predict_eps(x_t, t, ctx);
    ensure_finite(eps, "denoiser output");
    p.x0_hat = predict_x0(x_t, t, eps, s);

    double ab_prev = s.alpha_bar(t_prev);
    p.sigma = ddim_sigma(t, t_prev, s, eta);
    double radicand = 1.0 - ab_prev - p.sigma * p.sigma;
    if (radicand < 0.0) {
        if (radicand < -1e-12)
            throw ParameterError("ddim step: sigma_t^2 exceeds 1 - alpha_bar_{t-1} (eta=" + std::to_string(eta) + ")");
        radicand = 0.0;
    }
    p.dir = scaled(eps, std::sqrt(radicand));
    p.sqrt_ab_prev = std::sqrt(ab_prev);
    if (eta > 0.0) p.noise = rng.gaussian_frame(x_t.shape());
    return p;
}

/// sqrt(abar_prev) * x0 + dir + sigma * noise
inline LatentFrame emit(const LatentFrame& x0, const StepParts& p) {
    LatentFrame out(x0.shape());
    if (p.noise.empty()) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = p.sqrt_ab_prev * x0[i] + p.dir[i];
    } else {
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = p.sqrt_ab_prev * x0[i] + p.dir[i] + p.sigma * p.noise[i];
    }
    ensure_finite(out, "ddim step");
    return out;
}

}  // namespace detail

/// One DDIM update from t to t_prev (t_prev < t). Draws one Gaussian frame iff eta > 0.
inline StepOutput ddim_step(const LatentFrame& x_t, Timestep t, Timestep t_prev, const Denoiser& denoiser,
                            const NoiseSchedule& s, double eta, RandomSource& rng, const FrameContext& ctx = {}) {
    auto parts = detail::prepare_step(x_t, t, t_prev, denoiser, s, eta, rng, ctx);
    StepOutput out;
    out.x_prev = detail::emit(parts.x0_hat, parts);
    out.x0_hat = std::move(parts.x0_hat);
    out.dir = std::move(parts.dir);
    return out;
}

inline StepOutput ddim_step(const LatentFrame& x_t, Timestep t, const Denoiser& denoiser, const NoiseSchedule& s,
                            double eta, RandomSource& rng, const FrameContext& ctx = {}) {
    return ddim_step(x_t, t, t - 1, denoiser, s, eta, rng, ctx);
}

/// kappa_t = kappa0 * (1 - t / T); zero at t = T, kappa0 at t = 0.
inline double kappa_at(Timestep t, int T, double kappa0) {
    return kappa0 * (1.0 - static_cast<double>(t) / static_cast<double>(T));
}

/// Running state of the momentum-corrected sampler for one trajectory.
class MomentumState {
public:
    struct Params {
        double beta = 0.9;    // momentum decay
        double lambda = 1.0;  // direction scale
        double kappa0 = 2.0;  // base correction weight
    };

    MomentumState(Shape shape, int total_steps, Params params)
        : params_(params), total_steps_(total_steps), v_(shape) {
        require(params.beta >= 0.0 && params.beta <= 1.0, "momentum beta must lie in [0, 1]");
        require(params.lambda >= 0.0, "momentum lambda must be >= 0");
        require(params.kappa0 >= 0.0, "momentum kappa0 must be >= 0");
        require(total_steps >= 1, "momentum T must be >= 1");
    }

    const Params& params() const { return params_; }
    int total_steps() const { return total_steps_; }
    const LatentFrame& velocity() const { return v_; }
    const std::optional<LatentFrame>& prev_x() const { return prev_x_; }

    /// v <- beta * v + (1 - beta) * (x_t - x_prev + lambda * dir); remembers x_t.
    void accumulate(const LatentFrame& x_t, const LatentFrame& x_prev, const LatentFrame& dir) {
        for (std::size_t i = 0; i < v_.size(); ++i) {
            double g = x_t[i] - x_prev[i] + params_.lambda * dir[i];
            v_[i] = params_.beta * v_[i] + (1.0 - params_.beta) * g;
        }
        prev_x_ = x_t;
    }

private:
    Params params_;
    int total_steps_;
    LatentFrame v_;
    std::optional<LatentFrame> prev_x_;
};

struct MomentumStepResult {
    StepOutput step;
    MomentumState state;
};

/// Momentum-corrected DDIM step:
///   provisional x_{t-1} from the vanilla update,
///   g_t = x_t - x_{t-1} + lambda * dir_t,  v_t = beta * v_{t-1} + (1 - beta) * g_t,
///   x0_corr = x0_hat + kappa_t * v_t, re-emitted with the same dir_t and noise draw.
inline MomentumStepResult momentum_step(const LatentFrame& x_t, Timestep t, Timestep t_prev, const Denoiser& denoiser,
                                        const NoiseSchedule& s, MomentumState state, double eta, RandomSource& rng,
                                        const FrameContext& ctx = {}) {
    if (state.velocity().shape() != x_t.shape())
        throw ParameterError("momentum_step: state shape " + state.velocity().shape().str() +
                             " does not match latent " + x_t.shape().str());
    require(state.total_steps() == s.steps(), "momentum_step: state T does not match schedule T");

    auto parts = detail::prepare_step(x_t, t, t_prev, denoiser, s, eta, rng, ctx);
    LatentFrame provisional = detail::emit(parts.x0_hat, parts);

    state.accumulate(x_t, provisional, parts.dir);
    double kappa = kappa_at(t, state.total_steps(), state.params().kappa0);
    const LatentFrame& v = state.velocity();
    LatentFrame x0_corr(x_t.shape());
    for (std::size_t i = 0; i < x_t.size(); ++i) x0_corr[i] = parts.x0_hat[i] + kappa * v[i];

    StepOutput out;
    out.x_prev = detail::emit(x0_corr, parts);
    out.x0_hat = std::move(x0_corr);
    out.dir = std::move(parts.dir);
    out.kappa_used = kappa;
    return {std::move(out), std::move(state)};
}

inline MomentumStepResult momentum_step(const LatentFrame& x_t, Timestep t, const Denoiser& denoiser,
                                        const NoiseSchedule& s, MomentumState state, double eta, RandomSource& rng,
                                        const FrameContext& ctx = {}) {
    return momentum_step(x_t, t, t - 1, denoiser, s, std::move(state), eta, rng, ctx);
}

/// Deterministic DDIM inversion on a uniform grid of `steps` jumps. Returns x_0 .. x_T (steps + 1 frames).
/// The noise estimate for each jump is taken at the current (lower-noise) latent; for the first jump,
/// where t = 0 has no noise estimate, the denoiser is queried at the next grid timestep.
inline LatentSequence ddim_invert(const LatentFrame& x0, const Denoiser& denoiser, const NoiseSchedule& s, int steps,
                                  const FrameContext& ctx = {}) {
    require(steps >= 1, "ddim_invert: steps must be >= 1");
    auto grid = uniform_grid(s.steps(), steps);
    LatentSequence traj;
    traj.push_back(x0);
    LatentFrame x = x0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        Timestep t_cur = grid[i];
        Timestep t_next = grid[i + 1];
        LatentFrame eps = denoiser.predict_eps(x, t_cur == 0 ? t_next : t_cur, ctx);
        ensure_finite(eps, "denoiser output");
        LatentFrame x0_hat = t_cur == 0 ? x : predict_x0(x, t_cur, eps, s);
        double ab_next = s.alpha_bar(t_next);
        x = axpby(std::sqrt(ab_next), x0_hat, std::sqrt(1.0 - ab_next), eps);
        ensure_finite(x, "ddim_invert");
        traj.push_back(x);
    }
    return traj;
}

/// Plain DDIM sampling from x at grid.back() down to grid.front() (grid ascending, as from uniform_grid).
inline LatentFrame ddim_sample(LatentFrame x, const std::vector<Timestep>& grid, const Denoiser& denoiser,
                               const NoiseSchedule& s, double eta, RandomSource& rng, const FrameContext& ctx = {}) {
    for (std::size_t i = grid.size() - 1; i > 0; --i)
        x = ddim_step(x, grid[i], grid[i - 1], denoiser, s, eta, rng, ctx).x_prev;
    return x;
}

}  // namespace moca
