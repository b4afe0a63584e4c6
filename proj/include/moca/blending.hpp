#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include <fftw3.h>

#include "moca/errors.hpp"
#include "moca/mask.hpp"
#include "moca/random.hpp"
#include "moca/schedule.hpp"
#include "moca/tensor.hpp"

namespace moca {

/// In-mask interpolation weight. The conditioning strength maps to w = min(1, strength / 2),
/// so strength 2 reproduces pure replacement inside the mask.
struct BlendParams {
    double strength = 2.0;

    double weight() const { return std::min(1.0, strength / 2.0); }

    static BlendParams from_weight(double w) { return BlendParams{2.0 * w}; }
};

struct ResidualParams {
    double gamma = 0.05;
};

/// Outside the mask x_t is copied; inside it becomes (1 - w) x_t + w x_cond.
inline LatentFrame blend_region(const LatentFrame& x_t, const LatentFrame& x_cond, const Mask& m, const BlendParams& p) {
    require_same_shape(x_t, x_cond, "blend_region");
    if (m.height() != x_t.height() || m.width() != x_t.width())
        throw ParameterError("blend_region: mask is " + std::to_string(m.height()) + "x" + std::to_string(m.width()) +
                             ", latent grid is " + std::to_string(x_t.height()) + "x" + std::to_string(x_t.width()));
    require(p.strength >= 0.0, "blend strength must be >= 0");
    const double w = p.weight();
    LatentFrame out = x_t;
    const std::size_t plane = x_t.shape().plane();
    for (std::size_t c = 0; c < x_t.channels(); ++c)
        for (std::size_t i = 0; i < plane; ++i)
            if (m[i]) {
                std::size_t k = c * plane + i;
                out[k] = (1.0 - w) * x_t[k] + w * x_cond[k];
            }
    return out;
}

/// x + gamma * eps over the whole frame. gamma = 0 returns the input without drawing.
inline LatentFrame gamma_residual(const LatentFrame& x_mix, const ResidualParams& p, RandomSource& rng) {
    require(p.gamma >= 0.0, "gamma residual scale must be >= 0");
    if (p.gamma == 0.0) return x_mix;
    LatentFrame eps = rng.gaussian_frame(x_mix.shape());
    return axpby(1.0, x_mix, p.gamma, eps);
}

namespace detail {

struct FftwFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};
struct FftwPlanDestroy {
    void operator()(fftw_plan p) const { fftw_destroy_plan(p); }
};
using PlanHandle = std::unique_ptr<std::remove_pointer_t<fftw_plan>, FftwPlanDestroy>;

/// Forward (sign = FFTW_FORWARD) or unnormalized inverse 2-D DFT of one H x W plane.
inline std::vector<std::complex<double>> dft2(const std::vector<std::complex<double>>& in, std::size_t H, std::size_t W,
                                              int sign) {
    std::unique_ptr<fftw_complex, FftwFree> buf(fftw_alloc_complex(H * W));
    PlanHandle plan(fftw_plan_dft_2d(static_cast<int>(H), static_cast<int>(W), buf.get(), buf.get(), sign, FFTW_ESTIMATE));
    for (std::size_t i = 0; i < H * W; ++i) {
        buf.get()[i][0] = in[i].real();
        buf.get()[i][1] = in[i].imag();
    }
    fftw_execute(plan.get());
    std::vector<std::complex<double>> out(H * W);
    for (std::size_t i = 0; i < H * W; ++i) out[i] = {buf.get()[i][0], buf.get()[i][1]};
    return out;
}

}  // namespace detail

/// Signed frequency index of DFT bin k on an axis of length n (k > n/2 wraps negative).
inline double signed_frequency(std::size_t k, std::size_t n) {
    return k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
}

/// Ideal low-pass mask over an H x W spectrum: bins with normalized radius
/// sqrt((ky/H)^2 + (kx/W)^2) <= cutoff. cutoff = 0 selects nothing.
inline std::vector<std::uint8_t> lowpass_mask(std::size_t H, std::size_t W, double cutoff) {
    std::vector<std::uint8_t> L(H * W, 0);
    if (cutoff <= 0.0) return L;
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
            double fy = signed_frequency(y, H) / static_cast<double>(H);
            double fx = signed_frequency(x, W) / static_cast<double>(W);
            if (std::sqrt(fy * fy + fx * fx) <= cutoff + 1e-12) L[y * W + x] = 1;
        }
    return L;
}

/// Fresh tail latent at t = T whose low spatial frequencies come from the diffused recent frame
/// and whose high frequencies come from fresh unit Gaussian noise.
///
/// Always draws the diffusion noise first, then the fresh noise, so stream usage does not depend on cutoff.
inline LatentFrame reinit_tail_noise(const LatentFrame& x_recent, const NoiseSchedule& s, double cutoff,
                                     RandomSource& rng) {
    require(cutoff >= 0.0 && cutoff <= 0.5, "tail cutoff must lie in [0, 0.5]");
    LatentFrame diffused = forward_diffuse(x_recent, s.steps(), s, rng);
    LatentFrame fresh = rng.gaussian_frame(x_recent.shape());

    const std::size_t H = x_recent.height(), W = x_recent.width();
    auto L = lowpass_mask(H, W, cutoff);
    bool none = std::none_of(L.begin(), L.end(), [](auto v) { return v != 0; });
    bool all = std::all_of(L.begin(), L.end(), [](auto v) { return v != 0; });
    if (none) return fresh;
    if (all) return diffused;

    LatentFrame out(x_recent.shape());
    const double inv_n = 1.0 / static_cast<double>(H * W);
    for (std::size_t c = 0; c < x_recent.channels(); ++c) {
        auto a = diffused.channel(c);
        auto b = fresh.channel(c);
        std::vector<std::complex<double>> sa(a.begin(), a.end()), sb(b.begin(), b.end());
        auto fa = detail::dft2(sa, H, W, FFTW_FORWARD);
        auto fb = detail::dft2(sb, H, W, FFTW_FORWARD);
        for (std::size_t i = 0; i < H * W; ++i) fa[i] = L[i] ? fa[i] : fb[i];
        auto mixed = detail::dft2(fa, H, W, FFTW_BACKWARD);
        auto dst = out.channel(c);
        for (std::size_t i = 0; i < H * W; ++i) dst[i] = mixed[i].real() * inv_n;
    }
    ensure_finite(out, "reinit_tail_noise");
    return out;
}

}  // namespace moca
