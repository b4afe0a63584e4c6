#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "moca/errors.hpp"
#include "moca/tensor.hpp"

namespace moca::metrics {

using Vector = std::vector<double>;

enum class Scale { unit, percent };

inline double scale_factor(Scale s) { return s == Scale::percent ? 100.0 : 1.0; }
inline std::string_view to_string(Scale s) { return s == Scale::percent ? "percent" : "unit"; }
inline Scale scale_from_string(std::string_view s) {
    if (s == "unit") return Scale::unit;
    if (s == "percent") return Scale::percent;
    throw ParameterError("unknown scale '" + std::string(s) + "' (expected unit|percent)");
}

inline double cosine_sim(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw ParameterError("cosine_sim: dimension mismatch " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (!(nu > 0.0) || !(nv > 0.0)) throw ParameterError("cosine_sim: zero vector");
    double c = dot / (std::sqrt(nu) * std::sqrt(nv));
    return std::clamp(c, -1.0, 1.0);
}

enum class EmbeddingKind { visual, text };

struct EmbeddingSet {
    EmbeddingKind kind = EmbeddingKind::visual;
    std::size_t dim = 0;
    std::vector<Vector> frames;

    void validate() const {
        require(dim >= 1, "embedding dim must be >= 1");
        require(!frames.empty(), "embedding set has no frames");
        for (std::size_t i = 0; i < frames.size(); ++i) {
            require(frames[i].size() == dim, "embedding frame " + std::to_string(i) + " has dim " +
                                                 std::to_string(frames[i].size()) + ", expected " + std::to_string(dim));
            bool nonzero = std::any_of(frames[i].begin(), frames[i].end(), [](double x) { return x != 0.0; });
            require(nonzero, "embedding frame " + std::to_string(i) + " is the zero vector");
        }
    }

    /// Single reference vector (text embeddings and conditioned images carry one frame; more are averaged).
    Vector reference() const {
        validate();
        if (frames.size() == 1) return frames.front();
        Vector mean(dim, 0.0);
        for (const auto& f : frames)
            for (std::size_t i = 0; i < dim; ++i) mean[i] += f[i] / static_cast<double>(frames.size());
        return mean;
    }
};

/// Mean over frames of cosine_sim(frame, ref), in the requested scale.
inline double clip_alignment(const EmbeddingSet& video, std::span<const double> ref, Scale scale = Scale::unit) {
    if (video.frames.empty()) throw ParameterError("clip_alignment: empty embedding set");
    double acc = 0.0;
    for (const auto& f : video.frames) acc += cosine_sim(f, ref);
    return scale_factor(scale) * acc / static_cast<double>(video.frames.size());
}

/// (I_fused - I_orig) - (T_fused - T_orig)
inline double cass(double clip_i_orig, double clip_i_fused, double clip_t_orig, double clip_t_fused) {
    return (clip_i_fused - clip_i_orig) - (clip_t_fused - clip_t_orig);
}

/// Each shift divided by its original alignment: dI / I_orig - dT / T_orig.
inline double rel_cass(double clip_i_orig, double clip_i_fused, double clip_t_orig, double clip_t_fused) {
    if (clip_i_orig == 0.0) throw ParameterError("rel_cass: division by zero (CLIP-I original alignment is 0)");
    if (clip_t_orig == 0.0) throw ParameterError("rel_cass: division by zero (CLIP-T original alignment is 0)");
    return (clip_i_fused - clip_i_orig) / clip_i_orig - (clip_t_fused - clip_t_orig) / clip_t_orig;
}

/// |(s(V_fused, A) + s(V_fused, B)) - (s(V_A, A) + s(V_B, B))|
inline double clip_bs(double sim_fused_a, double sim_fused_b, double sim_a_a, double sim_b_b) {
    return std::abs((sim_fused_a + sim_fused_b) - (sim_a_a + sim_b_b));
}

inline double lpips_aggregate(std::span<const double> distances) {
    if (distances.empty()) throw ParameterError("lpips_aggregate: empty distance list");
    return std::accumulate(distances.begin(), distances.end(), 0.0) / static_cast<double>(distances.size());
}

/// Single-channel image grid for SSIM.
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;

    double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
};

inline Image channel_mean_image(const LatentFrame& f) {
    Image img{f.height(), f.width(), std::vector<double>(f.shape().plane(), 0.0)};
    for (std::size_t c = 0; c < f.channels(); ++c) {
        auto ch = f.channel(c);
        for (std::size_t i = 0; i < ch.size(); ++i) img.pixels[i] += ch[i] / static_cast<double>(f.channels());
    }
    return img;
}

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double data_range = 1.0;
};

/// Normalized 1-D Gaussian taps.
inline std::vector<double> gaussian_taps(int window, double sigma) {
    std::vector<double> g(static_cast<std::size_t>(window));
    const double half = (window - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
        double d = i - half;
        g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

/// Windowed SSIM averaged over every position where the window fits inside the image.
inline double ssim(const Image& a, const Image& b, const SsimOptions& opt = {}) {
    if (a.height != b.height || a.width != b.width) throw ParameterError("ssim: image shape mismatch");
    require(opt.window >= 3 && opt.window % 2 == 1, "ssim: window must be odd and >= 3");
    require(opt.sigma > 0.0, "ssim: sigma must be > 0");
    require(opt.data_range > 0.0, "ssim: data range must be > 0");
    const auto win = static_cast<std::size_t>(opt.window);
    if (a.height < win || a.width < win)
        throw ParameterError("ssim: image " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                             " smaller than window " + std::to_string(win));

    const auto g = gaussian_taps(opt.window, opt.sigma);
    const std::size_t oh = a.height - win + 1, ow = a.width - win + 1;

    // Separable filtering: rows first (valid region), then columns.
    auto filter = [&](auto&& pixel) {
        std::vector<double> rows(a.height * ow, 0.0);
        for (std::size_t y = 0; y < a.height; ++y)
            for (std::size_t x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (std::size_t k = 0; k < win; ++k) acc += g[k] * pixel(y, x + k);
                rows[y * ow + x] = acc;
            }
        std::vector<double> out(oh * ow, 0.0);
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (std::size_t k = 0; k < win; ++k) acc += g[k] * rows[(y + k) * ow + x];
                out[y * ow + x] = acc;
            }
        return out;
    };

    auto mu_a = filter([&](std::size_t y, std::size_t x) { return a.at(y, x); });
    auto mu_b = filter([&](std::size_t y, std::size_t x) { return b.at(y, x); });
    auto e_aa = filter([&](std::size_t y, std::size_t x) { return a.at(y, x) * a.at(y, x); });
    auto e_bb = filter([&](std::size_t y, std::size_t x) { return b.at(y, x) * b.at(y, x); });
    auto e_ab = filter([&](std::size_t y, std::size_t x) { return a.at(y, x) * b.at(y, x); });

    const double c1 = (0.01 * opt.data_range) * (0.01 * opt.data_range);
    const double c2 = (0.03 * opt.data_range) * (0.03 * opt.data_range);
    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        double ma = mu_a[i], mb = mu_b[i];
        double va = e_aa[i] - ma * ma, vb = e_bb[i] - mb * mb, cov = e_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(mu_a.size());
}

/// Mean SSIM over paired frames (channel-mean images).
inline double ssim_mean(const LatentSequence& a, const LatentSequence& b, const SsimOptions& opt = {}) {
    require(a.size() == b.size(), "ssim_mean: sequences differ in length");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += ssim(channel_mean_image(a[i]), channel_mean_image(b[i]), opt);
    return acc / static_cast<double>(a.size());
}

struct MetricReport {
    Scale scale = Scale::percent;
    double clip_t_orig = 0.0;
    double clip_i_orig = 0.0;
    double clip_t_fused = 0.0;
    double clip_i_fused = 0.0;
    double cass = 0.0;
    double rel_cass = 0.0;
    std::optional<double> clip_bs;
    std::optional<double> ssim_mean;
    std::optional<double> lpips_i;
    std::optional<double> lpips_t;
};

/// CLIP-T / CLIP-I before and after fusion, and the derived shift scores.
inline MetricReport alignment_report(const EmbeddingSet& orig, const EmbeddingSet& fused, const EmbeddingSet& cond,
                                     const EmbeddingSet& text, Scale scale) {
    orig.validate();
    fused.validate();
    require(orig.dim == fused.dim && orig.dim == cond.dim && orig.dim == text.dim,
            "embedding dimensions disagree across orig/fused/cond/text");
    const Vector cond_ref = cond.reference();
    const Vector text_ref = text.reference();
    MetricReport r;
    r.scale = scale;
    r.clip_t_orig = clip_alignment(orig, text_ref, scale);
    r.clip_i_orig = clip_alignment(orig, cond_ref, scale);
    r.clip_t_fused = clip_alignment(fused, text_ref, scale);
    r.clip_i_fused = clip_alignment(fused, cond_ref, scale);
    r.cass = cass(r.clip_i_orig, r.clip_i_fused, r.clip_t_orig, r.clip_t_fused);
    r.rel_cass = rel_cass(r.clip_i_orig, r.clip_i_fused, r.clip_t_orig, r.clip_t_fused);
    return r;
}

}  // namespace moca::metrics
