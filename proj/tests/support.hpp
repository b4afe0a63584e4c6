#pragma once

// Generators and brute-force reference implementations shared by the test binaries.

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "moca/moca.hpp"

namespace testkit {

using moca::LatentFrame;
using moca::Shape;

inline LatentFrame random_frame(std::mt19937_64& g, Shape shape, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    LatentFrame f(shape);
    for (auto& v : f.values()) v = d(g);
    return f;
}

inline moca::Mask random_mask(std::mt19937_64& g, std::size_t H, std::size_t W, double p = 0.5) {
    std::bernoulli_distribution d(p);
    moca::Mask m(H, W);
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) m.set(y, x, d(g));
    return m;
}

/// A smooth, nonlinear, time-dependent noise predictor.
inline moca::FunctionDenoiser wavy_denoiser(int T) {
    return moca::FunctionDenoiser([T](const LatentFrame& x, moca::Timestep t, const moca::FrameContext&) {
        LatentFrame e(x.shape());
        double phase = static_cast<double>(t) / static_cast<double>(T);
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = 0.6 * std::tanh(x[i]) + 0.3 * std::sin(3.0 * x[i] + phase);
        return e;
    });
}

/// Naive O(N^2) 2-D DFT of a real H x W plane; sign -1 forward, +1 inverse (unnormalized).
inline std::vector<std::complex<double>> naive_dft2(const std::vector<std::complex<double>>& in, std::size_t H,
                                                    std::size_t W, int sign) {
    std::vector<std::complex<double>> out(H * W);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t ky = 0; ky < H; ++ky)
        for (std::size_t kx = 0; kx < W; ++kx) {
            std::complex<double> acc = 0.0;
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x) {
                    double ang = sign * two_pi *
                                 (static_cast<double>(ky * y) / static_cast<double>(H) +
                                  static_cast<double>(kx * x) / static_cast<double>(W));
                    acc += in[y * W + x] * std::complex<double>(std::cos(ang), std::sin(ang));
                }
            out[ky * W + kx] = acc;
        }
    return out;
}

/// Ideal circular low-pass in normalized frequency: sqrt((fy)^2 + (fx)^2) <= cutoff, with f in [-0.5, 0.5).
/// A zero cutoff passes nothing.
inline std::vector<bool> reference_lowpass(std::size_t H, std::size_t W, double cutoff) {
    std::vector<bool> L(H * W);
    auto freq = [](std::size_t k, std::size_t n) {
        double kk = static_cast<double>(k);
        if (2 * k >= n && n > 1) kk -= static_cast<double>(n);
        if (2 * k == n) kk = -kk;  // Nyquist bin: |f| = 0.5 either way
        return kk / static_cast<double>(n);
    };
    for (std::size_t ky = 0; ky < H; ++ky)
        for (std::size_t kx = 0; kx < W; ++kx) {
            double fy = freq(ky, H), fx = freq(kx, W);
            L[ky * W + kx] = cutoff > 0.0 && std::sqrt(fy * fy + fx * fx) <= cutoff + 1e-12;
        }
    return L;
}

/// Splits one channel plane into the part inside `keep` and the remainder, by naive DFT.
inline std::vector<double> band_filter(const std::vector<double>& plane, std::size_t H, std::size_t W,
                                       const std::vector<bool>& keep, bool inside) {
    std::vector<std::complex<double>> c(plane.begin(), plane.end());
    auto F = naive_dft2(c, H, W, -1);
    for (std::size_t i = 0; i < F.size(); ++i)
        if (keep[i] != inside) F[i] = 0.0;
    auto back = naive_dft2(F, H, W, +1);
    std::vector<double> out(H * W);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = back[i].real() / static_cast<double>(H * W);
    return out;
}

inline std::vector<double> plane_of(const LatentFrame& f, std::size_t c) {
    auto s = f.channel(c);
    return {s.begin(), s.end()};
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    return dot(a, b) / std::sqrt(dot(a, a) * dot(b, b));
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

/// Windowed SSIM by direct 2-D summation at every valid window position.
inline double direct_ssim(const moca::metrics::Image& a, const moca::metrics::Image& b, int window = 11,
                          double sigma = 1.5, double L = 1.0) {
    const int half = window / 2;
    std::vector<double> w(static_cast<std::size_t>(window * window));
    double total = 0.0;
    for (int i = 0; i < window; ++i)
        for (int j = 0; j < window; ++j) {
            double di = i - half, dj = j - half;
            double v = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
            w[static_cast<std::size_t>(i * window + j)] = v;
            total += v;
        }
    for (auto& v : w) v /= total;

    const double C1 = (0.01 * L) * (0.01 * L), C2 = (0.03 * L) * (0.03 * L);
    const int H = static_cast<int>(a.height), W = static_cast<int>(a.width);
    double acc = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + window <= H; ++y0)
        for (int x0 = 0; x0 + window <= W; ++x0) {
            double ma = 0, mb = 0;
            for (int i = 0; i < window; ++i)
                for (int j = 0; j < window; ++j) {
                    double k = w[static_cast<std::size_t>(i * window + j)];
                    ma += k * a.at(static_cast<std::size_t>(y0 + i), static_cast<std::size_t>(x0 + j));
                    mb += k * b.at(static_cast<std::size_t>(y0 + i), static_cast<std::size_t>(x0 + j));
                }
            double va = 0, vb = 0, cab = 0;
            for (int i = 0; i < window; ++i)
                for (int j = 0; j < window; ++j) {
                    double k = w[static_cast<std::size_t>(i * window + j)];
                    double da = a.at(static_cast<std::size_t>(y0 + i), static_cast<std::size_t>(x0 + j)) - ma;
                    double db = b.at(static_cast<std::size_t>(y0 + i), static_cast<std::size_t>(x0 + j)) - mb;
                    va += k * da * da;
                    vb += k * db * db;
                    cab += k * da * db;
                }
            acc += ((2 * ma * mb + C1) * (2 * cab + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
            ++count;
        }
    return acc / count;
}

inline moca::metrics::Image random_image(std::mt19937_64& g, std::size_t H, std::size_t W) {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    moca::metrics::Image img{H, W, std::vector<double>(H * W)};
    for (auto& p : img.pixels) p = d(g);
    return img;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("moca_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testkit
