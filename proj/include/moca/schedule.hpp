#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "moca/errors.hpp"
#include "moca/random.hpp"
#include "moca/tensor.hpp"

namespace moca {

using Timestep = int;

enum class ScheduleKind { linear, scaled_linear };

inline std::string_view to_string(ScheduleKind k) {
    return k == ScheduleKind::linear ? "linear" : "scaled_linear";
}

inline ScheduleKind schedule_kind_from_string(std::string_view s) {
    if (s == "linear") return ScheduleKind::linear;
    if (s == "scaled_linear") return ScheduleKind::scaled_linear;
    throw ParameterError("unknown schedule kind '" + std::string(s) + "' (expected linear|scaled_linear)");
}

/// Discrete diffusion schedule. alpha_bar has T+1 entries with alpha_bar[0] = 1;
/// beta has T entries, beta[t-1] being the per-step variance of step t.
class NoiseSchedule {
public:
    NoiseSchedule() = default;

    int steps() const { return static_cast<int>(beta_.size()); }
    ScheduleKind kind() const { return kind_; }
    double beta_start() const { return beta_start_; }
    double beta_end() const { return beta_end_; }

    double alpha_bar(Timestep t) const {
        check(t);
        return alpha_bar_[static_cast<std::size_t>(t)];
    }
    /// Per-step variance of step t, 1 <= t <= T.
    double beta(Timestep t) const {
        require(t >= 1 && t <= steps(), "beta index " + std::to_string(t) + " outside [1, " + std::to_string(steps()) + "]");
        return beta_[static_cast<std::size_t>(t - 1)];
    }

    const std::vector<double>& alpha_bars() const { return alpha_bar_; }
    const std::vector<double>& betas() const { return beta_; }

    void check(Timestep t) const {
        if (t < 0 || t > steps())
            throw ParameterError("timestep " + std::to_string(t) + " outside [0, " + std::to_string(steps()) + "]");
    }

    friend NoiseSchedule make_schedule(int T, double beta_start, double beta_end, ScheduleKind kind);

private:
    std::vector<double> alpha_bar_;
    std::vector<double> beta_;
    ScheduleKind kind_ = ScheduleKind::scaled_linear;
    double beta_start_ = 0.0;
    double beta_end_ = 0.0;
};

/// Build a linear or scaled-linear (linear in sqrt(beta)) schedule.
inline NoiseSchedule make_schedule(int T, double beta_start, double beta_end, ScheduleKind kind) {
    require(T >= 1, "schedule T must be >= 1, got " + std::to_string(T));
    require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
            "schedule betas must satisfy 0 < beta_start <= beta_end < 1");

    NoiseSchedule s;
    s.kind_ = kind;
    s.beta_start_ = beta_start;
    s.beta_end_ = beta_end;
    s.beta_.resize(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
        double frac = T == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(T - 1);
        if (kind == ScheduleKind::linear) {
            s.beta_[i] = beta_start + frac * (beta_end - beta_start);
        } else {
            double r = std::sqrt(beta_start) + frac * (std::sqrt(beta_end) - std::sqrt(beta_start));
            s.beta_[i] = r * r;
        }
    }
    s.alpha_bar_.resize(static_cast<std::size_t>(T) + 1);
    s.alpha_bar_[0] = 1.0;
    for (int t = 1; t <= T; ++t) s.alpha_bar_[t] = s.alpha_bar_[t - 1] * (1.0 - s.beta_[t - 1]);
    return s;
}

inline NoiseSchedule default_schedule() { return make_schedule(1000, 0.00085, 0.012, ScheduleKind::scaled_linear); }

/// sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps, eps drawn from rng.
inline LatentFrame forward_diffuse(const LatentFrame& x0, Timestep t, const NoiseSchedule& s, RandomSource& rng) {
    s.check(t);
    LatentFrame eps = rng.gaussian_frame(x0.shape());
    if (t == 0) return x0;
    double ab = s.alpha_bar(t);
    return axpby(std::sqrt(ab), x0, std::sqrt(1.0 - ab), eps);
}

/// Uniform sub-grid 0 = t_0 < t_1 < ... < t_n = T with t_i = round(i * T / n).
inline std::vector<Timestep> uniform_grid(int T, int n) {
    require(n >= 1, "step count must be >= 1, got " + std::to_string(n));
    require(n <= T, "step count " + std::to_string(n) + " exceeds schedule length " + std::to_string(T));
    std::vector<Timestep> grid(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i)
        grid[i] = static_cast<Timestep>(std::llround(static_cast<double>(i) * T / n));
    return grid;
}

}  // namespace moca
