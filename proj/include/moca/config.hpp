#pragma once

// Run configuration: JSON in, validated struct out. Absent fields take the defaults below;
// unknown keys and out-of-range values are rejected with the offending field named.

#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "moca/errors.hpp"
#include "moca/schedule.hpp"

namespace moca {

struct ScheduleConfig {
    int T = 1000;
    double beta_start = 0.00085;
    double beta_end = 0.012;
    ScheduleKind kind = ScheduleKind::scaled_linear;
    bool operator==(const ScheduleConfig&) const = default;
};

struct SamplerConfig {
    double eta = 0.0;
    double beta = 0.9;
    double lambda = 1.0;
    double kappa0 = 2.0;
    bool operator==(const SamplerConfig&) const = default;
};

struct InjectionConfig {
    int t_prime = 300;
    double strength = 2.0;
    double gamma_res = 0.05;
    double tau = 0.5;
    double cutoff = 0.25;
    bool operator==(const InjectionConfig&) const = default;
};

struct QueueConfig {
    int length = 16;
    int frames = 16;
    bool operator==(const QueueConfig&) const = default;
};

/// Empty paths select the built-in synthetic scene / reference latent.
struct IoConfig {
    std::string source;
    std::string cond;
    bool operator==(const IoConfig&) const = default;
};

struct DenoiserConfig {
    std::string kind = "gaussian_prior";  // gaussian_prior | oracle
    double prior_std = 0.5;
    bool operator==(const DenoiserConfig&) const = default;
};

struct SegmenterConfig {
    double theta = 0.5;
    bool largest_component = true;
    bool operator==(const SegmenterConfig&) const = default;
};

/// Built-in moving-square scene, used when io.source is empty.
struct SceneConfig {
    int grid = 8;
    int channels = 4;
    int square = 4;
    std::array<int, 2> velocity{1, 0};
    double cond_value = -1.0;  // reference latent: constant fill
    bool operator==(const SceneConfig&) const = default;
};

struct RunConfig {
    std::uint64_t seed = 0;
    ScheduleConfig schedule;
    SamplerConfig sampler;
    InjectionConfig injection;
    QueueConfig queue;
    IoConfig io;
    DenoiserConfig denoiser;
    SegmenterConfig segmenter;
    SceneConfig scene;
    bool operator==(const RunConfig&) const = default;
};

namespace config_detail {

using nlohmann::json;

class Reader {
public:
    Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ParameterError(path_ + ": expected a JSON object");
    }

    template <typename T>
    void field(const char* key, T& out) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ParameterError(name(key) + ": wrong JSON type");
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key())) throw ParameterError(name(it.key().c_str()) + ": unknown key");
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void check(bool ok, const std::string& field, const std::string& bound) {
    if (!ok) throw ParameterError(field + " out of range: must satisfy " + bound);
}

inline bool finite(double v) { return std::isfinite(v); }

}  // namespace config_detail

inline void validate(const RunConfig& c) {
    using config_detail::check;
    using config_detail::finite;
    const auto& s = c.schedule;
    check(s.T >= 1, "schedule.T", "T >= 1");
    check(finite(s.beta_start) && s.beta_start > 0.0 && s.beta_start < 1.0, "schedule.beta_start", "0 < beta_start < 1");
    check(finite(s.beta_end) && s.beta_end >= s.beta_start && s.beta_end < 1.0, "schedule.beta_end",
          "beta_start <= beta_end < 1");
    const auto& m = c.sampler;
    check(finite(m.eta) && m.eta >= 0.0 && m.eta <= 1.0, "sampler.eta", "0 <= eta <= 1");
    check(finite(m.beta) && m.beta >= 0.0 && m.beta <= 1.0, "sampler.beta", "0 <= beta <= 1");
    check(finite(m.lambda) && m.lambda >= 0.0, "sampler.lambda", "lambda >= 0");
    check(finite(m.kappa0) && m.kappa0 >= 0.0, "sampler.kappa0", "kappa0 >= 0");
    const auto& j = c.injection;
    check(j.t_prime > 0 && j.t_prime <= s.T, "injection.t_prime", "0 < t_prime <= schedule.T");
    check(finite(j.strength) && j.strength >= 0.0, "injection.strength", "strength >= 0");
    check(finite(j.gamma_res) && j.gamma_res >= 0.0, "injection.gamma_res", "gamma_res >= 0");
    check(finite(j.tau) && j.tau >= 0.0 && j.tau <= 1.0, "injection.tau", "0 <= tau <= 1");
    check(finite(j.cutoff) && j.cutoff >= 0.0 && j.cutoff <= 0.5, "injection.cutoff", "0 <= cutoff <= 0.5");
    check(c.queue.length >= 1 && c.queue.length <= s.T, "queue.length", "1 <= length <= schedule.T");
    check(c.queue.frames >= 1, "queue.frames", "frames >= 1");
    check(c.denoiser.kind == "gaussian_prior" || c.denoiser.kind == "oracle", "denoiser.kind",
          "one of gaussian_prior|oracle");
    check(finite(c.denoiser.prior_std) && c.denoiser.prior_std >= 0.0, "denoiser.prior_std", "prior_std >= 0");
    check(finite(c.segmenter.theta), "segmenter.theta", "finite");
    const auto& sc = c.scene;
    check(sc.grid >= 2, "scene.grid", "grid >= 2");
    check(sc.channels >= 1, "scene.channels", "channels >= 1");
    check(sc.square >= 1 && sc.square < sc.grid, "scene.square", "1 <= square < grid");
    check(finite(sc.cond_value) && sc.cond_value != 0.0, "scene.cond_value", "finite and nonzero");
}

inline RunConfig parse_config(const nlohmann::json& doc) {
    using config_detail::Reader;
    RunConfig c;
    Reader root(doc, "");
    root.field("seed", c.seed);
    if (const auto* j = root.child("schedule")) {
        Reader r(*j, "schedule");
        r.field("T", c.schedule.T);
        r.field("beta_start", c.schedule.beta_start);
        r.field("beta_end", c.schedule.beta_end);
        std::string kind(to_string(c.schedule.kind));
        r.field("kind", kind);
        c.schedule.kind = schedule_kind_from_string(kind);
        r.finish();
    }
    if (const auto* j = root.child("sampler")) {
        Reader r(*j, "sampler");
        r.field("eta", c.sampler.eta);
        r.field("beta", c.sampler.beta);
        r.field("lambda", c.sampler.lambda);
        r.field("kappa0", c.sampler.kappa0);
        r.finish();
    }
    if (const auto* j = root.child("injection")) {
        Reader r(*j, "injection");
        r.field("t_prime", c.injection.t_prime);
        r.field("strength", c.injection.strength);
        r.field("gamma_res", c.injection.gamma_res);
        r.field("tau", c.injection.tau);
        r.field("cutoff", c.injection.cutoff);
        r.finish();
    }
    if (const auto* j = root.child("queue")) {
        Reader r(*j, "queue");
        r.field("length", c.queue.length);
        r.field("frames", c.queue.frames);
        r.finish();
    }
    if (const auto* j = root.child("io")) {
        Reader r(*j, "io");
        r.field("source", c.io.source);
        r.field("cond", c.io.cond);
        r.finish();
    }
    if (const auto* j = root.child("denoiser")) {
        Reader r(*j, "denoiser");
        r.field("kind", c.denoiser.kind);
        r.field("prior_std", c.denoiser.prior_std);
        r.finish();
    }
    if (const auto* j = root.child("segmenter")) {
        Reader r(*j, "segmenter");
        r.field("theta", c.segmenter.theta);
        r.field("largest_component", c.segmenter.largest_component);
        r.finish();
    }
    if (const auto* j = root.child("scene")) {
        Reader r(*j, "scene");
        r.field("grid", c.scene.grid);
        r.field("channels", c.scene.channels);
        r.field("square", c.scene.square);
        r.field("velocity", c.scene.velocity);
        r.field("cond_value", c.scene.cond_value);
        r.finish();
    }
    root.finish();
    validate(c);
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParameterError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

inline nlohmann::json to_json(const RunConfig& c) {
    return {
        {"seed", c.seed},
        {"schedule",
         {{"T", c.schedule.T},
          {"beta_start", c.schedule.beta_start},
          {"beta_end", c.schedule.beta_end},
          {"kind", std::string(to_string(c.schedule.kind))}}},
        {"sampler",
         {{"eta", c.sampler.eta}, {"beta", c.sampler.beta}, {"lambda", c.sampler.lambda}, {"kappa0", c.sampler.kappa0}}},
        {"injection",
         {{"t_prime", c.injection.t_prime},
          {"strength", c.injection.strength},
          {"gamma_res", c.injection.gamma_res},
          {"tau", c.injection.tau},
          {"cutoff", c.injection.cutoff}}},
        {"queue", {{"length", c.queue.length}, {"frames", c.queue.frames}}},
        {"io", {{"source", c.io.source}, {"cond", c.io.cond}}},
        {"denoiser", {{"kind", c.denoiser.kind}, {"prior_std", c.denoiser.prior_std}}},
        {"segmenter", {{"theta", c.segmenter.theta}, {"largest_component", c.segmenter.largest_component}}},
        {"scene",
         {{"grid", c.scene.grid},
          {"channels", c.scene.channels},
          {"square", c.scene.square},
          {"velocity", c.scene.velocity},
          {"cond_value", c.scene.cond_value}}},
    };
}

inline NoiseSchedule make_schedule(const ScheduleConfig& c) {
    return make_schedule(c.T, c.beta_start, c.beta_end, c.kind);
}

}  // namespace moca
