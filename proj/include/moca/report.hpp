#pragma once

// JSON files for embeddings, metric reports and run manifests.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "moca/config.hpp"
#include "moca/errors.hpp"
#include "moca/lts_io.hpp"
#include "moca/metrics.hpp"
#include "moca/pipeline.hpp"
#include "moca/tracking.hpp"

namespace moca::report {

using nlohmann::json;

inline json read_json(const std::filesystem::path& path) {
    auto bytes = lts::read_file(path);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw IoError(path.string() + ": invalid JSON: " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::string text = j.dump(2) + "\n";
    lts::write_file_atomic(path, std::vector<char>(text.begin(), text.end()));
}

/// {"kind": "visual"|"text", "dim": d, "frames": [[...], ...]}
inline metrics::EmbeddingSet embeddings_from_json(const json& j, const std::string& origin = "<json>") {
    metrics::EmbeddingSet e;
    try {
        std::string kind = j.at("kind").get<std::string>();
        if (kind == "visual")
            e.kind = metrics::EmbeddingKind::visual;
        else if (kind == "text")
            e.kind = metrics::EmbeddingKind::text;
        else
            throw ParameterError(origin + ": kind must be visual or text");
        e.dim = j.at("dim").get<std::size_t>();
        e.frames = j.at("frames").get<std::vector<metrics::Vector>>();
    } catch (const json::exception& ex) {
        throw ParameterError(origin + ": malformed embedding file: " + ex.what());
    }
    try {
        e.validate();
    } catch (const ParameterError& ex) {
        throw ParameterError(origin + ": " + ex.what());
    }
    return e;
}

inline json to_json(const metrics::EmbeddingSet& e) {
    return {{"kind", e.kind == metrics::EmbeddingKind::visual ? "visual" : "text"}, {"dim", e.dim}, {"frames", e.frames}};
}

inline metrics::EmbeddingSet load_embeddings(const std::filesystem::path& path) {
    return embeddings_from_json(read_json(path), path.string());
}

inline json optional_value(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const metrics::MetricReport& r) {
    json j = {
        {"scale", std::string(metrics::to_string(r.scale))},
        {"clip_t_orig", r.clip_t_orig},
        {"clip_i_orig", r.clip_i_orig},
        {"clip_t_fused", r.clip_t_fused},
        {"clip_i_fused", r.clip_i_fused},
        {"cass", r.cass},
        {"rel_cass", r.rel_cass},
        {"clip_bs", optional_value(r.clip_bs)},
        {"ssim_mean", optional_value(r.ssim_mean)},
        {"lpips_i", optional_value(r.lpips_i)},
        {"lpips_t", optional_value(r.lpips_t)},
    };
    j["formulas"] = {
        {"cass", "(clip_i_fused - clip_i_orig) - (clip_t_fused - clip_t_orig)"},
        {"rel_cass", "(clip_i_fused - clip_i_orig) / clip_i_orig - (clip_t_fused - clip_t_orig) / clip_t_orig"},
        {"components",
         {{"clip_i_orig", r.clip_i_orig},
          {"clip_i_fused", r.clip_i_fused},
          {"clip_t_orig", r.clip_t_orig},
          {"clip_t_fused", r.clip_t_fused}}},
    };
    return j;
}

inline json to_json(const MaskTrack& t) {
    return {{"tau", t.tau}, {"linked", t.linked}, {"overlap", t.overlap}, {"degenerate", t.degenerate}};
}

inline json to_json(const RunManifest& m) {
    json frames = json::array();
    for (const auto& f : m.frames)
        frames.push_back({{"frame", f.frame},
                          {"edit_count", f.edit_count},
                          {"edit_t", f.edit_t},
                          {"linked", f.linked},
                          {"overlap", f.overlap},
                          {"mask_area", f.mask_area}});
    return {{"config", moca::to_json(m.config)},
            {"edit_timing", m.edit_timing},
            {"mask_source", m.mask_source},
            {"frames", frames},
            {"outputs", m.outputs}};
}

}  // namespace moca::report
