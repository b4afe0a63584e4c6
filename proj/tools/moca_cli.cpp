// moca: command-line front end for the semantic-mixing engine.
//
// Exit codes: 0 ok, 2 validation, 3 I/O, 4 numeric. Failures print one JSON line on stderr.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "moca/moca.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kValidation = 2, kIo = 3, kNumeric = 4 };

int fail(int code, const char* kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"code", code}, {"message", message}}.dump() << std::endl;
    return code;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw moca::IoError(dir.string() + ": cannot create directory: " + ec.message());
}

moca::RunConfig load_config(const std::string& path) {
    moca::RunConfig cfg;
    if (!path.empty()) {
        auto bytes = moca::lts::read_file(path);
        try {
            cfg = moca::parse_config(std::string(bytes.begin(), bytes.end()));
        } catch (const moca::ParameterError& e) {
            throw moca::ParameterError(path + ": " + e.what());
        }
    }
    if (const char* env = std::getenv("MOCA_SEED")) {
        try {
            std::size_t used = 0;
            cfg.seed = std::stoull(env, &used, 0);
            if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw moca::ParameterError(std::string("MOCA_SEED is not an unsigned integer: '") + env + "'");
        }
    }
    return cfg;
}

std::vector<double> load_distances(const std::string& path) {
    auto j = moca::report::read_json(path);
    try {
        return j.get<std::vector<double>>();
    } catch (const json::exception&) {
        throw moca::ParameterError(path + ": expected a JSON array of numbers");
    }
}

struct MixArgs {
    std::string config;
    std::string out;
    bool trace = false;
};

int run_mix(const MixArgs& a) {
    moca::RunConfig cfg = load_config(a.config);

    moca::LatentSequence source;
    if (cfg.io.source.empty()) {
        source = moca::synth::moving_square_scene(cfg.queue.frames, cfg.scene.grid, cfg.scene.square,
                                                  {cfg.scene.velocity[0], cfg.scene.velocity[1]}, cfg.scene.channels)
                     .latents;
    } else {
        source = moca::lts::load_latents(cfg.io.source);
    }
    moca::LatentFrame cond = cfg.io.cond.empty()
                                 ? moca::synth::constant_reference(source.shape(), cfg.scene.cond_value)
                                 : moca::lts::load_latents(cfg.io.cond).front();

    const auto schedule = moca::make_schedule(cfg.schedule);
    const double prior_std = cfg.denoiser.kind == "oracle" ? 0.0 : cfg.denoiser.prior_std;
    moca::synth::GaussianPriorDenoiser denoiser({source.frames()}, prior_std, schedule);
    moca::ThresholdSegmenter segmenter(cfg.segmenter.theta, cfg.segmenter.largest_component);

    moca::TraceSink sink;
    if (a.trace)
        sink.on_step = [](const moca::TraceEvent& e) {
            std::cout << json{{"frame", e.frame}, {"t", e.t}, {"t_prev", e.t_prev}, {"kappa", e.kappa},
                              {"v_norm", e.velocity_norm}}
                             .dump()
                      << '\n';
        };

    auto result = moca::run_semantic_mix(cfg, source, cond, denoiser, segmenter, a.trace ? &sink : nullptr);

    const fs::path dir(a.out);
    ensure_dir(dir);
    moca::lts::save_latents(dir / "frames.lts", result.frames);
    moca::lts::save_masks(dir / "masks.lts", result.track.masks);
    moca::report::write_json(dir / "masks.json", moca::report::to_json(result.track));
    result.manifest.outputs = {"frames.lts", "masks.lts", "masks.json", "manifest.json"};
    moca::report::write_json(dir / "manifest.json", moca::report::to_json(result.manifest));
    return kOk;
}

struct InvertArgs {
    std::string latents;
    std::string out;
    std::string config;
    int steps = 50;
    std::size_t frame = 0;
    std::string denoiser = "gaussian";
    double prior_std = 1.0;
};

int run_invert(const InvertArgs& a) {
    moca::RunConfig cfg = load_config(a.config);
    auto input = moca::lts::load_latents(a.latents);
    if (a.frame >= input.size())
        throw moca::ParameterError("--frame " + std::to_string(a.frame) + " outside the " +
                                   std::to_string(input.size()) + "-frame input");
    const auto schedule = moca::make_schedule(cfg.schedule);
    const auto& x0 = input[a.frame];

    moca::LatentSequence traj;
    if (a.denoiser == "zero") {
        traj = moca::ddim_invert(x0, moca::ZeroDenoiser{}, schedule, a.steps);
    } else {
        // Gaussian data prior centered at zero.
        moca::synth::GaussianPriorDenoiser d({{moca::LatentFrame(x0.shape())}}, a.prior_std, schedule);
        traj = moca::ddim_invert(x0, d, schedule, a.steps);
    }
    moca::lts::save_latents(a.out, traj);
    return kOk;
}

struct TrackArgs {
    std::string latents;
    std::string out;
    double tau = 0.5;
    double theta = 0.5;
    bool all_components = false;
};

int run_track(const TrackArgs& a) {
    auto latents = moca::lts::load_latents(a.latents);
    moca::ThresholdSegmenter seg(a.theta, !a.all_components);
    auto track = moca::track_masks(latents, seg, a.tau);
    moca::lts::save_masks(a.out, track.masks);
    fs::path sidecar(a.out);
    sidecar.replace_extension(".json");
    moca::report::write_json(sidecar, moca::report::to_json(track));
    if (track.degenerate)
        std::cerr << json{{"warning", "degenerate_track"}, {"message", "frame 0 segmented to an empty mask"}}.dump()
                  << std::endl;
    return kOk;
}

struct SynthArgs {
    std::string out;
    int frames = 16;
    int grid = 8;
    int square = 4;
    int vx = 1;
    int vy = 0;
    int channels = 4;
    int patches = 4;
    double cond_value = -1.0;
};

int run_synth(const SynthArgs& a) {
    auto scene = moca::synth::moving_square_scene(a.frames, a.grid, a.square, {a.vx, a.vy}, a.channels);
    auto cond = moca::synth::constant_reference(scene.latents.shape(), a.cond_value);
    const fs::path dir(a.out);
    ensure_dir(dir);
    moca::lts::save_latents(dir / "scene.lts", scene.latents);
    moca::lts::save_latents(dir / "cond.lts", moca::LatentSequence({cond}));
    moca::lts::save_masks(dir / "masks.lts", scene.truth.masks);
    moca::report::write_json(dir / "embeddings.json",
                             moca::report::to_json(moca::synth::proxy_embeddings(scene.latents, a.patches)));
    moca::report::write_json(dir / "prompt.json",
                             moca::report::to_json(moca::synth::proxy_prompt_embedding(scene.latents, a.patches)));
    moca::metrics::EmbeddingSet ce{moca::metrics::EmbeddingKind::visual,
                                   static_cast<std::size_t>(a.patches * a.patches),
                                   {moca::synth::patch_embedding_proxy(cond, a.patches)}};
    moca::report::write_json(dir / "cond.json", moca::report::to_json(ce));
    return kOk;
}

struct EmbedArgs {
    std::string latents;
    std::string out;
    int patches = 4;
    std::string kind = "visual";
};

int run_embed(const EmbedArgs& a) {
    auto latents = moca::lts::load_latents(a.latents);
    auto e = a.kind == "text" ? moca::synth::proxy_prompt_embedding(latents, a.patches)
                              : moca::synth::proxy_embeddings(latents, a.patches);
    moca::report::write_json(a.out, moca::report::to_json(e));
    return kOk;
}

struct MetricsArgs {
    std::string orig, fused, cond, text, out;
    std::string scale = "percent";
    std::string orig_latents, fused_latents;
    double ssim_range = 1.0;
    int ssim_window = 11;
    std::string lpips_i, lpips_t;
};

int run_metrics(const MetricsArgs& a) {
    const auto scale = moca::metrics::scale_from_string(a.scale);
    auto r = moca::metrics::alignment_report(moca::report::load_embeddings(a.orig), moca::report::load_embeddings(a.fused),
                                             moca::report::load_embeddings(a.cond), moca::report::load_embeddings(a.text),
                                             scale);
    if (!a.orig_latents.empty() || !a.fused_latents.empty()) {
        if (a.orig_latents.empty() || a.fused_latents.empty())
            throw moca::ParameterError("--orig-latents and --fused-latents must be given together");
        moca::metrics::SsimOptions opt;
        opt.data_range = a.ssim_range;
        opt.window = a.ssim_window;
        r.ssim_mean = moca::metrics::ssim_mean(moca::lts::load_latents(a.orig_latents),
                                               moca::lts::load_latents(a.fused_latents), opt);
    }
    if (!a.lpips_i.empty()) r.lpips_i = moca::metrics::lpips_aggregate(load_distances(a.lpips_i));
    if (!a.lpips_t.empty()) r.lpips_t = moca::metrics::lpips_aggregate(load_distances(a.lpips_t));
    moca::report::write_json(a.out, moca::report::to_json(r));
    return kOk;
}

struct CompareArgs {
    std::string orig, fused, cond, text_a, text_b, out;
    std::string scale = "percent";
};

/// CASS next to the absolute-difference blending score. Concept A is the original video's prompt
/// (its video is --orig), concept B the conditioned concept (its visual is --cond).
int run_compare(const CompareArgs& a) {
    using namespace moca::metrics;
    const auto scale = scale_from_string(a.scale);
    auto orig = moca::report::load_embeddings(a.orig);
    auto fused = moca::report::load_embeddings(a.fused);
    auto cond = moca::report::load_embeddings(a.cond);
    auto text_a = moca::report::load_embeddings(a.text_a);
    auto text_b = moca::report::load_embeddings(a.text_b);

    auto r = alignment_report(orig, fused, cond, text_a, scale);
    if (text_b.dim != orig.dim) throw moca::ParameterError("--text-b dimension differs from the video embeddings");
    const auto ta = text_a.reference(), tb = text_b.reference();
    const double fused_a = clip_alignment(fused, ta, scale);
    const double fused_b = clip_alignment(fused, tb, scale);
    const double a_a = clip_alignment(orig, ta, scale);
    const double b_b = clip_alignment(cond, tb, scale);
    r.clip_bs = clip_bs(fused_a, fused_b, a_a, b_b);

    json j = moca::report::to_json(r);
    j["clip_bs_components"] = {{"sim_fused_a", fused_a},
                               {"sim_fused_b", fused_b},
                               {"sim_a_a", a_a},
                               {"sim_b_b", b_b},
                               {"mix_score", fused_a + fused_b},
                               {"original_score", a_a + b_b}};
    moca::report::write_json(a.out, j);
    std::cout << json{{"cass", r.cass}, {"rel_cass", r.rel_cass}, {"clip_bs", *r.clip_bs}}.dump() << std::endl;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"moca: training-free video semantic mixing at desk scale"};
    app.require_subcommand(1);

    MixArgs mix;
    auto* mix_cmd = app.add_subcommand("mix", "Run the FIFO semantic mix and write frames.lts, masks.lts, manifest.json");
    mix_cmd->add_option("--config", mix.config, "Run configuration JSON (defaults when omitted)");
    mix_cmd->add_option("--out", mix.out, "Output directory")->required();
    mix_cmd->add_flag("--trace", mix.trace, "Emit per-step JSON lines (t, kappa, |v|) on stdout");

    InvertArgs inv;
    auto* inv_cmd = app.add_subcommand("invert", "DDIM-invert one frame into a trajectory x_0 .. x_T");
    inv_cmd->add_option("--latents", inv.latents, "Input LTS file")->required();
    inv_cmd->add_option("--steps", inv.steps, "Number of inversion jumps")->check(CLI::PositiveNumber);
    inv_cmd->add_option("--out", inv.out, "Output trajectory LTS (steps + 1 frames)")->required();
    inv_cmd->add_option("--frame", inv.frame, "Frame index to invert");
    inv_cmd->add_option("--config", inv.config, "Run configuration supplying the schedule");
    inv_cmd->add_option("--denoiser", inv.denoiser, "gaussian (zero-mean prior) or zero")
        ->check(CLI::IsMember({"gaussian", "zero"}));
    inv_cmd->add_option("--prior-std", inv.prior_std, "Prior standard deviation of the gaussian denoiser")
        ->check(CLI::NonNegativeNumber);

    TrackArgs trk;
    auto* trk_cmd = app.add_subcommand("track", "Track a threshold segmentation across frames by IoU linking");
    trk_cmd->add_option("--latents", trk.latents, "Input LTS file")->required();
    trk_cmd->add_option("--out", trk.out, "Output mask LTS; a .json sidecar is written next to it")->required();
    trk_cmd->add_option("--tau", trk.tau, "IoU threshold (strict)")->check(CLI::Range(0.0, 1.0));
    trk_cmd->add_option("--theta", trk.theta, "Segmentation threshold on channel-mean magnitude");
    trk_cmd->add_flag("--all-components", trk.all_components, "Keep every component, not only the largest");

    SynthArgs syn;
    auto* syn_cmd = app.add_subcommand("synth", "Write the moving-square scene, ground-truth masks and proxy embeddings");
    syn_cmd->add_option("--out", syn.out, "Output directory")->required();
    syn_cmd->add_option("--frames", syn.frames);
    syn_cmd->add_option("--grid", syn.grid);
    syn_cmd->add_option("--square", syn.square);
    syn_cmd->add_option("--vx", syn.vx);
    syn_cmd->add_option("--vy", syn.vy);
    syn_cmd->add_option("--channels", syn.channels);
    syn_cmd->add_option("--patches", syn.patches);
    syn_cmd->add_option("--cond-value", syn.cond_value, "Fill value of the reference latent");

    EmbedArgs emb;
    auto* emb_cmd = app.add_subcommand("embed", "Proxy embeddings of an LTS sequence");
    emb_cmd->add_option("--latents", emb.latents)->required();
    emb_cmd->add_option("--out", emb.out)->required();
    emb_cmd->add_option("--patches", emb.patches);
    emb_cmd->add_option("--kind", emb.kind)->check(CLI::IsMember({"visual", "text"}));

    MetricsArgs met;
    auto* met_cmd = app.add_subcommand("metrics", "CLIP-T/CLIP-I, CASS, relCASS and optional SSIM/LPIPS report");
    met_cmd->add_option("--orig", met.orig, "Original video visual embeddings")->required();
    met_cmd->add_option("--fused", met.fused, "Fused video visual embeddings")->required();
    met_cmd->add_option("--cond", met.cond, "Conditioned image embedding")->required();
    met_cmd->add_option("--text", met.text, "Original prompt text embedding")->required();
    met_cmd->add_option("--scale", met.scale)->check(CLI::IsMember({"unit", "percent"}));
    met_cmd->add_option("--out", met.out)->required();
    met_cmd->add_option("--orig-latents", met.orig_latents, "Original frames (LTS) for SSIM");
    met_cmd->add_option("--fused-latents", met.fused_latents, "Fused frames (LTS) for SSIM");
    met_cmd->add_option("--ssim-range", met.ssim_range, "SSIM data range L")->check(CLI::PositiveNumber);
    met_cmd->add_option("--ssim-window", met.ssim_window, "SSIM Gaussian window size (odd)")->check(CLI::Range(3, 255));
    met_cmd->add_option("--lpips-i", met.lpips_i, "JSON array of per-frame LPIPS distances");
    met_cmd->add_option("--lpips-t", met.lpips_t, "JSON array of adjacent-frame LPIPS distances");

    CompareArgs cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "CASS next to the absolute-difference CLIP blending score");
    cmp_cmd->add_option("--orig", cmp.orig, "Original video (concept A) visual embeddings")->required();
    cmp_cmd->add_option("--fused", cmp.fused, "Fused video visual embeddings")->required();
    cmp_cmd->add_option("--cond", cmp.cond, "Conditioned image (concept B) embedding")->required();
    cmp_cmd->add_option("--text-a", cmp.text_a, "Prompt embedding for concept A")->required();
    cmp_cmd->add_option("--text-b", cmp.text_b, "Prompt embedding for concept B")->required();
    cmp_cmd->add_option("--scale", cmp.scale)->check(CLI::IsMember({"unit", "percent"}));
    cmp_cmd->add_option("--out", cmp.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(kValidation, "validation", e.what());
    }

    try {
        if (*mix_cmd) return run_mix(mix);
        if (*inv_cmd) return run_invert(inv);
        if (*trk_cmd) return run_track(trk);
        if (*syn_cmd) return run_synth(syn);
        if (*emb_cmd) return run_embed(emb);
        if (*met_cmd) return run_metrics(met);
        if (*cmp_cmd) return run_compare(cmp);
    } catch (const moca::IoError& e) {
        return fail(kIo, "io", e.what());
    } catch (const moca::NumericError& e) {
        return fail(kNumeric, "numeric", e.what());
    } catch (const moca::DegenerateTrackError& e) {
        return fail(kValidation, "degenerate_track", e.what());
    } catch (const moca::ParameterError& e) {
        return fail(kValidation, "validation", e.what());
    }
    return kValidation;
}
