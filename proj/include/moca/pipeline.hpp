#pragma once

// Diagonal (FIFO) denoising: a queue of frames at strictly increasing noise levels. Each step
// advances every slot one grid level with the momentum-corrected sampler, applies the semantic
// edit to slots that have just reached the injection timestep, emits the clean head and pushes
// a fresh tail at t = T.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "moca/blending.hpp"
#include "moca/config.hpp"
#include "moca/errors.hpp"
#include "moca/random.hpp"
#include "moca/schedule.hpp"
#include "moca/scheduler.hpp"
#include "moca/tracking.hpp"

namespace moca {

/// Substream purposes under each frame's stream: root.split(frame).split(purpose).
enum class Stream : std::uint64_t { init = 0, step = 1, cond = 2, residual = 3, tail = 4 };

inline RandomSource frame_stream(const RandomSource& root, std::size_t frame, Stream purpose) {
    return root.split(frame).split(static_cast<std::uint64_t>(purpose));
}

struct SamplerParams {
    double eta = 0.0;
    MomentumState::Params momentum;
};

struct Slot {
    LatentFrame latent;
    Timestep t = 0;
    std::size_t frame = 0;
    MomentumState momentum;
    RandomSource step_rng;
    std::optional<LatentFrame> x0_hat;  // estimate from the step that produced `latent`
    int edit_count = 0;
    Timestep edit_t = -1;

    bool edited() const { return edit_count > 0; }
};

class FifoQueue {
public:
    FifoQueue(std::vector<Timestep> grid, std::deque<Slot> slots, std::size_t next_frame)
        : grid_(std::move(grid)), slots_(std::move(slots)), next_frame_(next_frame) {
        check_invariants();
        shape_ = slots_.front().latent.shape();
    }

    const std::vector<Timestep>& grid() const { return grid_; }
    const std::deque<Slot>& slots() const { return slots_; }
    std::deque<Slot>& slots() { return slots_; }
    std::size_t length() const { return slots_.size(); }
    std::size_t next_frame() const { return next_frame_; }
    std::size_t emitted() const { return emitted_; }
    const Shape& shape() const { return shape_; }

    void check_invariants() const {
        require(!slots_.empty(), "fifo queue is empty");
        for (std::size_t k = 0; k < slots_.size(); ++k) {
            if (k > 0 && !(slots_[k - 1].t < slots_[k].t))
                throw ParameterError("fifo queue timesteps must increase strictly from head to tail");
        }
    }

    std::size_t take_frame_index() { return next_frame_++; }
    void count_emission() { ++emitted_; }

private:
    std::vector<Timestep> grid_;  // uniform grid 0 = g_0 < ... < g_L = T; slot k sits at g_{k+1}
    std::deque<Slot> slots_;
    std::size_t next_frame_;
    std::size_t emitted_ = 0;
    Shape shape_;
};

/// Supplies the mask for an edit-due slot; std::nullopt means no usable mask.
using MaskProvider = std::function<std::optional<Mask>(const Slot&)>;

struct InjectionPlan {
    Timestep t_prime = 300;
    LatentFrame cond_latent;  // clean reference latent
    BlendParams blend;
    ResidualParams residual;
    MaskProvider masks;
};

struct EditEvent {
    std::size_t frame = 0;
    Timestep t = 0;
    std::size_t mask_area = 0;
};

struct TraceEvent {
    std::size_t frame = 0;
    Timestep t = 0;
    Timestep t_prev = 0;
    double kappa = 0.0;
    double velocity_norm = 0.0;
};

struct TraceSink {
    std::function<void(const TraceEvent&)> on_step;
};

inline Slot make_slot(LatentFrame latent, Timestep t, std::size_t frame, const NoiseSchedule& s,
                      const SamplerParams& sampler, const RandomSource& root) {
    Shape shape = latent.shape();
    return Slot{std::move(latent), t, frame, MomentumState(shape, s.steps(), sampler.momentum),
                frame_stream(root, frame, Stream::step), std::nullopt, 0, -1};
}

/// Queue whose slot k (0 = head) holds frame k at grid level g_{k+1}. When `trajectories` has an
/// entry for frame k (an inversion trajectory on the same grid, length L + 1) the slot takes
/// trajectories[k][k + 1]; otherwise it is unit Gaussian noise from the frame's init stream.
inline FifoQueue fifo_init(const std::vector<LatentSequence>& trajectories, Shape shape, const NoiseSchedule& s,
                           int queue_len, const SamplerParams& sampler, const RandomSource& root) {
    if (queue_len < 1 || queue_len > s.steps())
        throw ParameterError("queue length " + std::to_string(queue_len) + " must lie in [1, T=" +
                             std::to_string(s.steps()) + "]");
    auto grid = uniform_grid(s.steps(), queue_len);
    std::deque<Slot> slots;
    for (int k = 0; k < queue_len; ++k) {
        const auto frame = static_cast<std::size_t>(k);
        LatentFrame latent;
        if (frame < trajectories.size()) {
            const auto& traj = trajectories[frame];
            require(traj.size() == grid.size(), "inversion trajectory length must equal queue length + 1");
            latent = traj[static_cast<std::size_t>(k) + 1];
            require(latent.shape() == shape, "trajectory latent shape does not match queue shape");
        } else {
            RandomSource rng = frame_stream(root, frame, Stream::init);
            latent = rng.gaussian_frame(shape);
        }
        slots.push_back(make_slot(std::move(latent), grid[static_cast<std::size_t>(k) + 1], frame, s, sampler, root));
    }
    return FifoQueue(std::move(grid), std::move(slots), static_cast<std::size_t>(queue_len));
}

/// Edit every slot that sits at or below t' and has not been edited yet, head first.
inline std::vector<EditEvent> apply_due_edits(std::deque<Slot>& slots, const InjectionPlan& plan,
                                              const NoiseSchedule& s, const RandomSource& root) {
    std::vector<EditEvent> events;
    for (auto& slot : slots) {
        if (slot.edited() || slot.t > plan.t_prime) continue;
        std::optional<Mask> mask = plan.masks ? plan.masks(slot) : std::nullopt;
        if (!mask)
            throw DegenerateTrackError("no mask available for frame " + std::to_string(slot.frame) + " at t=" +
                                       std::to_string(slot.t));
        RandomSource cond_rng = frame_stream(root, slot.frame, Stream::cond);
        RandomSource residual_rng = frame_stream(root, slot.frame, Stream::residual);
        LatentFrame cond_t = forward_diffuse(plan.cond_latent, slot.t, s, cond_rng);
        LatentFrame mixed = blend_region(slot.latent, cond_t, *mask, plan.blend);
        slot.latent = gamma_residual(mixed, plan.residual, residual_rng);
        ensure_finite(slot.latent, "semantic edit");
        ++slot.edit_count;
        slot.edit_t = slot.t;
        events.push_back({slot.frame, slot.t, mask->area()});
    }
    return events;
}

struct FifoStepResult {
    FifoQueue queue;
    std::optional<LatentFrame> emitted;
    std::optional<std::size_t> emitted_frame;
    int emitted_edit_count = 0;
    Timestep emitted_edit_t = -1;
    std::vector<EditEvent> edits;
};

/// One diagonal step. `x_recent` for the new tail is the frame emitted by this step.
inline FifoStepResult fifo_step(FifoQueue q, const Denoiser& denoiser, const NoiseSchedule& s,
                                const SamplerParams& sampler, const InjectionPlan* plan, double tail_cutoff,
                                const RandomSource& root, const TraceSink* trace = nullptr) {
    q.check_invariants();
    require(q.grid().back() == s.steps(), "fifo queue grid does not match the schedule");
    auto& slots = q.slots();

    for (std::size_t k = 0; k < slots.size(); ++k) {
        Slot& slot = slots[k];
        Timestep t_prev = q.grid()[k];
        FrameContext ctx{slot.frame, slot.edited()};
        auto res = momentum_step(slot.latent, slot.t, t_prev, denoiser, s, std::move(slot.momentum), sampler.eta,
                                 slot.step_rng, ctx);
        if (trace && trace->on_step)
            trace->on_step({slot.frame, slot.t, t_prev, res.step.kappa_used, l2_norm(res.state.velocity())});
        slot.latent = std::move(res.step.x_prev);
        slot.x0_hat = std::move(res.step.x0_hat);
        slot.momentum = std::move(res.state);
        slot.t = t_prev;
    }

    FifoStepResult out{std::move(q), std::nullopt, std::nullopt, 0, -1, {}};
    auto& qs = out.queue.slots();
    if (plan) out.edits = apply_due_edits(qs, *plan, s, root);

    if (qs.front().t == 0) {
        Slot head = std::move(qs.front());
        qs.pop_front();
        out.emitted_frame = head.frame;
        out.emitted_edit_count = head.edit_count;
        out.emitted_edit_t = head.edit_t;
        out.emitted = std::move(head.latent);
        out.queue.count_emission();
    }

    if (qs.size() < out.queue.grid().size() - 1) {
        std::size_t frame = out.queue.take_frame_index();
        RandomSource tail_rng = frame_stream(root, frame, Stream::tail);
        LatentFrame tail = out.emitted ? reinit_tail_noise(*out.emitted, s, tail_cutoff, tail_rng)
                                       : tail_rng.gaussian_frame(out.queue.shape());
        qs.push_back(make_slot(std::move(tail), s.steps(), frame, s, sampler, root));
        if (plan) {
            auto more = apply_due_edits(qs, *plan, s, root);
            out.edits.insert(out.edits.end(), more.begin(), more.end());
        }
    }
    out.queue.check_invariants();
    return out;
}

/// Per-frame record of what the run did.
struct FrameRecord {
    std::size_t frame = 0;
    int edit_count = 0;
    Timestep edit_t = -1;
    bool linked = true;
    double overlap = 1.0;
    std::size_t mask_area = 0;
};

struct RunManifest {
    RunConfig config;
    std::string edit_timing = "post_step";
    std::string mask_source = "x0_hat";
    std::vector<FrameRecord> frames;
    std::vector<std::string> outputs;
};

struct MixResult {
    LatentSequence frames;
    MaskTrack track;
    RunManifest manifest;
};

/// End-to-end semantic mix at desk scale: invert each source frame on the queue grid, run the
/// diagonal sampler and edit every frame once at t'. The edit mask is tracked across frames by
/// overlap maximization over segmentations of each slot's clean-latent estimate.
inline MixResult run_semantic_mix(const RunConfig& cfg, const LatentSequence& source, const LatentFrame& cond,
                                  const Denoiser& denoiser, const Segmenter& segmenter,
                                  const TraceSink* trace = nullptr) {
    validate(cfg);
    require(!source.empty(), "run_semantic_mix: source sequence is empty");
    require(cond.shape() == source.shape(), "reference latent shape " + cond.shape().str() +
                                                " does not match source shape " + source.shape().str());

    const NoiseSchedule s = make_schedule(cfg.schedule);
    const RandomSource root(cfg.seed);
    const SamplerParams sampler{cfg.sampler.eta, {cfg.sampler.beta, cfg.sampler.lambda, cfg.sampler.kappa0}};
    const int L = cfg.queue.length;

    std::vector<LatentSequence> trajectories;
    for (std::size_t f = 0; f < source.size() && f < static_cast<std::size_t>(L); ++f)
        trajectories.push_back(ddim_invert(source[f], denoiser, s, L, FrameContext{f, false}));

    MaskTracker tracker(cfg.injection.tau);
    InjectionPlan plan;
    plan.t_prime = cfg.injection.t_prime;
    plan.cond_latent = cond;
    plan.blend = BlendParams{cfg.injection.strength};
    plan.residual = ResidualParams{cfg.injection.gamma_res};
    plan.masks = [&](const Slot& slot) -> std::optional<Mask> {
        LatentFrame estimate;
        if (slot.x0_hat) {
            estimate = *slot.x0_hat;
        } else if (slot.t == 0) {
            estimate = slot.latent;
        } else {
            estimate = predict_x0(slot.latent, slot.t,
                                  denoiser.predict_eps(slot.latent, slot.t, FrameContext{slot.frame, false}), s);
        }
        const Mask& m = tracker.push(segmenter.segment(estimate));
        if (m.empty()) return std::nullopt;
        return m;
    };

    FifoQueue q = fifo_init(trajectories, source.shape(), s, L, sampler, root);
    apply_due_edits(q.slots(), plan, s, root);

    MixResult result;
    result.manifest.config = cfg;
    const auto wanted = static_cast<std::size_t>(cfg.queue.frames);
    while (result.frames.size() < wanted) {
        auto step = fifo_step(std::move(q), denoiser, s, sampler, &plan, cfg.injection.cutoff, root, trace);
        q = std::move(step.queue);
        if (step.emitted) {
            FrameRecord rec;
            rec.frame = *step.emitted_frame;
            rec.edit_count = step.emitted_edit_count;
            rec.edit_t = step.emitted_edit_t;
            result.frames.push_back(std::move(*step.emitted));
            result.manifest.frames.push_back(rec);
        }
    }

    // Frames still queued may have been segmented already; keep the track aligned with the output.
    MaskTrack full = tracker.release();
    result.track.tau = full.tau;
    result.track.degenerate = full.degenerate;
    for (auto& rec : result.manifest.frames) {
        if (rec.frame < full.masks.size()) {
            result.track.masks.push_back(full.masks[rec.frame]);
            result.track.linked.push_back(full.linked[rec.frame]);
            result.track.overlap.push_back(full.overlap[rec.frame]);
            rec.linked = full.linked[rec.frame];
            rec.overlap = full.overlap[rec.frame];
            rec.mask_area = full.masks[rec.frame].area();
        }
    }
    return result;
}

}  // namespace moca
