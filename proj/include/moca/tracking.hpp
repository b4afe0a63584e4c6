#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <utility>
#include <vector>

#include "moca/errors.hpp"
#include "moca/mask.hpp"
#include "moca/tensor.hpp"

namespace moca {

/// |A n B| / |A u B|. Two empty masks agree perfectly (1.0); exactly one empty gives 0.0.
inline double iou(const Mask& a, const Mask& b) {
    if (!a.same_shape(b)) throw ParameterError("iou: mask shape mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        inter += (a[i] && b[i]) ? 1 : 0;
        uni += (a[i] || b[i]) ? 1 : 0;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Class-agnostic segmenter over latent frames.
class Segmenter {
public:
    virtual ~Segmenter() = default;
    Mask segment(const LatentFrame& x) const {
        Mask m = do_segment(x);
        if (m.height() != x.height() || m.width() != x.width())
            throw ParameterError("segmenter returned a mask whose size differs from the latent grid");
        return m;
    }

private:
    virtual Mask do_segment(const LatentFrame& x) const = 0;
};

class FunctionSegmenter final : public Segmenter {
public:
    explicit FunctionSegmenter(std::function<Mask(const LatentFrame&)> fn) : fn_(std::move(fn)) {}

private:
    Mask do_segment(const LatentFrame& x) const override { return fn_(x); }
    std::function<Mask(const LatentFrame&)> fn_;
};

/// Keep only the largest 4-connected component; ties go to the component met first in row-major order.
inline Mask largest_component(const Mask& m) {
    const std::size_t H = m.height(), W = m.width();
    std::vector<int> label(m.size(), -1);
    std::vector<std::size_t> sizes;
    for (std::size_t start = 0; start < m.size(); ++start) {
        if (!m[start] || label[start] >= 0) continue;
        int id = static_cast<int>(sizes.size());
        std::size_t count = 0;
        std::queue<std::size_t> open;
        open.push(start);
        label[start] = id;
        while (!open.empty()) {
            std::size_t c = open.front();
            open.pop();
            ++count;
            std::size_t y = c / W, x = c % W;
            auto visit = [&](std::size_t n) {
                if (m[n] && label[n] < 0) {
                    label[n] = id;
                    open.push(n);
                }
            };
            if (y > 0) visit(c - W);
            if (y + 1 < H) visit(c + W);
            if (x > 0) visit(c - 1);
            if (x + 1 < W) visit(c + 1);
        }
        sizes.push_back(count);
    }
    Mask out(H, W);
    if (sizes.empty()) return out;
    int best = 0;
    for (std::size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i] > sizes[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    for (std::size_t i = 0; i < m.size(); ++i)
        if (label[i] == best) out.set(i / W, i % W);
    return out;
}

/// Cells whose channel-mean magnitude exceeds theta.
inline Mask threshold_segment(const LatentFrame& x, double theta, bool keep_largest_component) {
    require(std::isfinite(theta), "threshold_segment: theta must be finite");
    Mask m(x.height(), x.width());
    const double inv_c = 1.0 / static_cast<double>(x.channels());
    for (std::size_t y = 0; y < x.height(); ++y)
        for (std::size_t xx = 0; xx < x.width(); ++xx) {
            double acc = 0.0;
            for (std::size_t c = 0; c < x.channels(); ++c) acc += std::abs(x.at(c, y, xx));
            if (acc * inv_c > theta) m.set(y, xx);
        }
    return keep_largest_component ? largest_component(m) : m;
}

class ThresholdSegmenter final : public Segmenter {
public:
    ThresholdSegmenter(double theta, bool keep_largest) : theta_(theta), keep_largest_(keep_largest) {}
    double theta() const { return theta_; }
    bool keep_largest() const { return keep_largest_; }

private:
    Mask do_segment(const LatentFrame& x) const override { return threshold_segment(x, theta_, keep_largest_); }
    double theta_;
    bool keep_largest_;
};

struct MaskTrack {
    std::vector<Mask> masks;
    std::vector<bool> linked;     // true: fresh segmentation accepted; false: previous mask retained
    std::vector<double> overlap;  // IoU against the previous tracked mask (1.0 for frame 0)
    double tau = 0.5;
    bool degenerate = false;      // frame 0 segmented to an empty mask

    std::size_t size() const { return masks.size(); }
};

/// Incremental overlap-maximization tracker: the first mask is taken as is, every later
/// segmentation is accepted only if its IoU with the previous tracked mask is strictly above tau.
class MaskTracker {
public:
    explicit MaskTracker(double tau) {
        require(tau >= 0.0 && tau <= 1.0, "tracking tau must lie in [0, 1]");
        track_.tau = tau;
    }

    /// Returns the mask that was recorded for this frame.
    const Mask& push(Mask candidate) {
        if (track_.masks.empty()) {
            track_.degenerate = candidate.empty();
            track_.masks.push_back(std::move(candidate));
            track_.linked.push_back(true);
            track_.overlap.push_back(1.0);
            return track_.masks.back();
        }
        const Mask& prev = track_.masks.back();
        double score = iou(candidate, prev);
        track_.overlap.push_back(score);
        if (score > track_.tau) {
            track_.masks.push_back(std::move(candidate));
            track_.linked.push_back(true);
        } else {
            track_.masks.push_back(prev);
            track_.linked.push_back(false);
        }
        return track_.masks.back();
    }

    const MaskTrack& track() const { return track_; }
    MaskTrack release() { return std::move(track_); }

private:
    MaskTrack track_;
};

inline MaskTrack track_masks(const LatentSequence& latents, const Segmenter& seg, double tau) {
    require(!latents.empty(), "track_masks: latent sequence is empty");
    MaskTracker tracker(tau);
    for (const auto& frame : latents) tracker.push(seg.segment(frame));
    return tracker.release();
}

}  // namespace moca
