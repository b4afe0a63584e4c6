#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "moca/errors.hpp"

namespace moca {

struct Shape {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t plane() const { return height * width; }
    std::size_t size() const { return channels * height * width; }
    bool operator==(const Shape&) const = default;

    std::string str() const {
        return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
    }
};

/// One C x H x W latent grid. Values are kept in double precision; files store float32.
class LatentFrame {
public:
    LatentFrame() = default;

    explicit LatentFrame(Shape shape, double fill = 0.0) : shape_(shape), data_(shape.size(), fill) {
        require(shape.channels >= 1 && shape.height >= 1 && shape.width >= 1,
                "latent shape must be at least 1x1x1, got " + shape.str());
    }

    LatentFrame(Shape shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
        require(shape.channels >= 1 && shape.height >= 1 && shape.width >= 1,
                "latent shape must be at least 1x1x1, got " + shape.str());
        require(data_.size() == shape.size(), "latent value count does not match shape " + shape.str());
    }

    const Shape& shape() const { return shape_; }
    std::size_t channels() const { return shape_.channels; }
    std::size_t height() const { return shape_.height; }
    std::size_t width() const { return shape_.width; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * shape_.height + y) * shape_.width + x];
    }
    double at(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * shape_.height + y) * shape_.width + x];
    }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    std::span<double> channel(std::size_t c) { return std::span<double>(data_).subspan(c * shape_.plane(), shape_.plane()); }
    std::span<const double> channel(std::size_t c) const {
        return std::span<const double>(data_).subspan(c * shape_.plane(), shape_.plane());
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    bool operator==(const LatentFrame&) const = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

inline void require_same_shape(const LatentFrame& a, const LatentFrame& b, const char* what) {
    if (a.shape() != b.shape())
        throw ParameterError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

inline void ensure_finite(const LatentFrame& f, const char* what) {
    if (!f.all_finite()) throw NumericError(std::string(what) + ": non-finite latent value");
}

/// out = a*x + b*y elementwise.
inline LatentFrame axpby(double a, const LatentFrame& x, double b, const LatentFrame& y) {
    require_same_shape(x, y, "axpby");
    LatentFrame out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
    return out;
}

inline LatentFrame scaled(const LatentFrame& x, double a) {
    LatentFrame out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i];
    return out;
}

inline double max_abs_diff(const LatentFrame& a, const LatentFrame& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double l2_norm(const LatentFrame& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s);
}

/// Ordered, nonempty stack of equally shaped frames.
class LatentSequence {
public:
    LatentSequence() = default;

    explicit LatentSequence(std::vector<LatentFrame> frames) : frames_(std::move(frames)) {
        require(!frames_.empty(), "latent sequence must be nonempty");
        for (const auto& f : frames_)
            require(f.shape() == frames_.front().shape(), "latent sequence frames must share one shape");
    }

    void push_back(LatentFrame f) {
        if (!frames_.empty()) require(f.shape() == frames_.front().shape(), "latent sequence frames must share one shape");
        frames_.push_back(std::move(f));
    }

    std::size_t size() const { return frames_.size(); }
    bool empty() const { return frames_.empty(); }
    const Shape& shape() const { return frames_.front().shape(); }

    const LatentFrame& operator[](std::size_t i) const { return frames_[i]; }
    LatentFrame& operator[](std::size_t i) { return frames_[i]; }
    const LatentFrame& front() const { return frames_.front(); }
    const LatentFrame& back() const { return frames_.back(); }

    auto begin() const { return frames_.begin(); }
    auto end() const { return frames_.end(); }

    const std::vector<LatentFrame>& frames() const { return frames_; }

    bool operator==(const LatentSequence&) const = default;

private:
    std::vector<LatentFrame> frames_;
};

}  // namespace moca
