#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "moca/errors.hpp"

namespace moca {

/// Binary H x W mask, row-major.
class Mask {
public:
    Mask() = default;
    Mask(std::size_t height, std::size_t width) : height_(height), width_(width), cells_(height * width, 0) {}
    Mask(std::size_t height, std::size_t width, std::vector<std::uint8_t> cells)
        : height_(height), width_(width), cells_(std::move(cells)) {
        require(cells_.size() == height * width, "mask cell count does not match its shape");
        for (auto& c : cells_) c = c ? 1 : 0;
    }

    static Mask full(std::size_t height, std::size_t width) {
        return Mask(height, width, std::vector<std::uint8_t>(height * width, 1));
    }

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return cells_.size(); }

    bool at(std::size_t y, std::size_t x) const { return cells_[y * width_ + x] != 0; }
    void set(std::size_t y, std::size_t x, bool on = true) { cells_[y * width_ + x] = on ? 1 : 0; }
    bool operator[](std::size_t i) const { return cells_[i] != 0; }

    std::size_t area() const {
        std::size_t n = 0;
        for (auto c : cells_) n += c;
        return n;
    }
    bool empty() const { return area() == 0; }

    bool same_shape(const Mask& o) const { return height_ == o.height_ && width_ == o.width_; }
    bool operator==(const Mask&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<std::uint8_t> cells_;
};

}  // namespace moca
