#pragma once

// LTS binary tensor files:
//   "LTS1" | u32 F | u32 C | u32 H | u32 W | u32 flags | F*C*H*W float32
// All integers and floats little-endian; payload is frame-major, then channel, row, column.
// flags bit0 marks a mask payload (C = 1, values exactly 0.0 or 1.0).

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "moca/errors.hpp"
#include "moca/mask.hpp"
#include "moca/tensor.hpp"

namespace moca::lts {

inline constexpr std::array<char, 4> kMagic{'L', 'T', 'S', '1'};
inline constexpr std::uint32_t kMaskFlag = 1u;

struct Header {
    std::uint32_t frames = 0;
    std::uint32_t channels = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t flags = 0;

    bool is_mask() const { return (flags & kMaskFlag) != 0; }
    std::size_t value_count() const {
        return static_cast<std::size_t>(frames) * channels * height * width;
    }
};

namespace detail {

inline char* put_u32(char* out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) *out++ = static_cast<char>((v >> (8 * i)) & 0xFFu);
    return out;
}

inline std::uint32_t get_u32(const char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

inline char* put_f32(char* out, float f) { return put_u32(out, std::bit_cast<std::uint32_t>(f)); }

inline float get_f32(const char* p) { return std::bit_cast<float>(get_u32(p)); }

}  // namespace detail

inline std::vector<char> encode(const Header& h, const std::vector<float>& values) {
    require(values.size() == h.value_count(), "LTS payload size does not match header");
    std::vector<char> out(24 + 4 * values.size());
    char* p = std::copy(kMagic.begin(), kMagic.end(), out.data());
    for (auto v : {h.frames, h.channels, h.height, h.width, h.flags}) p = detail::put_u32(p, v);
    for (float f : values) p = detail::put_f32(p, f);
    return out;
}

inline std::pair<Header, std::vector<float>> decode(const std::vector<char>& bytes, const std::string& origin = "<memory>") {
    if (bytes.size() < 24 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
        throw IoError(origin + ": not an LTS1 file");
    Header h;
    h.frames = detail::get_u32(bytes.data() + 4);
    h.channels = detail::get_u32(bytes.data() + 8);
    h.height = detail::get_u32(bytes.data() + 12);
    h.width = detail::get_u32(bytes.data() + 16);
    h.flags = detail::get_u32(bytes.data() + 20);
    if (h.frames == 0 || h.channels == 0 || h.height == 0 || h.width == 0)
        throw IoError(origin + ": LTS header has a zero dimension");
    if (bytes.size() != 24 + 4 * h.value_count())
        throw IoError(origin + ": LTS payload length " + std::to_string(bytes.size() - 24) + " bytes, expected " +
                      std::to_string(4 * h.value_count()));
    std::vector<float> values(h.value_count());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = detail::get_f32(bytes.data() + 24 + 4 * i);
    return {h, std::move(values)};
}

/// Write via a sibling temp file and rename so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError(path.string() + ": cannot open for writing");
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw IoError(path.string() + ": write failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError(path.string() + ": rename failed: " + ec.message());
}

inline std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(path.string() + ": cannot open for reading");
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline std::vector<char> encode_latents(const LatentSequence& seq) {
    const Shape& s = seq.shape();
    Header h{static_cast<std::uint32_t>(seq.size()), static_cast<std::uint32_t>(s.channels),
             static_cast<std::uint32_t>(s.height), static_cast<std::uint32_t>(s.width), 0};
    std::vector<float> values;
    values.reserve(h.value_count());
    for (const auto& f : seq)
        for (double v : f.values()) values.push_back(static_cast<float>(v));
    return encode(h, values);
}

inline LatentSequence decode_latents(const std::vector<char>& bytes, const std::string& origin = "<memory>") {
    auto [h, values] = decode(bytes, origin);
    Shape shape{h.channels, h.height, h.width};
    std::vector<LatentFrame> frames;
    frames.reserve(h.frames);
    for (std::size_t f = 0; f < h.frames; ++f) {
        std::vector<double> d(values.begin() + static_cast<std::ptrdiff_t>(f * shape.size()),
                              values.begin() + static_cast<std::ptrdiff_t>((f + 1) * shape.size()));
        LatentFrame frame(shape, std::move(d));
        if (!frame.all_finite()) throw NumericError(origin + ": non-finite value in frame " + std::to_string(f));
        frames.push_back(std::move(frame));
    }
    return LatentSequence(std::move(frames));
}

inline std::vector<char> encode_masks(const std::vector<Mask>& masks) {
    require(!masks.empty(), "cannot encode an empty mask list");
    Header h{static_cast<std::uint32_t>(masks.size()), 1, static_cast<std::uint32_t>(masks.front().height()),
             static_cast<std::uint32_t>(masks.front().width()), kMaskFlag};
    std::vector<float> values;
    values.reserve(h.value_count());
    for (const auto& m : masks) {
        require(m.same_shape(masks.front()), "masks in one file must share a shape");
        for (std::size_t i = 0; i < m.size(); ++i) values.push_back(m[i] ? 1.0f : 0.0f);
    }
    return encode(h, values);
}

inline std::vector<Mask> decode_masks(const std::vector<char>& bytes, const std::string& origin = "<memory>") {
    auto [h, values] = decode(bytes, origin);
    if (!h.is_mask() || h.channels != 1) throw IoError(origin + ": not a mask LTS file (flags bit0 unset or C != 1)");
    std::vector<Mask> masks;
    std::size_t plane = static_cast<std::size_t>(h.height) * h.width;
    for (std::size_t f = 0; f < h.frames; ++f) {
        std::vector<std::uint8_t> cells(plane);
        for (std::size_t i = 0; i < plane; ++i) {
            float v = values[f * plane + i];
            if (v != 0.0f && v != 1.0f) throw IoError(origin + ": mask value is not exactly 0.0 or 1.0");
            cells[i] = v == 1.0f ? 1 : 0;
        }
        masks.emplace_back(h.height, h.width, std::move(cells));
    }
    return masks;
}

inline void save_latents(const std::filesystem::path& path, const LatentSequence& seq) {
    write_file_atomic(path, encode_latents(seq));
}
inline LatentSequence load_latents(const std::filesystem::path& path) {
    return decode_latents(read_file(path), path.string());
}
inline void save_masks(const std::filesystem::path& path, const std::vector<Mask>& masks) {
    write_file_atomic(path, encode_masks(masks));
}
inline std::vector<Mask> load_masks(const std::filesystem::path& path) {
    return decode_masks(read_file(path), path.string());
}

}  // namespace moca::lts
