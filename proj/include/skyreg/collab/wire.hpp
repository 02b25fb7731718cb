#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "skyreg/raster.hpp"

namespace skyreg {

class WireError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class MessageTag : std::uint8_t {
    localization = 0x01,
    sensor_image = 0x02,
    segmented_image = 0x03,
};

struct WireMessage {
    MessageTag tag{};
    std::vector<std::uint8_t> payload;
    bool operator==(const WireMessage&) const = default;
};

using Frame = std::vector<std::uint8_t>;

// Frame layout, bit-exact:
//   4-byte big-endian payload length | 1-byte tag | payload bytes
//
// Payloads:
//   0x01 localization    two 8-byte big-endian IEEE-754 doubles (x, y meters)
//   0x02 sensor image    4-byte width, 4-byte height (big-endian), then
//                        width*height bytes row-major, intensity*255 rounded
//   0x03 segmented image same layout as 0x02, values in {0, 255}

namespace wire_detail {

inline void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32_be(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

inline void put_f64_be(std::vector<std::uint8_t>& out, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int shift = 56; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(bits >> shift));
}

inline double get_f64_be(const std::uint8_t* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits = (bits << 8) | p[i];
    return std::bit_cast<double>(bits);
}

}  // namespace wire_detail

inline Frame encode_frame(const WireMessage& msg) {
    Frame out;
    out.reserve(5 + msg.payload.size());
    wire_detail::put_u32_be(out, static_cast<std::uint32_t>(msg.payload.size()));
    out.push_back(static_cast<std::uint8_t>(msg.tag));
    out.insert(out.end(), msg.payload.begin(), msg.payload.end());
    return out;
}

/// Decode exactly one frame occupying the whole buffer.
inline WireMessage decode_frame(const std::uint8_t* data, std::size_t size) {
    if (size < 5) throw WireError("wire: frame shorter than its header");
    const std::uint32_t length = wire_detail::get_u32_be(data);
    if (size != static_cast<std::size_t>(length) + 5) throw WireError("wire: frame length mismatch");
    const std::uint8_t tag = data[4];
    if (tag < 0x01 || tag > 0x03) throw WireError("wire: unknown message tag " + std::to_string(tag));
    return {static_cast<MessageTag>(tag), std::vector<std::uint8_t>(data + 5, data + 5 + length)};
}

inline WireMessage decode_frame(const Frame& frame) { return decode_frame(frame.data(), frame.size()); }

struct Localization {
    double world_x = 0.0;
    double world_y = 0.0;
};

inline WireMessage make_localization_message(double world_x, double world_y) {
    WireMessage msg{MessageTag::localization, {}};
    wire_detail::put_f64_be(msg.payload, world_x);
    wire_detail::put_f64_be(msg.payload, world_y);
    return msg;
}

inline Localization parse_localization(const WireMessage& msg) {
    if (msg.tag != MessageTag::localization) throw WireError("wire: not a localization message");
    if (msg.payload.size() != 16) throw WireError("wire: localization payload must be 16 bytes");
    return {wire_detail::get_f64_be(msg.payload.data()), wire_detail::get_f64_be(msg.payload.data() + 8)};
}

inline WireMessage make_image_message(MessageTag tag, const Raster& image) {
    if (tag != MessageTag::sensor_image && tag != MessageTag::segmented_image)
        throw WireError("wire: not an image tag");
    if (image.empty()) throw WireError("wire: empty image");
    WireMessage msg{tag, {}};
    msg.payload.reserve(8 + image.pixel_count());
    wire_detail::put_u32_be(msg.payload, static_cast<std::uint32_t>(image.width));
    wire_detail::put_u32_be(msg.payload, static_cast<std::uint32_t>(image.height));
    for (double v : image.data) {
        const long byte = std::lround(v * 255.0);
        msg.payload.push_back(static_cast<std::uint8_t>(byte < 0 ? 0 : (byte > 255 ? 255 : byte)));
    }
    return msg;
}

inline Raster parse_image_message(const WireMessage& msg) {
    if (msg.tag != MessageTag::sensor_image && msg.tag != MessageTag::segmented_image)
        throw WireError("wire: not an image message");
    if (msg.payload.size() < 8) throw WireError("wire: image payload shorter than its header");
    const std::uint32_t width = wire_detail::get_u32_be(msg.payload.data());
    const std::uint32_t height = wire_detail::get_u32_be(msg.payload.data() + 4);
    if (width == 0 || height == 0 || width > (1u << 20) || height > (1u << 20))
        throw WireError("wire: unreasonable image dimensions");
    const std::uint64_t pixels = static_cast<std::uint64_t>(width) * height;
    if (pixels > (1ull << 26)) throw WireError("wire: image too large");
    if (msg.payload.size() != 8 + pixels) throw WireError("wire: image payload size mismatch");
    Raster img(static_cast<int>(width), static_cast<int>(height));
    for (std::size_t i = 0; i < pixels; ++i) img.data[i] = msg.payload[8 + i] / 255.0;
    return img;
}

}  // namespace skyreg
