#include "weblapse/gif.hpp"

#include "weblapse/error.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace weblapse::assemble {

namespace {

using render::Image;
using render::Rgb;

// 216-entry color cube plus a 40-step gray ramp.
struct Palette {
    std::uint8_t rgb[256][3];

    Palette() {
        int i = 0;
        for (int r = 0; r < 6; ++r)
            for (int g = 0; g < 6; ++g)
                for (int b = 0; b < 6; ++b) {
                    rgb[i][0] = static_cast<std::uint8_t>(r * 51);
                    rgb[i][1] = static_cast<std::uint8_t>(g * 51);
                    rgb[i][2] = static_cast<std::uint8_t>(b * 51);
                    ++i;
                }
        for (int k = 0; k < 40; ++k) {
            std::uint8_t v = static_cast<std::uint8_t>(std::lround(k * 255.0 / 39.0));
            rgb[i][0] = rgb[i][1] = rgb[i][2] = v;
            ++i;
        }
    }

    std::uint8_t map(Rgb c) const {
        if (c.r == c.g && c.g == c.b) {
            int k = static_cast<int>(std::lround(c.r * 39.0 / 255.0));
            return static_cast<std::uint8_t>(216 + k);
        }
        int r = (c.r + 25) / 51, g = (c.g + 25) / 51, b = (c.b + 25) / 51;
        return static_cast<std::uint8_t>(r * 36 + g * 6 + b);
    }
};

class BitPacker {
public:
    explicit BitPacker(std::vector<std::uint8_t>& out) : out_(out) {}

    void put(std::uint32_t code, int bits) {
        acc_ |= static_cast<std::uint64_t>(code) << filled_;
        filled_ += bits;
        while (filled_ >= 8) {
            byte_out(static_cast<std::uint8_t>(acc_ & 0xFF));
            acc_ >>= 8;
            filled_ -= 8;
        }
    }

    void finish() {
        if (filled_ > 0) byte_out(static_cast<std::uint8_t>(acc_ & 0xFF));
        flush_block();
    }

private:
    void byte_out(std::uint8_t b) {
        block_[block_len_++] = b;
        if (block_len_ == 255) flush_block();
    }

    void flush_block() {
        if (block_len_ == 0) return;
        out_.push_back(static_cast<std::uint8_t>(block_len_));
        out_.insert(out_.end(), block_, block_ + block_len_);
        block_len_ = 0;
    }

    std::vector<std::uint8_t>& out_;
    std::uint64_t acc_ = 0;
    int filled_ = 0;
    std::uint8_t block_[255];
    int block_len_ = 0;
};

// Variable-code-size LZW with an 8-bit minimum code size.
void lzw_compress(const std::vector<std::uint8_t>& indices, std::vector<std::uint8_t>& out) {
    constexpr int kMinCodeSize = 8;
    constexpr std::uint32_t kClear = 1 << kMinCodeSize;   // 256
    constexpr std::uint32_t kEnd = kClear + 1;            // 257
    constexpr std::uint32_t kMaxCode = 4095;

    out.push_back(kMinCodeSize);
    BitPacker packer(out);

    std::unordered_map<std::uint32_t, std::uint32_t> table; // (prefix<<8)|pixel -> code
    std::uint32_t next_code = kEnd + 1;
    int code_bits = kMinCodeSize + 1;

    packer.put(kClear, code_bits);
    if (indices.empty()) {
        packer.put(kEnd, code_bits);
        packer.finish();
        out.push_back(0);
        return;
    }

    std::uint32_t prefix = indices[0];
    for (std::size_t i = 1; i < indices.size(); ++i) {
        std::uint8_t pixel = indices[i];
        std::uint32_t key = (prefix << 8) | pixel;
        auto it = table.find(key);
        if (it != table.end()) {
            prefix = it->second;
            continue;
        }
        packer.put(prefix, code_bits);
        if (next_code <= kMaxCode) {
            table[key] = next_code;
            if (next_code == (1u << code_bits) && code_bits < 12) ++code_bits;
            ++next_code;
        } else {
            packer.put(kClear, code_bits);
            table.clear();
            next_code = kEnd + 1;
            code_bits = kMinCodeSize + 1;
        }
        prefix = pixel;
    }
    packer.put(prefix, code_bits);
    packer.put(kEnd, code_bits);
    packer.finish();
    out.push_back(0); // block terminator
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

} // namespace

std::vector<std::uint8_t> encode_gif(const std::vector<Image>& frames, double frame_interval_s) {
    if (frames.empty()) throw Error(ErrorKind::NoFrames, "a GIF needs at least one frame");
    const int width = frames.front().width;
    const int height = frames.front().height;
    for (const auto& f : frames) {
        if (f.width != width || f.height != height)
            throw Error(ErrorKind::UnsupportedImage, "all GIF frames must share one size");
    }
    const auto delay_cs = static_cast<std::uint16_t>(std::lround(frame_interval_s * 100.0));

    static const Palette palette;
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'G', 'I', 'F', '8', '9', 'a'});

    // logical screen descriptor: global color table, 256 entries, 8 bits
    put_u16(out, static_cast<std::uint16_t>(width));
    put_u16(out, static_cast<std::uint16_t>(height));
    out.push_back(0xF7);
    out.push_back(0); // background color
    out.push_back(0); // aspect ratio
    for (const auto& entry : palette.rgb) out.insert(out.end(), entry, entry + 3);

    // NETSCAPE2.0 looping extension, 0 = forever
    out.insert(out.end(), {0x21, 0xFF, 0x0B});
    const char netscape[] = "NETSCAPE2.0";
    out.insert(out.end(), netscape, netscape + 11);
    out.insert(out.end(), {0x03, 0x01});
    put_u16(out, 0);
    out.push_back(0);

    std::vector<std::uint8_t> indices(static_cast<std::size_t>(width) * height);
    for (const auto& frame : frames) {
        // graphic control: delay + no disposal, no transparency
        out.insert(out.end(), {0x21, 0xF9, 0x04, 0x00});
        put_u16(out, delay_cs);
        out.push_back(0);
        out.push_back(0);

        // image descriptor, full frame, global palette
        out.push_back(0x2C);
        put_u16(out, 0);
        put_u16(out, 0);
        put_u16(out, static_cast<std::uint16_t>(width));
        put_u16(out, static_cast<std::uint16_t>(height));
        out.push_back(0x00);

        for (std::size_t p = 0, n = indices.size(); p < n; ++p) {
            indices[p] = palette.map(Rgb{frame.pixels[p * 3], frame.pixels[p * 3 + 1],
                                         frame.pixels[p * 3 + 2]});
        }
        lzw_compress(indices, out);
    }

    out.push_back(0x3B); // trailer
    return out;
}

void write_gif(const std::filesystem::path& path, const std::vector<Image>& frames,
               double frame_interval_s) {
    auto bytes = encode_gif(frames, frame_interval_s);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) throw Error(ErrorKind::IoFailure, "short write to " + path.string());
}

} // namespace weblapse::assemble
