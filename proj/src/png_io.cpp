#include "weblapse/image.hpp"

#include "weblapse/error.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace weblapse::render {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t read_u32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::uint8_t* data, std::size_t len) {
    put_u32(out, static_cast<std::uint32_t>(len));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    if (len) out.insert(out.end(), data, data + len);
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + len)));
    put_u32(out, crc);
}

std::vector<std::uint8_t> zlib_deflate(const std::vector<std::uint8_t>& input) {
    uLongf bound = compressBound(static_cast<uLong>(input.size()));
    std::vector<std::uint8_t> out(bound);
    if (compress2(out.data(), &bound, input.data(), static_cast<uLong>(input.size()),
                  Z_DEFAULT_COMPRESSION) != Z_OK)
        throw Error(ErrorKind::IoFailure, "deflate failed");
    out.resize(bound);
    return out;
}

std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* data, std::size_t size,
                                       std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    uLongf out_len = static_cast<uLongf>(expected);
    int rc = uncompress(out.data(), &out_len, data, static_cast<uLong>(size));
    if (rc != Z_OK) throw Error(ErrorKind::UnsupportedImage, "inflate failed");
    out.resize(out_len);
    return out;
}

const std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

} // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.width <= 0 || img.height <= 0)
        throw Error(ErrorKind::UnsupportedImage, "cannot encode an empty image");

    std::vector<std::uint8_t> out(kPngSignature, kPngSignature + 8);

    std::uint8_t ihdr[13];
    ihdr[0] = static_cast<std::uint8_t>(img.width >> 24);
    ihdr[1] = static_cast<std::uint8_t>(img.width >> 16);
    ihdr[2] = static_cast<std::uint8_t>(img.width >> 8);
    ihdr[3] = static_cast<std::uint8_t>(img.width);
    ihdr[4] = static_cast<std::uint8_t>(img.height >> 24);
    ihdr[5] = static_cast<std::uint8_t>(img.height >> 16);
    ihdr[6] = static_cast<std::uint8_t>(img.height >> 8);
    ihdr[7] = static_cast<std::uint8_t>(img.height);
    ihdr[8] = 8;  // bit depth
    ihdr[9] = 2;  // truecolor
    ihdr[10] = 0; // deflate
    ihdr[11] = 0; // adaptive filtering
    ihdr[12] = 0; // no interlace
    append_chunk(out, "IHDR", ihdr, sizeof ihdr);

    const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0); // filter: none
        const std::uint8_t* row = img.pixels.data() + y * stride;
        raw.insert(raw.end(), row, row + stride);
    }
    auto compressed = zlib_deflate(raw);
    append_chunk(out, "IDAT", compressed.data(), compressed.size());
    append_chunk(out, "IEND", nullptr, 0);
    return out;
}

Image decode_png(const std::uint8_t* data, std::size_t size) {
    if (size < 8 || std::memcmp(data, kPngSignature, 8) != 0)
        throw Error(ErrorKind::UnsupportedImage, "not a PNG");

    int width = 0, height = 0, bit_depth = 0, color_type = 0, interlace = 0;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    while (pos + 8 <= size) {
        std::uint32_t len = read_u32(data + pos);
        if (pos + 12 + len > size) throw Error(ErrorKind::UnsupportedImage, "truncated PNG chunk");
        const char* type = reinterpret_cast<const char*>(data + pos + 4);
        const std::uint8_t* payload = data + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw Error(ErrorKind::UnsupportedImage, "bad IHDR");
            width = static_cast<int>(read_u32(payload));
            height = static_cast<int>(read_u32(payload + 4));
            bit_depth = payload[8];
            color_type = payload[9];
            interlace = payload[12];
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }

    if (width <= 0 || height <= 0) throw Error(ErrorKind::UnsupportedImage, "missing IHDR");
    if (bit_depth != 8 || (color_type != 2 && color_type != 6) || interlace != 0)
        throw Error(ErrorKind::UnsupportedImage,
                    "unsupported PNG layout (need 8-bit RGB/RGBA, non-interlaced)");

    const int channels = color_type == 6 ? 4 : 3;
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    auto raw = zlib_inflate(idat.data(), idat.size(), (stride + 1) * height);
    if (raw.size() != (stride + 1) * height)
        throw Error(ErrorKind::UnsupportedImage, "unexpected PNG data size");

    // undo per-row filters in place
    std::vector<std::uint8_t> prev(stride, 0);
    Image img(width, height);
    for (int y = 0; y < height; ++y) {
        std::uint8_t filter = raw[y * (stride + 1)];
        std::uint8_t* row = raw.data() + y * (stride + 1) + 1;
        for (std::size_t i = 0; i < stride; ++i) {
            int a = i >= static_cast<std::size_t>(channels) ? row[i - channels] : 0;
            int b = prev[i];
            int c = i >= static_cast<std::size_t>(channels) ? prev[i - channels] : 0;
            int x = row[i];
            switch (filter) {
                case 0: break;
                case 1: x += a; break;
                case 2: x += b; break;
                case 3: x += (a + b) / 2; break;
                case 4: x += paeth(a, b, c); break;
                default: throw Error(ErrorKind::UnsupportedImage, "unknown PNG filter");
            }
            row[i] = static_cast<std::uint8_t>(x);
        }
        std::memcpy(prev.data(), row, stride);
        for (int x = 0; x < width; ++x) {
            img.set(x, y, Rgb{row[x * channels], row[x * channels + 1], row[x * channels + 2]});
        }
    }
    return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
    auto bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) throw Error(ErrorKind::IoFailure, "short write to " + path.string());
}

Image read_png(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot read " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_png(bytes.data(), bytes.size());
}

PngHeader probe_png(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot read " + path.string());
    std::uint8_t head[33];
    in.read(reinterpret_cast<char*>(head), sizeof head);
    if (in.gcount() < 33 || std::memcmp(head, kPngSignature, 8) != 0 ||
        std::memcmp(head + 12, "IHDR", 4) != 0)
        throw Error(ErrorKind::UnsupportedImage, path.string() + " is not a PNG");
    PngHeader h;
    h.width = static_cast<int>(read_u32(head + 16));
    h.height = static_cast<int>(read_u32(head + 20));
    h.bit_depth = head[24];
    h.color_type = head[25];
    return h;
}

} // namespace weblapse::render
