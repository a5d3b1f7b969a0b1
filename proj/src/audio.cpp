#include "weblapse/audio.hpp"

#include "weblapse/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace weblapse::assemble {

namespace {

std::uint32_t read_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16le(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

} // namespace

AudioClip read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot read " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw Error(ErrorKind::EncoderFailure, path.string() + " is not a RIFF/WAVE file");

    AudioClip clip;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        std::uint32_t chunk_size = read_u32le(bytes.data() + pos + 4);
        const std::uint8_t* payload = bytes.data() + pos + 8;
        if (pos + 8 + chunk_size > bytes.size())
            throw Error(ErrorKind::EncoderFailure, "truncated WAV chunk in " + path.string());
        if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
            if (chunk_size < 16) throw Error(ErrorKind::EncoderFailure, "short fmt chunk");
            std::uint16_t format = read_u16le(payload);
            clip.channels = read_u16le(payload + 2);
            clip.sample_rate = static_cast<int>(read_u32le(payload + 4));
            std::uint16_t bits = read_u16le(payload + 14);
            if (format != 1 || bits != 16)
                throw Error(ErrorKind::EncoderFailure,
                            path.string() + ": only 16-bit PCM WAV is supported");
            if (clip.channels < 1 || clip.channels > 2)
                throw Error(ErrorKind::EncoderFailure, path.string() + ": unsupported channel count");
            have_fmt = true;
        } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
            if (!have_fmt) throw Error(ErrorKind::EncoderFailure, "data chunk before fmt");
            std::size_t n = chunk_size / 2;
            clip.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                clip.samples[i] = static_cast<std::int16_t>(read_u16le(payload + 2 * i));
            }
            return clip;
        }
        pos += 8 + chunk_size + (chunk_size & 1);
    }
    throw Error(ErrorKind::EncoderFailure, path.string() + " has no data chunk");
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
    std::vector<std::uint8_t> out;
    std::uint32_t data_size = static_cast<std::uint32_t>(clip.samples.size() * 2);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32le(out, 36 + data_size);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32le(out, 16);
    put_u16le(out, 1); // PCM
    put_u16le(out, static_cast<std::uint16_t>(clip.channels));
    put_u32le(out, static_cast<std::uint32_t>(clip.sample_rate));
    put_u32le(out, static_cast<std::uint32_t>(clip.sample_rate * clip.channels * 2));
    put_u16le(out, static_cast<std::uint16_t>(clip.channels * 2));
    put_u16le(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32le(out, data_size);
    for (std::int16_t s : clip.samples) {
        out.push_back(static_cast<std::uint8_t>(s & 0xFF));
        out.push_back(static_cast<std::uint8_t>((s >> 8) & 0xFF));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

AudioClip trim_with_fade(const AudioClip& clip, double offset_s, double duration_s, double fade_s) {
    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.channels = clip.channels;

    const std::size_t start_frame =
        static_cast<std::size_t>(std::llround(std::max(0.0, offset_s) * clip.sample_rate));
    const std::size_t want_frames =
        static_cast<std::size_t>(std::llround(std::max(0.0, duration_s) * clip.sample_rate));
    const std::size_t have_frames = clip.frame_count();

    out.samples.assign(want_frames * clip.channels, 0);
    for (std::size_t f = 0; f < want_frames; ++f) {
        std::size_t src = start_frame + f;
        if (src >= have_frames) break;
        for (int c = 0; c < clip.channels; ++c)
            out.samples[f * clip.channels + c] = clip.samples[src * clip.channels + c];
    }

    const std::size_t fade_frames =
        std::min(want_frames, static_cast<std::size_t>(std::llround(fade_s * clip.sample_rate)));
    for (std::size_t i = 0; i < fade_frames; ++i) {
        std::size_t f = want_frames - fade_frames + i;
        double gain = 1.0 - static_cast<double>(i + 1) / static_cast<double>(fade_frames);
        for (int c = 0; c < clip.channels; ++c) {
            auto& s = out.samples[f * clip.channels + c];
            s = static_cast<std::int16_t>(std::lround(s * gain));
        }
    }
    return out;
}

} // namespace weblapse::assemble
