#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace weblapse::assemble {

// 16-bit PCM, interleaved.
struct AudioClip {
    int sample_rate = 44100;
    int channels = 1;
    std::vector<std::int16_t> samples;

    std::size_t frame_count() const { return channels ? samples.size() / channels : 0; }
    double duration_s() const {
        return sample_rate ? static_cast<double>(frame_count()) / sample_rate : 0.0;
    }
};

AudioClip read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

// Sample-accurate cut of [offset_s, offset_s + duration_s); silence-padded
// when the source runs short. A linear fade-out shapes the final second.
AudioClip trim_with_fade(const AudioClip& clip, double offset_s, double duration_s,
                         double fade_s = 1.0);

} // namespace weblapse::assemble
