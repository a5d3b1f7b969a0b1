#pragma once

#include "weblapse/image.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace weblapse::assemble {

// Animated GIF89a: global 256-color palette (6x6x6 cube + gray ramp), one
// graphic-control block per frame with the delay in centiseconds, and a
// NETSCAPE2.0 loop extension set to loop forever. Frame order is input
// order. Throws NoFrames.
std::vector<std::uint8_t> encode_gif(const std::vector<render::Image>& frames,
                                     double frame_interval_s = 4.0);

void write_gif(const std::filesystem::path& path, const std::vector<render::Image>& frames,
               double frame_interval_s = 4.0);

} // namespace weblapse::assemble
