#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "talign/frame.hpp"

namespace talign {

enum class SequenceKind { PngSequence, Y4m };

// 8-bit gray or RGB PNG (palette/alpha are expanded/stripped) scaled by 1/255.
Frame load_png(const std::filesystem::path& path);

/// Writes an 8-bit PNG. Samples are clamped to [0,1] then quantized as
/// floor(s * 255 + 0.5). Only 1 or 3 channels are accepted.
void save_frame(const Frame& frame, const std::filesystem::path& path);

// All frames of an 8-bit 4:2:0 YUV4MPEG2 stream, converted to RGB.
std::vector<Frame> read_y4m(const std::filesystem::path& path);

/// Expands a `prefix_%03d.png` style pattern. Indices start at 0 (or 1 if
/// index 0 does not exist) and run until the first missing file.
std::vector<std::filesystem::path> expand_pattern(const std::string& pattern);

/// Loads a centered window of frames.
///
/// `source` may be a printf-style pattern, a directory (every *.png in name
/// order) or a single .y4m file. Frame count must be odd and >= 3, and all
/// frames must share dimensions.
Sequence load_sequence(const std::string& source, SequenceKind kind);

}  // namespace talign
