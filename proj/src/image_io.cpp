#include "talign/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "talign/errors.hpp"

namespace fs = std::filesystem;

namespace talign {

namespace {

std::uint8_t quantize(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<std::uint8_t>(std::floor(c * 255.0f + 0.5f));
}

}  // namespace

Frame load_png(const fs::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw InputError("cannot read PNG " + path.string() + ": " + image.message);
    }
    if (image.format & PNG_FORMAT_FLAG_LINEAR) {
        png_image_free(&image);
        throw InputError("unsupported bit depth in " + path.string() + " (only 8-bit PNG is accepted)");
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    const int channels = color ? 3 : 1;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw InputError("cannot decode PNG " + path.string() + ": " + image.message);
    }

    const int w = static_cast<int>(image.width), h = static_cast<int>(image.height);
    Frame frame(w, h, channels);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < channels; ++c) {
                frame.at(c, x, y) = buffer[(static_cast<std::size_t>(y) * w + x) * channels + c] / 255.0f;
            }
        }
    }
    return frame;
}

void save_frame(const Frame& frame, const fs::path& path) {
    if (frame.channels() != 1 && frame.channels() != 3) {
        throw InputError("save_frame supports 1 or 3 channels, got " + std::to_string(frame.channels()));
    }
    const int w = frame.width(), h = frame.height(), channels = frame.channels();
    std::vector<png_byte> buffer(static_cast<std::size_t>(w) * h * channels);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < channels; ++c) {
                buffer[(static_cast<std::size_t>(y) * w + x) * channels + c] = quantize(frame.at(c, x, y));
            }
        }
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
        const std::string message = image.message;
        png_image_free(&image);
        throw InputError("cannot write PNG " + path.string() + ": " + message);
    }
}

std::vector<Frame> read_y4m(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());

    std::string header;
    if (!std::getline(in, header) || header.rfind("YUV4MPEG2", 0) != 0) {
        throw InputError(path.string() + " is not a YUV4MPEG2 file");
    }
    int width = 0, height = 0;
    std::string colorspace = "420jpeg";
    std::istringstream tokens(header.substr(9));
    for (std::string tok; tokens >> tok;) {
        switch (tok[0]) {
            case 'W': width = std::stoi(tok.substr(1)); break;
            case 'H': height = std::stoi(tok.substr(1)); break;
            case 'C': colorspace = tok.substr(1); break;
            default: break;  // frame rate, interlacing, aspect, comments
        }
    }
    if (width <= 0 || height <= 0) throw InputError("missing W/H in Y4M header of " + path.string());
    if (colorspace.rfind("420", 0) != 0) {
        throw InputError("unsupported Y4M colorspace C" + colorspace + " in " + path.string() + " (only 4:2:0)");
    }
    // 420jpeg/420paldv/420mpeg2 are 8-bit; 420p10, 420p12, ... are not.
    if (colorspace.size() > 4 && colorspace[3] == 'p' && std::isdigit(static_cast<unsigned char>(colorspace[4]))) {
        throw InputError("unsupported bit depth C" + colorspace + " in " + path.string() + " (only 8-bit)");
    }

    const int cw = (width + 1) / 2, ch = (height + 1) / 2;
    const std::size_t luma_size = static_cast<std::size_t>(width) * height;
    const std::size_t chroma_size = static_cast<std::size_t>(cw) * ch;
    std::vector<unsigned char> planes(luma_size + 2 * chroma_size);

    std::vector<Frame> frames;
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("FRAME", 0) != 0) throw InputError("corrupt Y4M frame marker in " + path.string());
        in.read(reinterpret_cast<char*>(planes.data()), static_cast<std::streamsize>(planes.size()));
        if (in.gcount() != static_cast<std::streamsize>(planes.size())) {
            throw InputError("truncated Y4M frame in " + path.string());
        }
        const unsigned char* yp = planes.data();
        const unsigned char* up = yp + luma_size;
        const unsigned char* vp = up + chroma_size;
        Frame rgb(width, height, 3);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const double luma = yp[static_cast<std::size_t>(y) * width + x];
                const std::size_t ci = static_cast<std::size_t>(y / 2) * cw + x / 2;
                const double u = up[ci] - 128.0, v = vp[ci] - 128.0;
                const double r = luma + 1.402 * v;
                const double g = luma - 0.344136 * u - 0.714136 * v;
                const double b = luma + 1.772 * u;
                rgb.at(0, x, y) = static_cast<float>(std::clamp(r, 0.0, 255.0) / 255.0);
                rgb.at(1, x, y) = static_cast<float>(std::clamp(g, 0.0, 255.0) / 255.0);
                rgb.at(2, x, y) = static_cast<float>(std::clamp(b, 0.0, 255.0) / 255.0);
            }
        }
        frames.push_back(std::move(rgb));
    }
    return frames;
}

std::vector<fs::path> expand_pattern(const std::string& pattern) {
    auto name_for = [&](int index) {
        const int n = std::snprintf(nullptr, 0, pattern.c_str(), index);
        std::string out(static_cast<std::size_t>(n), '\0');
        std::snprintf(out.data(), out.size() + 1, pattern.c_str(), index);
        return fs::path(out);
    };
    std::vector<fs::path> paths;
    int index = fs::exists(name_for(0)) ? 0 : 1;
    for (;; ++index) {
        fs::path p = name_for(index);
        if (!fs::exists(p)) break;
        paths.push_back(std::move(p));
    }
    return paths;
}

Sequence load_sequence(const std::string& source, SequenceKind kind) {
    std::vector<Frame> frames;
    if (kind == SequenceKind::Y4m) {
        if (!fs::is_regular_file(source)) throw InputError("missing file " + source);
        frames = read_y4m(source);
    } else {
        std::vector<fs::path> paths;
        if (source.find('%') != std::string::npos) {
            paths = expand_pattern(source);
        } else if (fs::is_directory(source)) {
            for (const auto& entry : fs::directory_iterator(source)) {
                if (entry.is_regular_file() && entry.path().extension() == ".png") paths.push_back(entry.path());
            }
            std::ranges::sort(paths);
        } else {
            throw InputError("missing input " + source);
        }
        if (paths.empty()) throw InputError("no frames found for " + source);
        for (const auto& p : paths) frames.push_back(load_png(p));
    }
    if (frames.size() < 3 || frames.size() % 2 == 0) {
        throw InputError("need an odd number of frames >= 3, found " + std::to_string(frames.size()) + " in " +
                         source);
    }
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (!frames[i].same_shape(frames[0])) {
            throw InputError("frame dimension mismatch in " + source + ": frame " + std::to_string(i) + " is " +
                             std::to_string(frames[i].width()) + "x" + std::to_string(frames[i].height()) + "x" +
                             std::to_string(frames[i].channels()) + ", expected " + std::to_string(frames[0].width()) +
                             "x" + std::to_string(frames[0].height()) + "x" + std::to_string(frames[0].channels()));
        }
    }
    return Sequence(std::move(frames));
}

}  // namespace talign
