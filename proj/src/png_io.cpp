#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "lawwarp/io.hpp"

namespace lawwarp {

FeatureMap read_png(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw ParseError(path.string() + ": " + image.message);
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int channels = color ? 3 : 1;
    std::vector<uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string message = image.message;
        png_image_free(&image);
        throw ParseError(path.string() + ": " + message);
    }
    const int h = static_cast<int>(image.height);
    const int w = static_cast<int>(image.width);
    if (h < 2 || w < 2) {
        throw ParseError(path.string() + ": image must be at least 2x2");
    }
    FeatureMap map(channels, h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int ch = 0; ch < channels; ++ch) {
                const uint8_t v = buffer[(static_cast<size_t>(r) * w + c) * channels + ch];
                map.at(ch, r, c) = static_cast<float>(v) / 255.0f;
            }
        }
    }
    return map;
}

void write_png(const std::filesystem::path& path, const FeatureMap& map) {
    if (map.channels() != 1 && map.channels() != 3) {
        throw std::invalid_argument("write_png: only 1- or 3-channel maps can be written");
    }
    const int channels = map.channels();
    const int h = map.height(), w = map.width();
    std::vector<uint8_t> buffer(static_cast<size_t>(h) * w * channels);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int ch = 0; ch < channels; ++ch) {
                const double v = std::clamp(static_cast<double>(map.at(ch, r, c)), 0.0, 1.0);
                buffer[(static_cast<size_t>(r) * w + c) * channels + ch] =
                    static_cast<uint8_t>(std::lround(v * 255.0));
            }
        }
    }
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr)) {
        const std::string message = image.message;
        png_image_free(&image);
        throw std::runtime_error(path.string() + ": " + message);
    }
}

}  // namespace lawwarp
