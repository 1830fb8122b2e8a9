#include "lawwarp/types.hpp"

#include <algorithm>
#include <cmath>

namespace lawwarp {

void validate(const KeypointWarp& kw) {
    const bool finite = std::isfinite(kw.k.x) && std::isfinite(kw.k.y) && std::isfinite(kw.rho) &&
                        std::isfinite(kw.sx) && std::isfinite(kw.sy) && std::isfinite(kw.theta) &&
                        std::isfinite(kw.tx) && std::isfinite(kw.ty);
    if (!finite) {
        throw std::invalid_argument("KeypointWarp: non-finite parameter");
    }
    if (kw.rho < 0.0) {
        throw std::invalid_argument("KeypointWarp: rho must be non-negative");
    }
    if (kw.sx <= 0.0 || kw.sy <= 0.0) {
        throw std::invalid_argument("KeypointWarp: scales must be positive");
    }
}

WarpSpec::WarpSpec(std::vector<std::vector<KeypointWarp>> keypoints_per_channel)
    : per_channel_(std::move(keypoints_per_channel)) {
    if (per_channel_.empty()) {
        throw std::invalid_argument("WarpSpec: at least one channel required");
    }
    keypoints_ = static_cast<int>(per_channel_.front().size());
    if (keypoints_ < 1) {
        throw std::invalid_argument("WarpSpec: at least one keypoint per channel required");
    }
    for (const auto& channel : per_channel_) {
        if (static_cast<int>(channel.size()) != keypoints_) {
            throw std::invalid_argument("WarpSpec: all channels must have the same keypoint count");
        }
        for (const KeypointWarp& kw : channel) {
            validate(kw);
        }
    }
}

std::span<const KeypointWarp> WarpSpec::channel(int c) const {
    if (c < 0 || c >= channels()) {
        throw std::invalid_argument("WarpSpec::channel: index out of range");
    }
    return per_channel_[static_cast<size_t>(c)];
}

DisplacementField::DisplacementField(int h, int w) : height(h), width(w) {
    if (h < 1 || w < 1) {
        throw std::invalid_argument("DisplacementField: dimensions must be positive");
    }
    data.assign(2 * static_cast<size_t>(h) * w, 0.0);
}

FeatureMap::FeatureMap(int channels, int height, int width, float fill)
    : channels_(channels), height_(height), width_(width) {
    if (channels < 1) {
        throw std::invalid_argument("FeatureMap: channel count must be positive");
    }
    if (height < 2 || width < 2) {
        throw std::invalid_argument("FeatureMap: dimensions must be at least 2x2");
    }
    if (!std::isfinite(fill)) {
        throw std::invalid_argument("FeatureMap: non-finite fill value");
    }
    data_.assign(static_cast<size_t>(channels) * height * width, fill);
}

FeatureMap FeatureMap::from_data(int channels, int height, int width, std::vector<float> data) {
    FeatureMap map(channels, height, width);
    if (data.size() != map.size()) {
        throw std::invalid_argument("FeatureMap::from_data: size mismatch");
    }
    for (float v : data) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("FeatureMap::from_data: non-finite sample");
        }
    }
    map.data_ = std::move(data);
    return map;
}

Image64::Image64(int c, int h, int w, double fill) : channels(c), height(h), width(w) {
    if (c < 1 || h < 2 || w < 2) {
        throw std::invalid_argument("Image64: invalid dimensions");
    }
    data.assign(static_cast<size_t>(c) * h * w, fill);
}

Image64 to_image64(const FeatureMap& map) {
    Image64 img(map.channels(), map.height(), map.width());
    std::copy(map.raw().begin(), map.raw().end(), img.data.begin());
    return img;
}

FeatureMap to_feature_map(const Image64& img) {
    FeatureMap map(img.channels, img.height, img.width);
    std::transform(img.data.begin(), img.data.end(), map.raw().begin(),
                   [](double v) { return static_cast<float>(v); });
    return map;
}

SampleGrid::SampleGrid(int h, int w) : height(h), width(w) {
    if (h < 1 || w < 1) {
        throw std::invalid_argument("SampleGrid: dimensions must be positive");
    }
    coords.assign(2 * static_cast<size_t>(h) * w, 0.0);
}

CoarseGridConfig::CoarseGridConfig(int factor, int full_h, int full_w)
    : downscale_factor(factor) {
    if (factor < 1) {
        throw std::invalid_argument("CoarseGridConfig: downscale_factor must be positive");
    }
    if (full_h < 2 || full_w < 2) {
        throw std::invalid_argument("CoarseGridConfig: full resolution must be at least 2x2");
    }
    coarse_h = (full_h + factor - 1) / factor;
    coarse_w = (full_w + factor - 1) / factor;
    if (coarse_h < 2 || coarse_w < 2) {
        throw std::invalid_argument(
            "CoarseGridConfig: downscale_factor leaves fewer than 2 coarse samples per axis");
    }
}

}  // namespace lawwarp
