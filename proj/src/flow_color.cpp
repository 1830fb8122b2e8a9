#include <array>
#include <cmath>
#include <vector>

#include "lawwarp/io.hpp"

namespace lawwarp {

namespace {

// The optical-flow color wheel (Baker et al. flow-code convention):
// six hue segments with uneven step counts, interpolated by angle.
std::vector<std::array<double, 3>> make_color_wheel() {
    constexpr int kRY = 15, kYG = 6, kGC = 4, kCB = 11, kBM = 13, kMR = 6;
    std::vector<std::array<double, 3>> wheel;
    wheel.reserve(kRY + kYG + kGC + kCB + kBM + kMR);
    for (int i = 0; i < kRY; ++i) wheel.push_back({1.0, static_cast<double>(i) / kRY, 0.0});
    for (int i = 0; i < kYG; ++i) wheel.push_back({1.0 - static_cast<double>(i) / kYG, 1.0, 0.0});
    for (int i = 0; i < kGC; ++i) wheel.push_back({0.0, 1.0, static_cast<double>(i) / kGC});
    for (int i = 0; i < kCB; ++i) wheel.push_back({0.0, 1.0 - static_cast<double>(i) / kCB, 1.0});
    for (int i = 0; i < kBM; ++i) wheel.push_back({static_cast<double>(i) / kBM, 0.0, 1.0});
    for (int i = 0; i < kMR; ++i) wheel.push_back({1.0, 0.0, 1.0 - static_cast<double>(i) / kMR});
    return wheel;
}

}  // namespace

double max_flow_magnitude(const DisplacementField& field) {
    double max_mag = 0.0;
    for (int r = 0; r < field.height; ++r) {
        for (int c = 0; c < field.width; ++c) {
            const double dx = field.dx(r, c), dy = field.dy(r, c);
            max_mag = std::max(max_mag, std::sqrt(dx * dx + dy * dy));
        }
    }
    return max_mag;
}

FeatureMap colorize_flow(const DisplacementField& field, double max_magnitude) {
    static const std::vector<std::array<double, 3>> wheel = make_color_wheel();
    const int ncols = static_cast<int>(wheel.size());
    FeatureMap out(3, field.height, field.width);
    const double scale = max_magnitude > 0.0 ? 1.0 / max_magnitude : 0.0;
    for (int r = 0; r < field.height; ++r) {
        for (int c = 0; c < field.width; ++c) {
            const double fx = field.dx(r, c) * scale;
            const double fy = field.dy(r, c) * scale;
            const double rad = std::min(std::sqrt(fx * fx + fy * fy), 1.0);
            const double angle = std::atan2(-fy, -fx) / 3.14159265358979323846;
            const double fk = (angle + 1.0) / 2.0 * (ncols - 1);
            const int k0 = static_cast<int>(fk);
            const int k1 = (k0 + 1) % ncols;
            const double f = fk - k0;
            for (int b = 0; b < 3; ++b) {
                const double col = (1.0 - f) * wheel[static_cast<size_t>(k0)][static_cast<size_t>(b)] +
                                   f * wheel[static_cast<size_t>(k1)][static_cast<size_t>(b)];
                // Blend toward white at the center so zero flow is white.
                out.at(b, r, c) = static_cast<float>(1.0 - rad * (1.0 - col));
            }
        }
    }
    return out;
}

}  // namespace lawwarp
