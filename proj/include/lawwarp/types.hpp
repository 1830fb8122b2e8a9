#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lawwarp {

/// Thrown when a matrix logarithm is requested on the branch cut
/// (rotation angle of +/-pi, or any linear part with an eigenvalue on
/// the closed negative real axis).
struct BranchCutError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Thrown for inputs that are structurally valid but carry no usable
/// information (e.g. landmark sets with zero variance).
struct DegenerateInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a user-supplied objective produces a non-finite value.
struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown by file readers on malformed content.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A position in the normalized sampling domain. Feature maps live on
/// [-1,1] x [-1,1]; points outside are legal for field evaluation.
struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// A 2-D displacement / direction, same units as Point2.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Point2 operator+(Point2 p, Vec2 v) { return {p.x + v.x, p.y + v.y}; }
inline Vec2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }
inline double squared_norm(Vec2 v) { return v.x * v.x + v.y * v.y; }

/// One keypoint of a warp field: position, Gaussian influence
/// coefficient and the similarity-affine parameters acting around it.
/// Eight degrees of freedom in total.
struct KeypointWarp {
    Point2 k;
    double rho = 0.0;    // influence falloff, inverse squared distance
    double sx = 1.0;     // anisotropic scale, applied after rotation
    double sy = 1.0;
    double theta = 0.0;  // rotation angle, radians
    double tx = 0.0;     // translation
    double ty = 0.0;

    static KeypointWarp identity_at(Point2 position) {
        KeypointWarp kw;
        kw.k = position;
        return kw;
    }
};

/// Throws std::invalid_argument if any field is non-finite, rho < 0, or
/// sx/sy <= 0.
void validate(const KeypointWarp& kw);

/// Per-channel collection of keypoint warps. Immutable after
/// construction; every channel carries the same number of keypoints.
class WarpSpec {
public:
    explicit WarpSpec(std::vector<std::vector<KeypointWarp>> keypoints_per_channel);

    int channels() const { return static_cast<int>(per_channel_.size()); }
    int keypoints() const { return keypoints_; }
    std::span<const KeypointWarp> channel(int c) const;

    const std::vector<std::vector<KeypointWarp>>& all() const { return per_channel_; }

private:
    std::vector<std::vector<KeypointWarp>> per_channel_;
    int keypoints_ = 0;
};

/// Dense 2-vector field on a row-major grid; (dx, dy) interleaved.
/// Field math is carried in doubles throughout.
struct DisplacementField {
    int height = 0;
    int width = 0;
    std::vector<double> data;  // size 2*height*width

    DisplacementField() = default;
    DisplacementField(int h, int w);

    double& dx(int r, int c) { return data[2 * (static_cast<size_t>(r) * width + c)]; }
    double& dy(int r, int c) { return data[2 * (static_cast<size_t>(r) * width + c) + 1]; }
    double dx(int r, int c) const { return data[2 * (static_cast<size_t>(r) * width + c)]; }
    double dy(int r, int c) const { return data[2 * (static_cast<size_t>(r) * width + c) + 1]; }
};

/// Multi-channel 2-D grid of scalar samples, planar C x H x W layout,
/// 32-bit float storage.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int channels, int height, int width, float fill = 0.0f);

    /// Takes ownership of planar data; throws on size mismatch or
    /// non-finite samples.
    static FeatureMap from_data(int channels, int height, int width, std::vector<float> data);

    int channels() const { return channels_; }
    int height() const { return height_; }
    int width() const { return width_; }
    size_t plane_size() const { return static_cast<size_t>(height_) * width_; }
    size_t size() const { return data_.size(); }

    float& at(int c, int r, int col) { return data_[plane_size() * c + static_cast<size_t>(r) * width_ + col]; }
    float at(int c, int r, int col) const { return data_[plane_size() * c + static_cast<size_t>(r) * width_ + col]; }
    float* plane(int c) { return data_.data() + plane_size() * c; }
    const float* plane(int c) const { return data_.data() + plane_size() * c; }
    std::vector<float>& raw() { return data_; }
    const std::vector<float>& raw() const { return data_; }

private:
    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
};

/// Double-precision working image with the same planar layout as
/// FeatureMap. Used where gradient checks need the full 64-bit
/// pipeline.
struct Image64 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image64() = default;
    Image64(int c, int h, int w, double fill = 0.0);

    size_t plane_size() const { return static_cast<size_t>(height) * width; }
    double& at(int c, int r, int col) { return data[plane_size() * c + static_cast<size_t>(r) * width + col]; }
    double at(int c, int r, int col) const { return data[plane_size() * c + static_cast<size_t>(r) * width + col]; }
    double* plane(int c) { return data.data() + plane_size() * c; }
    const double* plane(int c) const { return data.data() + plane_size() * c; }
};

Image64 to_image64(const FeatureMap& map);
/// Rounds to 32-bit storage.
FeatureMap to_feature_map(const Image64& img);

/// For each output pixel, the source location to sample, in normalized
/// coordinates. (x, y) interleaved, row-major.
struct SampleGrid {
    int height = 0;
    int width = 0;
    std::vector<double> coords;  // size 2*height*width

    SampleGrid() = default;
    SampleGrid(int h, int w);

    double& x(int r, int c) { return coords[2 * (static_cast<size_t>(r) * width + c)]; }
    double& y(int r, int c) { return coords[2 * (static_cast<size_t>(r) * width + c) + 1]; }
    double x(int r, int c) const { return coords[2 * (static_cast<size_t>(r) * width + c)]; }
    double y(int r, int c) const { return coords[2 * (static_cast<size_t>(r) * width + c) + 1]; }
};

/// Coarse evaluation geometry: the warp field is computed on a
/// ceil(H/f) x ceil(W/f) grid over the same [-1,1]^2 domain, then
/// upscaled. factor = 1 means no coarsening.
struct CoarseGridConfig {
    int downscale_factor = 1;
    int coarse_h = 0;
    int coarse_w = 0;

    CoarseGridConfig(int factor, int full_h, int full_w);
};

}  // namespace lawwarp
