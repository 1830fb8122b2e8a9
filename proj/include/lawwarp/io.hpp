#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lawwarp/bench.hpp"
#include "lawwarp/frontalize.hpp"
#include "lawwarp/gradients.hpp"
#include "lawwarp/types.hpp"

namespace lawwarp {

// ---------------------------------------------------------------------------
// Tensor files: magic "LAWT", u16 LE version = 1, u16 LE ndim,
// ndim x u32 LE dims, then row-major float32 LE payload.
// ---------------------------------------------------------------------------

struct Tensor {
    std::vector<uint32_t> dims;
    std::vector<float> data;

    size_t element_count() const;
};

void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
/// Throws ParseError on bad magic/version or when the payload length
/// does not match the dims.
Tensor read_tensor(const std::filesystem::path& path);

Tensor tensor_from_feature_map(const FeatureMap& map);                       // (C, H, W)
FeatureMap feature_map_from_tensor(const Tensor& tensor);                    // requires ndim 3, finite data
Tensor tensor_from_fields(const std::vector<DisplacementField>& fields);     // (C, H, W, 2)
std::vector<DisplacementField> fields_from_tensor(const Tensor& tensor);     // accepts (H,W,2) and (C,H,W,2)

// ---------------------------------------------------------------------------
// Warp spec documents (JSON): {"channels": C, "keypoints": [[{...}]]} with
// per-keypoint keys k, rho, sx, sy, theta, tx, ty.
// ---------------------------------------------------------------------------

WarpSpec parse_warp_spec(const std::string& json_text);
WarpSpec load_warp_spec(const std::filesystem::path& path);
std::string warp_spec_to_json(const WarpSpec& spec);

// ---------------------------------------------------------------------------
// Landmark files: first line the point count L, then L lines of "x y".
// ---------------------------------------------------------------------------

LandmarkSet load_landmarks(const std::filesystem::path& path);
void save_landmarks(const std::filesystem::path& path, const LandmarkSet& landmarks);

// ---------------------------------------------------------------------------
// PNG: 8-bit, grayscale <-> 1 channel, RGB <-> 3 channels, values
// mapped linearly to [0, 1].
// ---------------------------------------------------------------------------

FeatureMap read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const FeatureMap& map);

// ---------------------------------------------------------------------------
// Flow visualization: the standard optical-flow color wheel. Zero
// displacement is white; saturation grows with magnitude relative to
// max_magnitude.
// ---------------------------------------------------------------------------

double max_flow_magnitude(const DisplacementField& field);
FeatureMap colorize_flow(const DisplacementField& field, double max_magnitude);

// ---------------------------------------------------------------------------
// Report documents.
// ---------------------------------------------------------------------------

std::string gradcheck_report_to_json(const GradCheckReport& report);
std::string bench_report_to_json(const BenchReport& report);

}  // namespace lawwarp
