#pragma once

#include "lawwarp/types.hpp"

namespace lawwarp {

/// Aligned-corners identity grid: coords[r][c] = (-1 + 2c/(w-1), -1 + 2r/(h-1)).
/// Sampling any map with it reproduces the map exactly. h, w >= 2.
SampleGrid make_identity_grid(int h, int w);

/// Evaluates the composite displacement on the coarse identity grid for
/// every channel. Output order matches the spec's channels.
std::vector<DisplacementField> compute_field_on_coarse_grid(const WarpSpec& spec,
                                                            const CoarseGridConfig& cfg);

/// Bilinear, aligned-corners upscale of a displacement field. Exact
/// identity when target dims equal the coarse dims.
DisplacementField upscale_field(const DisplacementField& coarse, int target_h, int target_w);

/// Backward-warp sampler: each output pixel bilinearly interpolates the
/// map at its grid coordinate. Out-of-range coordinates are clamped to
/// the border. Interpolation runs in double; results are rounded to the
/// map's 32-bit storage.
FeatureMap sample_bilinear(const FeatureMap& map, const SampleGrid& grid);

/// Double-precision variant of the sampler, same semantics.
Image64 sample_bilinear(const Image64& map, const SampleGrid& grid);

/// grid = identity + field, the backward sampling map realized by a
/// displacement field.
SampleGrid grid_from_field(const DisplacementField& field);

/// Full pipeline: coarse field -> upscale -> per-channel backward warp.
/// Each channel is deformed by its own field.
FeatureMap warp_feature_map(const FeatureMap& map, const WarpSpec& spec,
                            const CoarseGridConfig& cfg);

/// The same pipeline kept in 64-bit floats end to end.
Image64 warp_image(const Image64& map, const WarpSpec& spec, const CoarseGridConfig& cfg);

}  // namespace lawwarp
