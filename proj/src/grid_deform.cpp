#include "lawwarp/grid_deform.hpp"

#include <cmath>

#include "lawwarp/detail/field_eval.hpp"
#include "lawwarp/detail/interp.hpp"
#include "lawwarp/parallel.hpp"

namespace lawwarp {

namespace detail {

void upscale_vec2(const double* src, int src_h, int src_w, double* dst, int dst_h, int dst_w) {
    const double step_y = dst_h > 1 ? static_cast<double>(src_h - 1) / (dst_h - 1) : 0.0;
    const double step_x = dst_w > 1 ? static_cast<double>(src_w - 1) / (dst_w - 1) : 0.0;
    for (int r = 0; r < dst_h; ++r) {
        const double sy = r * step_y;
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, src_h - 1);
        const double fy = sy - y0;
        for (int c = 0; c < dst_w; ++c) {
            const double sx = c * step_x;
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, src_w - 1);
            const double fx = sx - x0;
            const double* v00 = src + 2 * (static_cast<size_t>(y0) * src_w + x0);
            const double* v01 = src + 2 * (static_cast<size_t>(y0) * src_w + x1);
            const double* v10 = src + 2 * (static_cast<size_t>(y1) * src_w + x0);
            const double* v11 = src + 2 * (static_cast<size_t>(y1) * src_w + x1);
            double* out = dst + 2 * (static_cast<size_t>(r) * dst_w + c);
            for (int d = 0; d < 2; ++d) {
                const double top = v00[d] + fx * (v01[d] - v00[d]);
                const double bot = v10[d] + fx * (v11[d] - v10[d]);
                out[d] = top + fy * (bot - top);
            }
        }
    }
}

void upscale_vec2_adjoint(const double* fine_grad, int dst_h, int dst_w, double* coarse_grad,
                          int src_h, int src_w) {
    const double step_y = dst_h > 1 ? static_cast<double>(src_h - 1) / (dst_h - 1) : 0.0;
    const double step_x = dst_w > 1 ? static_cast<double>(src_w - 1) / (dst_w - 1) : 0.0;
    for (int r = 0; r < dst_h; ++r) {
        const double sy = r * step_y;
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, src_h - 1);
        const double fy = sy - y0;
        for (int c = 0; c < dst_w; ++c) {
            const double sx = c * step_x;
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, src_w - 1);
            const double fx = sx - x0;
            const double* up = fine_grad + 2 * (static_cast<size_t>(r) * dst_w + c);
            double* g00 = coarse_grad + 2 * (static_cast<size_t>(y0) * src_w + x0);
            double* g01 = coarse_grad + 2 * (static_cast<size_t>(y0) * src_w + x1);
            double* g10 = coarse_grad + 2 * (static_cast<size_t>(y1) * src_w + x0);
            double* g11 = coarse_grad + 2 * (static_cast<size_t>(y1) * src_w + x1);
            for (int d = 0; d < 2; ++d) {
                g00[d] += (1.0 - fx) * (1.0 - fy) * up[d];
                g01[d] += fx * (1.0 - fy) * up[d];
                g10[d] += (1.0 - fx) * fy * up[d];
                g11[d] += fx * fy * up[d];
            }
        }
    }
}

}  // namespace detail

SampleGrid make_identity_grid(int h, int w) {
    if (h < 2 || w < 2) {
        throw std::invalid_argument("make_identity_grid: dimensions must be at least 2x2");
    }
    SampleGrid grid(h, w);
    for (int r = 0; r < h; ++r) {
        const double y = detail::from_pixel(r, h);
        for (int c = 0; c < w; ++c) {
            grid.x(r, c) = detail::from_pixel(c, w);
            grid.y(r, c) = y;
        }
    }
    return grid;
}

std::vector<DisplacementField> compute_field_on_coarse_grid(const WarpSpec& spec,
                                                            const CoarseGridConfig& cfg) {
    const int ch = cfg.coarse_h, cw = cfg.coarse_w;
    std::vector<DisplacementField> fields;
    fields.reserve(static_cast<size_t>(spec.channels()));
    for (int c = 0; c < spec.channels(); ++c) {
        fields.emplace_back(ch, cw);
    }
    const int64_t rows_total = static_cast<int64_t>(spec.channels()) * ch;
    parallel::parallel_for(0, rows_total, [&](int64_t begin, int64_t end) {
        for (int64_t i = begin; i < end; ++i) {
            const int channel = static_cast<int>(i / ch);
            const int r = static_cast<int>(i % ch);
            const std::span<const KeypointWarp> kws = spec.channel(channel);
            DisplacementField& field = fields[static_cast<size_t>(channel)];
            const double y = detail::from_pixel(r, ch);
            for (int c = 0; c < cw; ++c) {
                const Vec2 d = detail::displacement_raw({detail::from_pixel(c, cw), y}, kws);
                field.dx(r, c) = d.x;
                field.dy(r, c) = d.y;
            }
        }
    });
    return fields;
}

DisplacementField upscale_field(const DisplacementField& coarse, int target_h, int target_w) {
    if (coarse.height < 1 || coarse.width < 1) {
        throw std::invalid_argument("upscale_field: empty coarse field");
    }
    if (target_h < coarse.height || target_w < coarse.width) {
        throw std::invalid_argument("upscale_field: target must be at least the coarse size");
    }
    DisplacementField fine(target_h, target_w);
    detail::upscale_vec2(coarse.data.data(), coarse.height, coarse.width, fine.data.data(),
                         target_h, target_w);
    return fine;
}

SampleGrid grid_from_field(const DisplacementField& field) {
    SampleGrid grid(field.height, field.width);
    for (int r = 0; r < field.height; ++r) {
        const double y = detail::from_pixel(r, field.height);
        for (int c = 0; c < field.width; ++c) {
            grid.x(r, c) = detail::from_pixel(c, field.width) + field.dx(r, c);
            grid.y(r, c) = y + field.dy(r, c);
        }
    }
    return grid;
}

namespace {

template <typename T>
void sample_planes(const T* src, int channels, int h, int w, const SampleGrid& grid, T* dst) {
    const size_t src_plane = static_cast<size_t>(h) * w;
    const size_t dst_plane = static_cast<size_t>(grid.height) * grid.width;
    const int64_t rows_total = static_cast<int64_t>(channels) * grid.height;
    parallel::parallel_for(0, rows_total, [&](int64_t begin, int64_t end) {
        for (int64_t i = begin; i < end; ++i) {
            const int c = static_cast<int>(i / grid.height);
            const int r = static_cast<int>(i % grid.height);
            detail::sample_plane_rows(src + src_plane * c, h, w, grid.coords.data(), grid.width,
                                      r, r + 1, dst + dst_plane * c);
        }
    });
}

void check_cfg_matches(const CoarseGridConfig& cfg, int h, int w) {
    const CoarseGridConfig expected(cfg.downscale_factor, h, w);
    if (expected.coarse_h != cfg.coarse_h || expected.coarse_w != cfg.coarse_w) {
        throw std::invalid_argument("CoarseGridConfig does not match the feature map resolution");
    }
}

}  // namespace

FeatureMap sample_bilinear(const FeatureMap& map, const SampleGrid& grid) {
    FeatureMap out(map.channels(), grid.height, grid.width);
    sample_planes(map.raw().data(), map.channels(), map.height(), map.width(), grid,
                  out.raw().data());
    return out;
}

Image64 sample_bilinear(const Image64& map, const SampleGrid& grid) {
    Image64 out(map.channels, grid.height, grid.width);
    sample_planes(map.data.data(), map.channels, map.height, map.width, grid, out.data.data());
    return out;
}

FeatureMap warp_feature_map(const FeatureMap& map, const WarpSpec& spec,
                            const CoarseGridConfig& cfg) {
    if (spec.channels() != map.channels()) {
        throw std::invalid_argument("warp_feature_map: channel count mismatch");
    }
    check_cfg_matches(cfg, map.height(), map.width());
    const std::vector<DisplacementField> coarse = compute_field_on_coarse_grid(spec, cfg);
    FeatureMap out(map.channels(), map.height(), map.width());
    for (int c = 0; c < map.channels(); ++c) {
        const DisplacementField fine = upscale_field(coarse[static_cast<size_t>(c)],
                                                     map.height(), map.width());
        const SampleGrid grid = grid_from_field(fine);
        parallel::parallel_for(0, grid.height, [&](int64_t begin, int64_t end) {
            detail::sample_plane_rows(map.plane(c), map.height(), map.width(),
                                      grid.coords.data(), grid.width, static_cast<int>(begin),
                                      static_cast<int>(end), out.plane(c));
        });
    }
    return out;
}

Image64 warp_image(const Image64& map, const WarpSpec& spec, const CoarseGridConfig& cfg) {
    if (spec.channels() != map.channels) {
        throw std::invalid_argument("warp_image: channel count mismatch");
    }
    check_cfg_matches(cfg, map.height, map.width);
    const std::vector<DisplacementField> coarse = compute_field_on_coarse_grid(spec, cfg);
    Image64 out(map.channels, map.height, map.width);
    for (int c = 0; c < map.channels; ++c) {
        const DisplacementField fine = upscale_field(coarse[static_cast<size_t>(c)],
                                                     map.height, map.width);
        const SampleGrid grid = grid_from_field(fine);
        parallel::parallel_for(0, grid.height, [&](int64_t begin, int64_t end) {
            detail::sample_plane_rows(map.plane(c), map.height, map.width, grid.coords.data(),
                                      grid.width, static_cast<int>(begin), static_cast<int>(end),
                                      out.plane(c));
        });
    }
    return out;
}

}  // namespace lawwarp
