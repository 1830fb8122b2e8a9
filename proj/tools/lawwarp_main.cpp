#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "lawwarp/grid_deform.hpp"
#include "lawwarp/io.hpp"
#include "lawwarp/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 check failure, 2 usage/parse, 3 degenerate input.
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDegenerate = 3;

std::pair<int, int> parse_size(const std::string& text, const char* flag) {
    int h = 0, w = 0;
    char extra = 0;
    if (std::sscanf(text.c_str(), "%dx%d%c", &h, &w, &extra) != 2 || h < 2 || w < 2) {
        throw lawwarp::ParseError(std::string(flag) + " expects HxW with both at least 2");
    }
    return {h, w};
}

bool has_png_extension(const fs::path& path) {
    std::string ext = path.extension().string();
    for (char& c : ext) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return ext == ".png";
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << text;
}

struct FieldArgs {
    std::string spec_path;
    std::string grid;
    int coarse = 1;
    std::string out;
};

int run_field(const FieldArgs& args) {
    const auto [h, w] = parse_size(args.grid, "--grid");
    const lawwarp::WarpSpec spec = lawwarp::load_warp_spec(args.spec_path);
    const lawwarp::CoarseGridConfig cfg(args.coarse, h, w);
    std::vector<lawwarp::DisplacementField> fields =
        lawwarp::compute_field_on_coarse_grid(spec, cfg);
    for (auto& field : fields) {
        field = lawwarp::upscale_field(field, h, w);
    }
    lawwarp::write_tensor(args.out, lawwarp::tensor_from_fields(fields));
    std::cout << "wrote field tensor (" << spec.channels() << ", " << h << ", " << w
              << ", 2) to " << args.out << "\n";
    return 0;
}

struct WarpArgs {
    std::string input;
    std::string spec_path;
    int coarse = 1;
    std::string out;
};

int run_warp(const WarpArgs& args) {
    const lawwarp::WarpSpec spec = lawwarp::load_warp_spec(args.spec_path);
    const bool png = has_png_extension(args.input);
    const lawwarp::FeatureMap input =
        png ? lawwarp::read_png(args.input)
            : lawwarp::feature_map_from_tensor(lawwarp::read_tensor(args.input));
    const lawwarp::CoarseGridConfig cfg(args.coarse, input.height(), input.width());
    const lawwarp::FeatureMap warped = lawwarp::warp_feature_map(input, spec, cfg);
    if (has_png_extension(args.out)) {
        lawwarp::write_png(args.out, warped);
    } else {
        lawwarp::write_tensor(args.out, lawwarp::tensor_from_feature_map(warped));
    }
    std::cout << "warped " << args.input << " -> " << args.out << "\n";
    return 0;
}

struct VizArgs {
    std::string field_path;
    std::string out;
    double max_magnitude = 0.0;
};

int run_viz(const VizArgs& args) {
    const std::vector<lawwarp::DisplacementField> fields =
        lawwarp::fields_from_tensor(lawwarp::read_tensor(args.field_path));
    double max_mag = args.max_magnitude;
    if (max_mag <= 0.0) {
        max_mag = 0.0;
        for (const auto& field : fields) {
            max_mag = std::max(max_mag, lawwarp::max_flow_magnitude(field));
        }
    }
    const int h = fields.front().height, w = fields.front().width;
    lawwarp::FeatureMap stacked(3, h * static_cast<int>(fields.size()), w);
    for (size_t c = 0; c < fields.size(); ++c) {
        const lawwarp::FeatureMap colored = lawwarp::colorize_flow(fields[c], max_mag);
        for (int ch = 0; ch < 3; ++ch) {
            for (int r = 0; r < h; ++r) {
                for (int col = 0; col < w; ++col) {
                    stacked.at(ch, static_cast<int>(c) * h + r, col) = colored.at(ch, r, col);
                }
            }
        }
    }
    lawwarp::write_png(args.out, stacked);
    std::cout << "max magnitude used for normalization: " << max_mag << "\n";
    return 0;
}

struct FrontalizeArgs {
    std::string image;
    std::string landmarks;
    std::string tmpl;
    std::string out;
    std::string emit_transform;
};

int run_frontalize(const FrontalizeArgs& args) {
    const lawwarp::LandmarkSet detected = lawwarp::load_landmarks(args.landmarks);
    const lawwarp::LandmarkSet tmpl = lawwarp::load_landmarks(args.tmpl);
    const lawwarp::SimilarityTransform transform = lawwarp::solve_similarity(detected, tmpl);
    const lawwarp::FeatureMap image = lawwarp::read_png(args.image);
    lawwarp::write_png(args.out, lawwarp::apply_similarity(image, transform));
    if (!args.emit_transform.empty()) {
        char line[128];
        std::snprintf(line, sizeof(line), "%.17g %.17g %.17g %.17g\n", transform.s,
                      transform.theta, transform.t.x, transform.t.y);
        write_text_file(args.emit_transform, line);
    }
    std::cout << "frontalized with s=" << transform.s << " theta=" << transform.theta
              << " t=(" << transform.t.x << ", " << transform.t.y << ")\n";
    return 0;
}

struct GradcheckArgs {
    uint64_t seed = 0;
    std::string config_path;
    std::string out;
    std::string inject_sign_error;
};

int run_gradcheck(const GradcheckArgs& args) {
    int channels = 4, keypoints = 8, height = 240, width = 240, coarse_factor = 4;
    lawwarp::GradCheckOptions options;
    if (!args.config_path.empty()) {
        json config;
        try {
            config = json::parse(std::ifstream(args.config_path));
        } catch (const json::exception& e) {
            throw lawwarp::ParseError(std::string("gradcheck config: ") + e.what());
        }
        channels = config.value("channels", channels);
        keypoints = config.value("keypoints", keypoints);
        height = config.value("height", height);
        width = config.value("width", width);
        coarse_factor = config.value("coarse_factor", coarse_factor);
        options.tolerance = config.value("tolerance", options.tolerance);
        if (config.contains("steps")) {
            options.steps = config.at("steps").get<std::vector<double>>();
        }
    }
    if (!args.inject_sign_error.empty()) {
        const auto param = lawwarp::warp_param_from_name(args.inject_sign_error);
        if (!param) {
            throw lawwarp::ParseError("unknown parameter name: " + args.inject_sign_error);
        }
        options.negate_param = *param;
    }

    const lawwarp::GradCheckSetup setup =
        lawwarp::gradcheck_setup(args.seed, channels, keypoints, height, width, coarse_factor);
    const lawwarp::GradCheckReport report = lawwarp::finite_difference_check(
        lawwarp::to_image64(setup.map), setup.spec, setup.cfg,
        lawwarp::l2_objective(lawwarp::to_image64(setup.target)), options);

    std::printf("%-8s %14s %12s %14s  %s\n", "param", "max_rel_err", "best_step",
                "max_abs_grad", "status");
    for (const auto& stat : report.params) {
        std::printf("%-8s %14.4e %12.1e %14.4e  %s\n", lawwarp::warp_param_name(stat.param),
                    stat.max_rel_err, stat.best_step, stat.max_abs_grad,
                    stat.max_rel_err <= report.tolerance ? "ok" : "FAIL");
    }
    std::printf("overall max_rel_err %.4e (tolerance %.1e): %s\n", report.max_rel_err,
                report.tolerance, report.pass ? "PASS" : "FAIL");
    const std::string doc = lawwarp::gradcheck_report_to_json(report);
    if (!args.out.empty()) {
        write_text_file(args.out, doc);
    } else {
        std::cout << doc;
    }
    return report.pass ? 0 : kExitCheckFailure;
}

struct BenchArgs {
    std::string grid = "240x240";
    lawwarp::BenchConfig config;
    std::string out;
};

int run_bench_cmd(const BenchArgs& args) {
    lawwarp::BenchConfig config = args.config;
    const auto [h, w] = parse_size(args.grid, "--grid");
    config.height = h;
    config.width = w;
    const lawwarp::BenchReport report = lawwarp::run_bench(config);
    auto print_table = [](const std::vector<lawwarp::StrategyTiming>& results) {
        std::printf("%-14s %12s %12s %12s %12s\n", "strategy", "dof", "ms_median", "fps_median",
                    "fps_iqr");
        for (const auto& result : results) {
            std::printf("%-14s %12lld %12.3f %12.2f %12.2f\n",
                        lawwarp::strategy_name(result.strategy),
                        static_cast<long long>(result.dof), result.ms_median, result.fps_median,
                        result.fps_iqr);
        }
    };
    print_table(report.results);
    if (!report.parallel_results.empty()) {
        std::printf("with worker threads:\n");
        print_table(report.parallel_results);
    }
    std::printf("ordering global >= local > dense_flow: %s\n",
                report.ordering_matches_reference ? "observed" : "not observed");
    if (!args.out.empty()) {
        write_text_file(args.out, lawwarp::bench_report_to_json(report));
    }
    return 0;
}

struct MaskArgs {
    std::string size;
    std::vector<double> rect;
    std::string landmarks;
    std::vector<int> mouth_indices;
    double sigma = 0.0;
    std::string out;
};

int run_mask(const MaskArgs& args) {
    const auto [h, w] = parse_size(args.size, "--size");
    lawwarp::RectF rect;
    if (!args.rect.empty()) {
        if (args.rect.size() != 4) {
            throw lawwarp::ParseError("--rect expects x,y,w,h");
        }
        rect = {args.rect[0], args.rect[1], args.rect[2], args.rect[3]};
    } else if (!args.landmarks.empty()) {
        if (args.mouth_indices.empty()) {
            throw lawwarp::ParseError("--mouth-indices is required with --landmarks");
        }
        rect = lawwarp::lip_rect_from_landmarks(lawwarp::load_landmarks(args.landmarks),
                                                args.mouth_indices);
    } else {
        throw lawwarp::ParseError("either --rect or --landmarks must be given");
    }
    const double sigma = args.sigma > 0.0 ? args.sigma : lawwarp::default_mask_sigma(rect);
    lawwarp::write_png(args.out, lawwarp::gaussian_soft_mask(h, w, rect, sigma));
    std::cout << "wrote mask (rect " << rect.x << "," << rect.y << "," << rect.w << ","
              << rect.h << " sigma " << sigma << ") to " << args.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"keypoint-driven local affine warp fields over feature maps"};
    app.footer("The environment variable LAWWARP_THREADS caps worker parallelism (0 = auto).");
    app.require_subcommand(1);

    FieldArgs field_args;
    CLI::App* field = app.add_subcommand("field", "evaluate a warp field and write it as a tensor");
    field->add_option("spec", field_args.spec_path, "warp spec JSON file")->required();
    field->add_option("--grid", field_args.grid, "output resolution HxW")->required();
    field->add_option("--coarse", field_args.coarse, "coarse-grid downscale factor")
        ->default_val(1);
    field->add_option("--out", field_args.out, "output tensor path")->required();

    WarpArgs warp_args;
    CLI::App* warp = app.add_subcommand("warp", "warp a PNG image or feature-map tensor");
    warp->add_option("input", warp_args.input, "input PNG or tensor")->required();
    warp->add_option("spec", warp_args.spec_path, "warp spec JSON file")->required();
    warp->add_option("--coarse", warp_args.coarse, "coarse-grid downscale factor")->default_val(1);
    warp->add_option("--out", warp_args.out, "output path (PNG in -> PNG out)")->required();

    VizArgs viz_args;
    CLI::App* viz = app.add_subcommand("viz", "render a displacement field with the flow color wheel");
    viz->add_option("field", viz_args.field_path, "field tensor (.., H, W, 2)")->required();
    viz->add_option("--out", viz_args.out, "output PNG path")->required();
    viz->add_option("--max", viz_args.max_magnitude,
                    "fixed normalization magnitude (default: per-file max)");

    FrontalizeArgs front_args;
    CLI::App* front = app.add_subcommand("frontalize", "align a face image to a landmark template");
    front->add_option("image", front_args.image, "input PNG")->required();
    front->add_option("landmarks", front_args.landmarks, "detected landmarks file")->required();
    front->add_option("template", front_args.tmpl, "frontal landmark template file")->required();
    front->add_option("--out", front_args.out, "output PNG path")->required();
    front->add_option("--emit-transform", front_args.emit_transform,
                      "also write the solved s/theta/tx/ty");

    GradcheckArgs grad_args;
    CLI::App* grad = app.add_subcommand("gradcheck", "verify analytic gradients against finite differences");
    grad->add_option("--seed", grad_args.seed, "seed for the random spec and images")
        ->default_val(0);
    grad->add_option("--config", grad_args.config_path, "JSON config overriding the defaults");
    grad->add_option("--out", grad_args.out, "write the JSON report here instead of stdout");
    grad->add_option("--inject-sign-error", grad_args.inject_sign_error, "")->group("");

    BenchArgs bench_args;
    CLI::App* bench = app.add_subcommand("bench", "compare warping strategies (dof and throughput)");
    bench->add_option("--grid", bench_args.grid, "map resolution HxW")->default_val("240x240");
    bench->add_option("--channels", bench_args.config.channels, "channel count")->default_val(4);
    bench->add_option("--keypoints", bench_args.config.keypoints, "keypoints per channel")
        ->default_val(8);
    bench->add_option("--coarse", bench_args.config.coarse_factor, "coarse-grid factor")
        ->default_val(4);
    bench->add_option("--reps", bench_args.config.repetitions, "timed repetitions")
        ->default_val(20);
    bench->add_option("--warmup", bench_args.config.warmups, "warm-up runs")->default_val(3);
    bench->add_flag("--parallel", bench_args.config.parallel,
                    "enable the library's worker threads");
    bench->add_option("--seed", bench_args.config.seed, "input generation seed")->default_val(0);
    bench->add_option("--out", bench_args.out, "machine-readable report path");

    MaskArgs mask_args;
    CLI::App* mask = app.add_subcommand("mask", "write a Gaussian soft mask for a pixel rect");
    mask->add_option("--size", mask_args.size, "mask resolution HxW")->required();
    mask->add_option("--rect", mask_args.rect, "rect as x,y,w,h")->delimiter(',');
    mask->add_option("--landmarks", mask_args.landmarks, "derive the rect from these landmarks");
    mask->add_option("--mouth-indices", mask_args.mouth_indices,
                     "landmark indices forming the mouth")
        ->delimiter(',');
    mask->add_option("--sigma", mask_args.sigma, "blur std in pixels (default: 5% of short side)");
    mask->add_option("--out", mask_args.out, "output PNG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (app.got_subcommand(field)) return run_field(field_args);
        if (app.got_subcommand(warp)) return run_warp(warp_args);
        if (app.got_subcommand(viz)) return run_viz(viz_args);
        if (app.got_subcommand(front)) return run_frontalize(front_args);
        if (app.got_subcommand(grad)) return run_gradcheck(grad_args);
        if (app.got_subcommand(bench)) return run_bench_cmd(bench_args);
        if (app.got_subcommand(mask)) return run_mask(mask_args);
    } catch (const lawwarp::DegenerateInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
