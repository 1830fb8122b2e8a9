#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "lawwarp/io.hpp"
#include "lawwarp/synthetic.hpp"

using namespace lawwarp;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "lawwarp-io-tests";
        fs::create_directories(d);
        return d;
    }();
    return dir / name;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

bool bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) {
        return false;
    }
    for (size_t i = 0; i < a.size(); ++i) {
        if (std::bit_cast<uint32_t>(a[i]) != std::bit_cast<uint32_t>(b[i])) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("tensor file round trip is bit identical") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor t;
        const int ndim = 1 + static_cast<int>(rng() % 4);
        size_t count = 1;
        for (int i = 0; i < ndim; ++i) {
            const uint32_t d = 1 + static_cast<uint32_t>(rng() % 7);
            t.dims.push_back(d);
            count *= d;
        }
        for (size_t i = 0; i < count; ++i) {
            // exercise negative zero, denormals and ordinary values
            const uint32_t bits = static_cast<uint32_t>(rng());
            float f = std::bit_cast<float>(bits);
            if (std::isnan(f) || std::isinf(f)) {
                f = static_cast<float>(i) * 0.25f;
            }
            t.data.push_back(f);
        }
        const fs::path path = temp_file("roundtrip.lawt");
        write_tensor(path, t);
        const Tensor back = read_tensor(path);
        CHECK(back.dims == t.dims);
        CHECK(bit_equal(back.data, t.data));
    }
}

TEST_CASE("tensor reader rejects malformed files") {
    const fs::path path = temp_file("bad.lawt");

    SUBCASE("wrong magic") {
        std::ofstream(path, std::ios::binary) << "NOPE" << std::string(8, '\0');
        CHECK_THROWS_AS(read_tensor(path), ParseError);
    }

    SUBCASE("payload length mismatch") {
        Tensor t;
        t.dims = {2, 2};
        t.data = {1, 2, 3, 4};
        write_tensor(path, t);
        std::string bytes = slurp(path);
        bytes.resize(bytes.size() - 4);  // drop one float
        std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
        CHECK_THROWS_AS(read_tensor(path), ParseError);
    }

    SUBCASE("truncated header") {
        std::ofstream(path, std::ios::binary | std::ios::trunc) << "LAWT";
        CHECK_THROWS_AS(read_tensor(path), ParseError);
    }

    SUBCASE("zero dim") {
        Tensor t;
        t.dims = {2, 2};
        t.data = {1, 2, 3, 4};
        write_tensor(path, t);
        std::string bytes = slurp(path);
        bytes[8] = 0;  // first dim -> 0
        std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
        CHECK_THROWS_AS(read_tensor(path), ParseError);
    }

    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_tensor(temp_file("does-not-exist.lawt")), ParseError);
    }
}

TEST_CASE("tensor conversions") {
    SUBCASE("feature map") {
        const FeatureMap map = smooth_test_image(3, 3, 8, 9, 2);
        const Tensor t = tensor_from_feature_map(map);
        CHECK(t.dims == std::vector<uint32_t>{3, 8, 9});
        const FeatureMap back = feature_map_from_tensor(t);
        CHECK(back.raw() == map.raw());
    }

    SUBCASE("feature map rejects wrong rank and non-finite data") {
        Tensor t;
        t.dims = {4};
        t.data = {1, 2, 3, 4};
        CHECK_THROWS_AS(feature_map_from_tensor(t), std::invalid_argument);
        Tensor bad;
        bad.dims = {1, 2, 2};
        bad.data = {1.0f, std::numeric_limits<float>::infinity(), 0.0f, 0.0f};
        CHECK_THROWS_AS(feature_map_from_tensor(bad), std::invalid_argument);
    }

    SUBCASE("displacement fields") {
        std::vector<DisplacementField> fields;
        fields.emplace_back(4, 5);
        fields.emplace_back(4, 5);
        fields[0].dx(1, 2) = 0.25;
        fields[1].dy(3, 4) = -0.75;
        const Tensor t = tensor_from_fields(fields);
        CHECK(t.dims == std::vector<uint32_t>{2, 4, 5, 2});
        const auto back = fields_from_tensor(t);
        REQUIRE(back.size() == 2);
        CHECK(back[0].dx(1, 2) == 0.25);
        CHECK(back[1].dy(3, 4) == -0.75);

        Tensor rank3 = t;
        rank3.dims = {4, 5, 2};
        rank3.data.resize(4 * 5 * 2);
        CHECK(fields_from_tensor(rank3).size() == 1);

        Tensor bad = t;
        bad.dims = {2, 4, 5, 3};
        CHECK_THROWS_AS(fields_from_tensor(bad), std::invalid_argument);
    }
}

TEST_CASE("warp spec json") {
    SUBCASE("round trip preserves every parameter exactly") {
        const WarpSpec spec = random_spec(7, 3, 4);
        const std::string text = warp_spec_to_json(spec);
        const WarpSpec back = parse_warp_spec(text);
        REQUIRE(back.channels() == spec.channels());
        REQUIRE(back.keypoints() == spec.keypoints());
        for (int c = 0; c < spec.channels(); ++c) {
            for (int i = 0; i < spec.keypoints(); ++i) {
                const KeypointWarp& a = spec.channel(c)[static_cast<size_t>(i)];
                const KeypointWarp& b = back.channel(c)[static_cast<size_t>(i)];
                CHECK(a.k.x == b.k.x);
                CHECK(a.k.y == b.k.y);
                CHECK(a.rho == b.rho);
                CHECK(a.sx == b.sx);
                CHECK(a.sy == b.sy);
                CHECK(a.theta == b.theta);
                CHECK(a.tx == b.tx);
                CHECK(a.ty == b.ty);
            }
        }
    }

    SUBCASE("parse failures") {
        CHECK_THROWS_AS(parse_warp_spec("not json"), ParseError);
        CHECK_THROWS_AS(parse_warp_spec("{}"), ParseError);
        CHECK_THROWS_AS(parse_warp_spec(R"({"channels": 2, "keypoints": [[]]})"), ParseError);
        // missing rho
        CHECK_THROWS_AS(parse_warp_spec(
                            R"({"channels": 1, "keypoints": [[{"k": [0, 0], "sx": 1,
                                "sy": 1, "theta": 0, "tx": 0, "ty": 0}]]})"),
                        ParseError);
        // invariant violations surface as parse errors too
        CHECK_THROWS_AS(parse_warp_spec(
                            R"({"channels": 1, "keypoints": [[{"k": [0, 0], "rho": -1,
                                "sx": 1, "sy": 1, "theta": 0, "tx": 0, "ty": 0}]]})"),
                        ParseError);
        CHECK_THROWS_AS(parse_warp_spec(
                            R"({"channels": 1, "keypoints": [[{"k": [0, 0], "rho": 1,
                                "sx": 0, "sy": 1, "theta": 0, "tx": 0, "ty": 0}]]})"),
                        ParseError);
    }
}

TEST_CASE("landmark files") {
    const fs::path path = temp_file("landmarks.txt");

    SUBCASE("round trip") {
        LandmarkSet set;
        set.points = {{1.5, -2.25}, {100.125, 40.5}, {0.0078125, 3.0}};
        save_landmarks(path, set);
        const LandmarkSet back = load_landmarks(path);
        REQUIRE(back.count() == 3);
        for (int i = 0; i < 3; ++i) {
            CHECK(back.points[i].x == set.points[i].x);
            CHECK(back.points[i].y == set.points[i].y);
        }
    }

    SUBCASE("parse failures") {
        std::ofstream(path, std::ios::trunc) << "3\n1 2\n3 4\n";
        CHECK_THROWS_AS(load_landmarks(path), ParseError);
        std::ofstream(path, std::ios::trunc) << "0\n";
        CHECK_THROWS_AS(load_landmarks(path), ParseError);
        std::ofstream(path, std::ios::trunc) << "hello\n";
        CHECK_THROWS_AS(load_landmarks(path), ParseError);
    }
}

TEST_CASE("png io") {
    SUBCASE("grayscale round trip quantizes once") {
        const FeatureMap map = smooth_test_image(11, 1, 12, 15, 3);
        const fs::path path = temp_file("gray.png");
        write_png(path, map);
        const FeatureMap back = read_png(path);
        REQUIRE(back.channels() == 1);
        REQUIRE(back.height() == 12);
        REQUIRE(back.width() == 15);
        for (size_t i = 0; i < map.raw().size(); ++i) {
            const float q =
                static_cast<float>(std::lround(std::clamp(map.raw()[i], 0.0f, 1.0f) * 255.0)) /
                255.0f;
            CHECK(back.raw()[i] == q);
        }
    }

    SUBCASE("rgb round trip") {
        const FeatureMap map = smooth_test_image(12, 3, 9, 9, 3);
        const fs::path path = temp_file("rgb.png");
        write_png(path, map);
        const FeatureMap back = read_png(path);
        REQUIRE(back.channels() == 3);
        for (size_t i = 0; i < map.raw().size(); ++i) {
            const float q =
                static_cast<float>(std::lround(std::clamp(map.raw()[i], 0.0f, 1.0f) * 255.0)) /
                255.0f;
            CHECK(back.raw()[i] == q);
        }
    }

    SUBCASE("writes are byte deterministic") {
        const FeatureMap map = smooth_test_image(13, 3, 21, 17, 4);
        const fs::path a = temp_file("det_a.png"), b = temp_file("det_b.png");
        write_png(a, map);
        write_png(b, map);
        CHECK(slurp(a) == slurp(b));
    }

    SUBCASE("unsupported channel counts rejected") {
        const FeatureMap map(2, 4, 4, 0.0f);
        CHECK_THROWS_AS(write_png(temp_file("bad.png"), map), std::invalid_argument);
    }

    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_png(temp_file("missing.png")), ParseError);
    }
}

TEST_CASE("flow colorization") {
    SUBCASE("zero flow renders white") {
        const DisplacementField field(6, 6);
        const FeatureMap img = colorize_flow(field, max_flow_magnitude(field));
        for (float v : img.raw()) {
            CHECK(v == 1.0f);
        }
    }

    SUBCASE("uniform flow renders a single non-white color") {
        DisplacementField field(5, 5);
        for (int r = 0; r < 5; ++r) {
            for (int c = 0; c < 5; ++c) {
                field.dx(r, c) = 0.4;
            }
        }
        const FeatureMap img = colorize_flow(field, max_flow_magnitude(field));
        for (int ch = 0; ch < 3; ++ch) {
            for (int r = 0; r < 5; ++r) {
                for (int c = 0; c < 5; ++c) {
                    CHECK(img.at(ch, r, c) == img.at(ch, 0, 0));
                }
            }
        }
        bool any_saturated = false;
        for (int ch = 0; ch < 3; ++ch) {
            any_saturated = any_saturated || img.at(ch, 0, 0) < 0.99f;
        }
        CHECK(any_saturated);
    }

    SUBCASE("rotational flow sweeps distinct hues") {
        const int n = 31;
        DisplacementField field(n, n);
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                const double y = (r - n / 2) / static_cast<double>(n);
                const double x = (c - n / 2) / static_cast<double>(n);
                field.dx(r, c) = -y;
                field.dy(r, c) = x;
            }
        }
        const FeatureMap img = colorize_flow(field, max_flow_magnitude(field));
        // sample one point per quadrant at equal radius
        const int off = n / 3;
        const int mid = n / 2;
        std::vector<std::array<float, 3>> colors;
        for (const auto [r, c] : {std::pair{mid - off, mid}, std::pair{mid + off, mid},
                                  std::pair{mid, mid - off}, std::pair{mid, mid + off}}) {
            colors.push_back({img.at(0, r, c), img.at(1, r, c), img.at(2, r, c)});
        }
        for (size_t i = 0; i < colors.size(); ++i) {
            for (size_t j = i + 1; j < colors.size(); ++j) {
                const double dist = std::abs(colors[i][0] - colors[j][0]) +
                                    std::abs(colors[i][1] - colors[j][1]) +
                                    std::abs(colors[i][2] - colors[j][2]);
                CHECK(dist > 0.2);
            }
        }
    }
}

TEST_CASE("report documents are valid json") {
    GradCheckReport grad;
    grad.steps = {1e-4, 1e-5};
    grad.tolerance = 1e-4;
    grad.max_rel_err = 3e-6;
    grad.pass = true;
    for (int i = 0; i < kParamsPerKeypoint; ++i) {
        grad.params[static_cast<size_t>(i)].param = static_cast<WarpParam>(i);
        grad.params[static_cast<size_t>(i)].max_rel_err = 1e-6;
        grad.params[static_cast<size_t>(i)].best_step = 1e-5;
    }
    const auto grad_doc = nlohmann::json::parse(gradcheck_report_to_json(grad));
    CHECK(grad_doc.at("pass").get<bool>());
    CHECK(grad_doc.at("params").size() == 8);
    CHECK(grad_doc.at("params").at(5).at("name").get<std::string>() == "theta");

    BenchReport bench;
    bench.results.push_back({WarpStrategy::GlobalAffine, 24, 1.0, 1000.0, 5.0});
    bench.results.push_back({WarpStrategy::LocalAffine, 256, 2.0, 500.0, 5.0});
    bench.results.push_back({WarpStrategy::DenseFlow, 460800, 3.0, 333.0, 5.0});
    const auto bench_doc = nlohmann::json::parse(bench_report_to_json(bench));
    CHECK(bench_doc.at("results").size() == 3);
    CHECK(bench_doc.at("results").at(2).at("strategy").get<std::string>() == "dense_flow");
    CHECK(bench_doc.at("results").at(1).at("dof").get<int64_t>() == 256);
}
