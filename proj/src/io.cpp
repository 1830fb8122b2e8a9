#include "lawwarp/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lawwarp {

namespace {

constexpr char kMagic[4] = {'L', 'A', 'W', 'T'};
constexpr uint16_t kVersion = 1;
constexpr uint16_t kMaxNdim = 8;

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

uint16_t get_u16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t get_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

}  // namespace

size_t Tensor::element_count() const {
    size_t n = 1;
    for (uint32_t d : dims) {
        n *= d;
    }
    return dims.empty() ? 0 : n;
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
    if (tensor.dims.empty() || tensor.dims.size() > kMaxNdim) {
        throw std::invalid_argument("write_tensor: bad rank");
    }
    if (tensor.data.size() != tensor.element_count()) {
        throw std::invalid_argument("write_tensor: payload does not match dims");
    }
    std::string bytes;
    bytes.reserve(8 + 4 * tensor.dims.size() + 4 * tensor.data.size());
    bytes.append(kMagic, 4);
    put_u16(bytes, kVersion);
    put_u16(bytes, static_cast<uint16_t>(tensor.dims.size()));
    for (uint32_t d : tensor.dims) {
        put_u32(bytes, d);
    }
    for (float f : tensor.data) {
        put_u32(bytes, std::bit_cast<uint32_t>(f));
    }
    write_file_bytes(path, bytes);
}

Tensor read_tensor(const std::filesystem::path& path) {
    const std::string bytes = read_file_bytes(path);
    const uint8_t* p = reinterpret_cast<const uint8_t*>(bytes.data());
    if (bytes.size() < 8 || std::memcmp(p, kMagic, 4) != 0) {
        throw ParseError(path.string() + ": not a tensor file");
    }
    if (get_u16(p + 4) != kVersion) {
        throw ParseError(path.string() + ": unsupported tensor version");
    }
    const uint16_t ndim = get_u16(p + 6);
    if (ndim == 0 || ndim > kMaxNdim) {
        throw ParseError(path.string() + ": bad tensor rank");
    }
    const size_t header = 8 + 4 * static_cast<size_t>(ndim);
    if (bytes.size() < header) {
        throw ParseError(path.string() + ": truncated tensor header");
    }
    Tensor tensor;
    size_t count = 1;
    for (uint16_t i = 0; i < ndim; ++i) {
        const uint32_t d = get_u32(p + 8 + 4 * static_cast<size_t>(i));
        if (d == 0 || count > (static_cast<size_t>(1) << 40) / d) {
            throw ParseError(path.string() + ": bad tensor dims");
        }
        tensor.dims.push_back(d);
        count *= d;
    }
    if (bytes.size() != header + 4 * count) {
        throw ParseError(path.string() + ": payload length does not match dims");
    }
    tensor.data.resize(count);
    for (size_t i = 0; i < count; ++i) {
        tensor.data[i] = std::bit_cast<float>(get_u32(p + header + 4 * i));
    }
    return tensor;
}

Tensor tensor_from_feature_map(const FeatureMap& map) {
    Tensor t;
    t.dims = {static_cast<uint32_t>(map.channels()), static_cast<uint32_t>(map.height()),
              static_cast<uint32_t>(map.width())};
    t.data = map.raw();
    return t;
}

FeatureMap feature_map_from_tensor(const Tensor& tensor) {
    if (tensor.dims.size() != 3) {
        throw std::invalid_argument("feature map tensors must have rank 3 (C, H, W)");
    }
    return FeatureMap::from_data(static_cast<int>(tensor.dims[0]),
                                 static_cast<int>(tensor.dims[1]),
                                 static_cast<int>(tensor.dims[2]), tensor.data);
}

Tensor tensor_from_fields(const std::vector<DisplacementField>& fields) {
    if (fields.empty()) {
        throw std::invalid_argument("tensor_from_fields: no fields");
    }
    const int h = fields.front().height, w = fields.front().width;
    Tensor t;
    t.dims = {static_cast<uint32_t>(fields.size()), static_cast<uint32_t>(h),
              static_cast<uint32_t>(w), 2};
    t.data.reserve(fields.size() * static_cast<size_t>(h) * w * 2);
    for (const DisplacementField& f : fields) {
        if (f.height != h || f.width != w) {
            throw std::invalid_argument("tensor_from_fields: inconsistent field sizes");
        }
        for (double v : f.data) {
            t.data.push_back(static_cast<float>(v));
        }
    }
    return t;
}

std::vector<DisplacementField> fields_from_tensor(const Tensor& tensor) {
    size_t channels = 1;
    size_t off = 0;
    if (tensor.dims.size() == 4) {
        channels = tensor.dims[0];
        off = 1;
    } else if (tensor.dims.size() != 3) {
        throw std::invalid_argument("field tensors must have rank 3 (H,W,2) or 4 (C,H,W,2)");
    }
    if (tensor.dims.back() != 2) {
        throw std::invalid_argument("field tensors must have a trailing dimension of 2");
    }
    const int h = static_cast<int>(tensor.dims[off]);
    const int w = static_cast<int>(tensor.dims[off + 1]);
    std::vector<DisplacementField> fields;
    size_t idx = 0;
    for (size_t c = 0; c < channels; ++c) {
        DisplacementField f(h, w);
        for (double& v : f.data) {
            const float s = tensor.data[idx++];
            if (!std::isfinite(s)) {
                throw std::invalid_argument("field tensor contains non-finite values");
            }
            v = s;
        }
        fields.push_back(std::move(f));
    }
    return fields;
}

// ---------------------------------------------------------------------------

using nlohmann::json;

namespace {

double require_double(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw ParseError(std::string("warp spec: missing numeric field '") + key + "'");
    }
    return j.at(key).get<double>();
}

}  // namespace

WarpSpec parse_warp_spec(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("warp spec: ") + e.what());
    }
    if (!j.is_object() || !j.contains("channels") || !j.contains("keypoints")) {
        throw ParseError("warp spec: expected an object with 'channels' and 'keypoints'");
    }
    if (!j.at("channels").is_number_integer()) {
        throw ParseError("warp spec: 'channels' must be an integer");
    }
    const int channels = j.at("channels").get<int>();
    const json& kp = j.at("keypoints");
    if (!kp.is_array() || static_cast<int>(kp.size()) != channels) {
        throw ParseError("warp spec: 'keypoints' must be an array of length 'channels'");
    }
    std::vector<std::vector<KeypointWarp>> per_channel;
    per_channel.reserve(kp.size());
    for (const json& channel : kp) {
        if (!channel.is_array()) {
            throw ParseError("warp spec: each channel must be an array of keypoints");
        }
        std::vector<KeypointWarp> kws;
        kws.reserve(channel.size());
        for (const json& entry : channel) {
            if (!entry.is_object() || !entry.contains("k") || !entry.at("k").is_array() ||
                entry.at("k").size() != 2) {
                throw ParseError("warp spec: each keypoint needs a 2-element 'k'");
            }
            KeypointWarp kw;
            kw.k.x = entry.at("k").at(0).get<double>();
            kw.k.y = entry.at("k").at(1).get<double>();
            kw.rho = require_double(entry, "rho");
            kw.sx = require_double(entry, "sx");
            kw.sy = require_double(entry, "sy");
            kw.theta = require_double(entry, "theta");
            kw.tx = require_double(entry, "tx");
            kw.ty = require_double(entry, "ty");
            kws.push_back(kw);
        }
        per_channel.push_back(std::move(kws));
    }
    try {
        return WarpSpec(std::move(per_channel));
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("warp spec: ") + e.what());
    }
}

WarpSpec load_warp_spec(const std::filesystem::path& path) {
    return parse_warp_spec(read_file_bytes(path));
}

std::string warp_spec_to_json(const WarpSpec& spec) {
    json channels = json::array();
    for (int c = 0; c < spec.channels(); ++c) {
        json channel = json::array();
        for (const KeypointWarp& kw : spec.channel(c)) {
            channel.push_back(json{{"k", {kw.k.x, kw.k.y}},
                                   {"rho", kw.rho},
                                   {"sx", kw.sx},
                                   {"sy", kw.sy},
                                   {"theta", kw.theta},
                                   {"tx", kw.tx},
                                   {"ty", kw.ty}});
        }
        channels.push_back(std::move(channel));
    }
    const json doc{{"channels", spec.channels()}, {"keypoints", std::move(channels)}};
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

LandmarkSet load_landmarks(const std::filesystem::path& path) {
    std::istringstream in(read_file_bytes(path));
    int count = 0;
    if (!(in >> count) || count < 1) {
        throw ParseError(path.string() + ": expected a positive landmark count");
    }
    LandmarkSet set;
    set.points.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        double x = 0.0, y = 0.0;
        if (!(in >> x >> y)) {
            throw ParseError(path.string() + ": expected " + std::to_string(count) +
                             " coordinate pairs");
        }
        if (!std::isfinite(x) || !std::isfinite(y)) {
            throw ParseError(path.string() + ": non-finite landmark");
        }
        set.points.push_back({x, y});
    }
    return set;
}

void save_landmarks(const std::filesystem::path& path, const LandmarkSet& landmarks) {
    std::ostringstream out;
    out << landmarks.count() << "\n";
    out.precision(17);
    for (const Point2& p : landmarks.points) {
        out << p.x << " " << p.y << "\n";
    }
    write_file_bytes(path, out.str());
}

// ---------------------------------------------------------------------------

std::string gradcheck_report_to_json(const GradCheckReport& report) {
    json params = json::array();
    for (const auto& stat : report.params) {
        params.push_back(json{{"name", warp_param_name(stat.param)},
                              {"max_rel_err", stat.max_rel_err},
                              {"best_step", stat.best_step},
                              {"max_abs_grad", stat.max_abs_grad}});
    }
    const json doc{{"pass", report.pass},
                   {"tolerance", report.tolerance},
                   {"max_rel_err", report.max_rel_err},
                   {"steps", report.steps},
                   {"params", std::move(params)}};
    return doc.dump(2) + "\n";
}

namespace {

json timings_to_json(const std::vector<StrategyTiming>& timings) {
    json results = json::array();
    for (const StrategyTiming& t : timings) {
        results.push_back(json{{"strategy", strategy_name(t.strategy)},
                               {"dof", t.dof},
                               {"ms_median", t.ms_median},
                               {"fps_median", t.fps_median},
                               {"fps_iqr", t.fps_iqr}});
    }
    return results;
}

}  // namespace

std::string bench_report_to_json(const BenchReport& report) {
    json doc{{"grid", {report.config.height, report.config.width}},
             {"channels", report.config.channels},
             {"keypoints", report.config.keypoints},
             {"coarse_factor", report.config.coarse_factor},
             {"repetitions", report.config.repetitions},
             {"warmups", report.config.warmups},
             {"parallel", report.config.parallel},
             {"ordering_matches_reference", report.ordering_matches_reference},
             {"results", timings_to_json(report.results)}};
    if (!report.parallel_results.empty()) {
        doc["results_parallel"] = timings_to_json(report.parallel_results);
    }
    return doc.dump(2) + "\n";
}

}  // namespace lawwarp
