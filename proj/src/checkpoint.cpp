#include "green/predictor.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace green {

using nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;

void write_le(std::ostream& out, const Eigen::VectorXd& v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        auto bits = std::bit_cast<std::uint64_t>(v[i]);
        unsigned char bytes[8];
        for (int b = 0; b < 8; ++b)
            bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
        out.write(reinterpret_cast<const char*>(bytes), 8);
    }
}

Eigen::VectorXd read_le(std::istream& in, std::size_t n)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char*>(bytes), 8))
            throw InputError("checkpoint payload is truncated");
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
        v[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(bits);
    }
    return v;
}

} // namespace

// Layout: one JSON header line, then little-endian doubles: theta, input_shift, input_scale.
void write_checkpoint(std::ostream& out, const PredictorParams& params)
{
    params.validate();
    json widths = json::object();
    for (std::size_t g = 0; g < kFeatureGroups; ++g)
        widths[std::string(kFeatureGroupNames[g])] = params.feature_widths[g];
    json header = {{"format", "gpred"},
                   {"version", kCheckpointVersion},
                   {"layer_spec", params.layer_spec},
                   {"input_width", params.input_width},
                   {"seed", params.seed},
                   {"max_epoch", params.max_epoch},
                   {"feature_widths", widths},
                   {"n_params", params.theta.size()},
                   {"payload", {"theta", "input_shift", "input_scale"}}};
    out << header.dump() << '\n';
    write_le(out, params.theta);
    write_le(out, params.input_shift);
    write_le(out, params.input_scale);
}

PredictorParams read_checkpoint(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw InputError("checkpoint is empty");
    json h;
    try {
        h = json::parse(line);
        if (h.at("format") != "gpred" || h.at("version") != kCheckpointVersion)
            throw InputError("not a version 1 gpred checkpoint");
        PredictorParams p;
        p.layer_spec = h.at("layer_spec").get<std::vector<int>>();
        p.input_width = h.at("input_width").get<int>();
        p.seed = h.at("seed").get<std::uint64_t>();
        p.max_epoch = h.at("max_epoch").get<int>();
        for (std::size_t g = 0; g < kFeatureGroups; ++g)
            p.feature_widths[g] = h.at("feature_widths").at(std::string(kFeatureGroupNames[g])).get<std::size_t>();
        const auto n = h.at("n_params").get<std::size_t>();
        if (n != green::parameter_count(p.layer_spec))
            throw InputError("checkpoint parameter count does not match its layer_spec");
        p.theta = read_le(in, n);
        p.input_shift = read_le(in, static_cast<std::size_t>(p.input_width));
        p.input_scale = read_le(in, static_cast<std::size_t>(p.input_width));
        if (in.peek() != std::char_traits<char>::eof())
            throw InputError("checkpoint has trailing bytes");
        p.validate();
        return p;
    }
    catch (const json::exception& e) {
        throw InputError(std::string("malformed checkpoint header: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const PredictorParams& params)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write checkpoint '" + path.string() + "'");
    write_checkpoint(out, params);
}

PredictorParams load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open checkpoint '" + path.string() + "'");
    return read_checkpoint(in);
}

} // namespace green
