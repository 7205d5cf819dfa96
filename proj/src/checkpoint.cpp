#include "fedmoa/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fedmoa/errors.h"

namespace fedmoa {

namespace {

std::uint64_t to_little_endian(std::uint64_t x) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t y = 0;
        for (int i = 0; i < 8; ++i) {
            y = (y << 8) | ((x >> (8 * i)) & 0xffU);
        }
        return y;
    }
    return x;
}

}  // namespace

std::string encode_params(const PolicyParams& params) {
    const PolicyShape s = params.shape();
    const Eigen::VectorXd flat = flatten(params);
    nlohmann::ordered_json header = {
        {"format", "fedmoa.params"},
        {"version", 1},
        {"dtype", "float64-le"},
        {"layout", {"w_in", "b_in", "w_out", "b_out"}},
        {"order", "row-major"},
        {"feature_dim", s.feature_dim},
        {"vocab_size", s.vocab_size},
        {"hidden_dim", s.hidden_dim},
        {"count", flat.size()},
    };
    std::string out = header.dump();
    out += '\n';
    const std::size_t start = out.size();
    out.resize(start + static_cast<std::size_t>(flat.size()) * 8);
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
        const std::uint64_t word = to_little_endian(std::bit_cast<std::uint64_t>(flat(i)));
        std::memcpy(out.data() + start + static_cast<std::size_t>(i) * 8, &word, 8);
    }
    return out;
}

PolicyParams decode_params(const std::string& bytes) {
    const auto nl = bytes.find('\n');
    if (nl == std::string::npos) {
        throw SchemaError("checkpoint: missing header line");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(0, nl));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("checkpoint: bad header: ") + e.what());
    }
    if (header.value("format", "") != "fedmoa.params" || header.value("dtype", "") != "float64-le") {
        throw SchemaError("checkpoint: unsupported format");
    }
    PolicyShape s;
    s.feature_dim = header.at("feature_dim").get<int>();
    s.vocab_size = header.at("vocab_size").get<int>();
    s.hidden_dim = header.at("hidden_dim").get<int>();
    const auto count = header.at("count").get<std::int64_t>();
    if (count != s.parameter_count()) {
        throw SchemaError("checkpoint: count does not match shape");
    }
    const std::size_t payload = bytes.size() - nl - 1;
    if (payload != static_cast<std::size_t>(count) * 8) {
        throw SchemaError("checkpoint: payload is " + std::to_string(payload) + " bytes, expected " +
                          std::to_string(count * 8));
    }
    Eigen::VectorXd flat(count);
    for (std::int64_t i = 0; i < count; ++i) {
        std::uint64_t word = 0;
        std::memcpy(&word, bytes.data() + nl + 1 + static_cast<std::size_t>(i) * 8, 8);
        flat(i) = std::bit_cast<double>(to_little_endian(word));
    }
    return unflatten(s, flat);
}

void save_params(const std::filesystem::path& path, const PolicyParams& params) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw SchemaError("cannot write checkpoint " + path.string());
    const std::string bytes = encode_params(params);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

PolicyParams load_params(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SchemaError("cannot read checkpoint " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return decode_params(ss.str());
}

}  // namespace fedmoa
