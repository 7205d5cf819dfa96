#include <catch_amalgamated.hpp>

#include <filesystem>
#include <limits>

#include <json.hpp>

#include "fedmoa/checkpoint.h"
#include "fedmoa/errors.h"

using namespace fedmoa;

namespace {

PolicyParams sample_params() {
    RngStream rng(4, 4);
    PolicyParams p = init_policy(PolicyShape{3, 5, 2}, rng);
    p.b_out(0) = -0.0;
    p.b_out(1) = std::numeric_limits<double>::denorm_min();
    p.b_in(1) = 1e300;
    return p;
}

}  // namespace

TEST_CASE("checkpoint round trip is bit exact", "[checkpoint]") {
    const PolicyParams p = sample_params();
    const std::string bytes = encode_params(p);
    const PolicyParams q = decode_params(bytes);
    CHECK(q.shape() == p.shape());
    const Eigen::VectorXd a = flatten(p), b = flatten(q);
    CHECK(std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * 8) == 0);
    CHECK(encode_params(q) == bytes);

    const auto path = std::filesystem::temp_directory_path() / "fedmoa_ckpt_test.bin";
    save_params(path, p);
    CHECK(flatten(load_params(path)) == a);
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint header", "[checkpoint]") {
    const std::string bytes = encode_params(sample_params());
    const auto nl = bytes.find('\n');
    const auto h = nlohmann::json::parse(bytes.substr(0, nl));
    CHECK(h["format"] == "fedmoa.params");
    CHECK(h["dtype"] == "float64-le");
    CHECK(h["count"] == PolicyShape{3, 5, 2}.parameter_count());
    CHECK(bytes.size() - nl - 1 == 8u * static_cast<std::size_t>(h["count"].get<long>()));
    // Little-endian payload: 1.0 is 00 .. f0 3f.
    PolicyParams one(PolicyShape{1, 4, 1});
    one.w_in(0, 0) = 1.0;
    const std::string ob = encode_params(one);
    const std::size_t at = ob.find('\n') + 1;
    CHECK(static_cast<unsigned char>(ob[at + 7]) == 0x3f);
    CHECK(static_cast<unsigned char>(ob[at + 6]) == 0xf0);
}

TEST_CASE("checkpoint schema errors", "[checkpoint]") {
    const std::string bytes = encode_params(sample_params());
    CHECK_THROWS_AS(decode_params("no newline"), SchemaError);
    CHECK_THROWS_AS(decode_params("{bad json\n"), SchemaError);
    CHECK_THROWS_AS(decode_params(bytes.substr(0, bytes.size() - 3)), SchemaError);
    CHECK_THROWS_AS(decode_params(bytes + "x"), SchemaError);
    std::string wrong = bytes;
    wrong.replace(wrong.find("fedmoa.params"), 13, "other.params!");
    CHECK_THROWS_AS(decode_params(wrong), SchemaError);
    CHECK_THROWS_AS(load_params("/nonexistent/dir/ckpt.bin"), SchemaError);
}
