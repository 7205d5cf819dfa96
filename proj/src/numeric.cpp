#include "fedmoa/numeric.h"

#include <limits>
#include <numbers>
#include <string>

namespace fedmoa {

double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr0) {
    if (total_steps < 1) {
        throw InvalidInput("cosine_lr: total_steps must be >= 1");
    }
    if (step < 0 || step > total_steps) {
        throw InvalidInput("cosine_lr: step " + std::to_string(step) + " outside [0, " +
                           std::to_string(total_steps) + "]");
    }
    if (!(lr0 > 0.0)) {
        throw InvalidInput("cosine_lr: lr0 must be positive");
    }
    if (step == total_steps) {
        return 0.0;
    }
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t stream_id_for(std::uint64_t client_id, std::uint64_t round) {
    return mix64(mix64(client_id) ^ (round + 0x632be59bd9b4e019ULL));
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(mix64(seed ^ mix64(stream_id))) {}

double RngStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t n) {
    if (n == 0) {
        throw InvalidInput("RngStream::below: n must be >= 1");
    }
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return x % n;
}

Eigen::Index RngStream::categorical(const Eigen::Ref<const Vec<double>>& probs) {
    const double u = uniform();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        acc += probs(i);
        if (u < acc) {
            return i;
        }
    }
    // u landed in the rounding gap above the cumulative sum.
    for (Eigen::Index i = probs.size() - 1; i >= 0; --i) {
        if (probs(i) > 0.0) {
            return i;
        }
    }
    return probs.size() - 1;
}

}  // namespace fedmoa
