#ifndef FEDMOA_CHECKPOINT_H
#define FEDMOA_CHECKPOINT_H

#include <filesystem>
#include <string>

#include "fedmoa/policy.h"

namespace fedmoa {

// Parameter snapshot file:
//   line 1: JSON shape header terminated by '\n'
//           {"format":"fedmoa.params","version":1,"dtype":"float64-le",
//            "layout":["w_in","b_in","w_out","b_out"],"order":"row-major",
//            "feature_dim":F,"vocab_size":V,"hidden_dim":H,"count":N}
//   rest:   N little-endian IEEE-754 doubles in flatten() order
std::string encode_params(const PolicyParams& params);
PolicyParams decode_params(const std::string& bytes);

void save_params(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams load_params(const std::filesystem::path& path);

}  // namespace fedmoa

#endif  // FEDMOA_CHECKPOINT_H
