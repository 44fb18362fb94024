#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "streamforge/linalg.hpp"

namespace streamforge {

// "LTv1" tensor dump: magic "LTLT", u32 version=1, u32 rank, u32 dims[rank],
// then little-endian float32 payload in row-major order.
struct LtvTensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

void ltv_write(const std::string& path, const LtvTensor& t);
LtvTensor ltv_read(const std::string& path);

LtvTensor ltv_from_mat(const Mat& m);
LtvTensor ltv_from_vec(const Vec& v);

// rank-3 helper: outer x rows x cols
LtvTensor ltv_from_mats(const std::vector<Mat>& ms);

Mat mat_from_ltv(const LtvTensor& t);
Vec vec_from_ltv(const LtvTensor& t);
std::vector<Mat> mats_from_ltv(const LtvTensor& t);

}  // namespace streamforge
