#include "streamforge/ltv.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace streamforge {

static_assert(std::endian::native == std::endian::little,
              "LTv1 writer assumes a little-endian host");
static_assert(sizeof(float) == 4);

static const char kMagic[4] = {'L', 'T', 'L', 'T'};

void ltv_write(const std::string& path, const LtvTensor& t) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("ltv_write: cannot open " + path);
    f.write(kMagic, 4);
    const std::uint32_t version = 1;
    const std::uint32_t rank = static_cast<std::uint32_t>(t.dims.size());
    f.write(reinterpret_cast<const char*>(&version), 4);
    f.write(reinterpret_cast<const char*>(&rank), 4);
    for (std::uint32_t d : t.dims) f.write(reinterpret_cast<const char*>(&d), 4);
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!f) throw std::runtime_error("ltv_write: write failed for " + path);
}

LtvTensor ltv_read(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("ltv_read: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("ltv_read: bad magic bytes in " + path);
    std::uint32_t version = 0, rank = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&rank), 4);
    if (!f || version != 1) throw std::runtime_error("ltv_read: unsupported version in " + path);
    if (rank > 8) throw std::runtime_error("ltv_read: implausible rank in " + path);
    LtvTensor t;
    t.dims.resize(rank);
    for (auto& d : t.dims) f.read(reinterpret_cast<char*>(&d), 4);
    if (!f) throw std::runtime_error("ltv_read: truncated header in " + path);
    t.data.resize(t.element_count());
    f.read(reinterpret_cast<char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!f) throw std::runtime_error("ltv_read: truncated payload in " + path);
    return t;
}

LtvTensor ltv_from_mat(const Mat& m) {
    LtvTensor t;
    t.dims = {static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)};
    t.data.reserve(m.a.size());
    for (double v : m.a) t.data.push_back(static_cast<float>(v));
    return t;
}

LtvTensor ltv_from_vec(const Vec& v) {
    LtvTensor t;
    t.dims = {static_cast<std::uint32_t>(v.size())};
    t.data.reserve(v.size());
    for (double x : v) t.data.push_back(static_cast<float>(x));
    return t;
}

LtvTensor ltv_from_mats(const std::vector<Mat>& ms) {
    if (ms.empty()) throw std::invalid_argument("ltv_from_mats: empty list");
    LtvTensor t;
    t.dims = {static_cast<std::uint32_t>(ms.size()), static_cast<std::uint32_t>(ms[0].rows),
              static_cast<std::uint32_t>(ms[0].cols)};
    t.data.reserve(ms.size() * ms[0].a.size());
    for (const Mat& m : ms) {
        if (m.rows != ms[0].rows || m.cols != ms[0].cols)
            throw std::invalid_argument("ltv_from_mats: ragged shapes");
        for (double v : m.a) t.data.push_back(static_cast<float>(v));
    }
    return t;
}

Mat mat_from_ltv(const LtvTensor& t) {
    if (t.dims.size() != 2) throw std::runtime_error("mat_from_ltv: expected rank-2 tensor");
    Mat m(t.dims[0], t.dims[1]);
    for (std::size_t i = 0; i < t.data.size(); ++i) m.a[i] = t.data[i];
    return m;
}

Vec vec_from_ltv(const LtvTensor& t) {
    if (t.dims.size() != 1) throw std::runtime_error("vec_from_ltv: expected rank-1 tensor");
    Vec v(t.data.begin(), t.data.end());
    return v;
}

std::vector<Mat> mats_from_ltv(const LtvTensor& t) {
    if (t.dims.size() != 3) throw std::runtime_error("mats_from_ltv: expected rank-3 tensor");
    std::vector<Mat> ms(t.dims[0], Mat(t.dims[1], t.dims[2]));
    std::size_t idx = 0;
    for (auto& m : ms)
        for (auto& v : m.a) v = t.data[idx++];
    return ms;
}

}  // namespace streamforge
