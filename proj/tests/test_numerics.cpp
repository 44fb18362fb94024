#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "streamforge/errors.hpp"
#include "streamforge/linalg.hpp"
#include "streamforge/ltv.hpp"
#include "streamforge/rng.hpp"

using namespace streamforge;

static Mat random_spd(std::size_t n, Rng& rng) {
    Mat a(n, n);
    for (auto& v : a.a) v = rng.normal();
    Mat s = transpose(a) * a;
    for (std::size_t i = 0; i < n; ++i) s(i, i) += 0.5;
    return s;
}

TEST_CASE("jacobi eigendecomposition reconstructs the matrix") {
    Rng rng(7);
    for (std::size_t n : {2u, 5u, 17u}) {
        const Mat s = random_spd(n, rng);
        const Eigh e = jacobi_eigh(s);
        Mat rec(n, n);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) rec(i, j) += e.w[k] * e.v(i, k) * e.v(j, k);
        CHECK(max_abs(rec - s) < 1e-9 * std::max(1.0, max_abs(s)));
        for (std::size_t k = 1; k < n; ++k) CHECK(e.w[k] >= e.w[k - 1]);
    }
}

TEST_CASE("sym_sqrt squares back to the input on random SPD fixtures") {
    Rng rng(13);
    for (int rep = 0; rep < 5; ++rep) {
        const Mat s = random_spd(8, rng);
        const Mat r = sym_sqrt(s);
        CHECK(max_abs(r * r - s) < 1e-8 * std::max(1.0, max_abs(s)));
    }
}

TEST_CASE("cholesky factors and solves SPD systems") {
    Rng rng(21);
    const Mat s = random_spd(6, rng);
    const Mat l = cholesky(s);
    CHECK(max_abs(l * transpose(l) - s) < 1e-10 * max_abs(s));

    Mat b(6, 2);
    for (auto& v : b.a) v = rng.normal();
    const Mat x = cholesky_solve(s, b);
    CHECK(max_abs(s * x - b) < 1e-9);

    Mat not_spd(2, 2);
    not_spd(0, 0) = 1.0;
    not_spd(1, 1) = -1.0;
    CHECK_THROWS_AS(cholesky(not_spd), ConfigError);
}

TEST_CASE("rng substreams are deterministic and independent of call order") {
    Rng a = Rng::substream(42, "stream", 3);
    Rng b = Rng::substream(42, "stream", 3);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c = Rng::substream(42, "stream", 4);
    CHECK(Rng::substream(42, "stream", 3).next_u64() != c.next_u64());
}

TEST_CASE("rng normal moments are sane") {
    Rng rng(5);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        s += x;
        s2 += x * x;
    }
    CHECK(std::fabs(s / n) < 0.01);
    CHECK(std::fabs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("ltv round-trips tensors and rejects corrupted magic") {
    const std::string dir = std::filesystem::temp_directory_path().string() + "/sf_ltv_test";
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/t.ltv";

    Mat m(3, 4);
    Rng rng(9);
    for (auto& v : m.a) v = rng.normal();
    ltv_write(path, ltv_from_mat(m));
    const Mat back = mat_from_ltv(ltv_read(path));
    REQUIRE(back.rows == 3);
    REQUIRE(back.cols == 4);
    for (std::size_t i = 0; i < m.a.size(); ++i)
        CHECK(back.a[i] == doctest::Approx(m.a[i]).epsilon(1e-6));

    // corrupt the magic
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.put('X');
    }
    CHECK_THROWS(ltv_read(path));
    std::filesystem::remove_all(dir);
}

TEST_CASE("ltv dumps are byte-identical across writes") {
    const std::string dir = std::filesystem::temp_directory_path().string() + "/sf_ltv_test2";
    std::filesystem::create_directories(dir);
    Vec v(100);
    Rng rng(11);
    for (auto& x : v) x = rng.normal();
    ltv_write(dir + "/a.ltv", ltv_from_vec(v));
    ltv_write(dir + "/b.ltv", ltv_from_vec(v));
    std::ifstream fa(dir + "/a.ltv", std::ios::binary), fb(dir + "/b.ltv", std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    std::filesystem::remove_all(dir);
}
