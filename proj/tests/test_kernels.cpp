#include <doctest.h>

#include <cmath>

#include "splitforge/kernels.hpp"
#include "splitforge/rng.hpp"
#include "test_helpers.hpp"

using namespace splitforge;

namespace {

double rel_err(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1.0});
    return std::abs(a - b) / scale;
}

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar dot and l2sqr basics") {
    const double a[] = {1.0, 2.0, 3.0};
    const double b[] = {4.0, -5.0, 6.0};
    CHECK(kernels::scalar::dot(a, b, 3) == doctest::Approx(12.0));
    CHECK(kernels::scalar::l2sqr(a, b, 3) == doctest::Approx(9.0 + 49.0 + 9.0));
    double y[] = {1.0, 1.0, 1.0};
    kernels::scalar::axpy(2.0, a, y, 3);
    CHECK(y[0] == doctest::Approx(3.0));
    CHECK(y[2] == doctest::Approx(7.0));
}

TEST_CASE("dispatched kernels match scalar reference across sizes") {
    Rng rng(42);
    // odd sizes exercise every tail path of the vector variants
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 100u, 1024u,
                          1027u}) {
        auto a = testutil::random_vector(rng, n, -10.0, 10.0);
        auto b = testutil::random_vector(rng, n, -10.0, 10.0);
        CHECK(rel_err(kernels::dot(a.data(), b.data(), n),
                      kernels::scalar::dot(a.data(), b.data(), n)) < 1e-13);
        CHECK(rel_err(kernels::l2sqr(a.data(), b.data(), n),
                      kernels::scalar::l2sqr(a.data(), b.data(), n)) < 1e-13);
        auto y1 = testutil::random_vector(rng, n);
        auto y2 = y1;
        kernels::axpy(0.37, a.data(), y1.data(), n);
        kernels::scalar::axpy(0.37, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(y1[i], y2[i]) < 1e-13);
    }
}

#if defined(SPLITFORGE_HAVE_AVX2)
TEST_CASE("avx2 kernels equivalent to scalar when available") {
    if (!kernels::set_backend("avx2")) return; // cpu without avx2
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.next_below(300);
        auto a = testutil::random_vector(rng, n, -5.0, 5.0);
        auto b = testutil::random_vector(rng, n, -5.0, 5.0);
        CHECK(rel_err(kernels::avx2::dot(a.data(), b.data(), n),
                      kernels::scalar::dot(a.data(), b.data(), n)) < 1e-13);
        CHECK(rel_err(kernels::avx2::l2sqr(a.data(), b.data(), n),
                      kernels::scalar::l2sqr(a.data(), b.data(), n)) < 1e-13);
    }
    kernels::set_backend("scalar");
    CHECK(kernels::backend_name() == "scalar");
    REQUIRE(kernels::set_backend("avx2"));
}
#endif

TEST_CASE("backend selection reports a name") {
    CHECK(!kernels::backend_name().empty());
    CHECK_FALSE(kernels::set_backend("no-such-backend"));
}

TEST_CASE("rng streams are deterministic and independent of derivation order") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

TEST_CASE("rng uniform and normal sanity") {
    Rng rng(99);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(sum / 10000.0 == doctest::Approx(0.5).epsilon(0.05));
    double mean = 0.0, sq = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double z = rng.next_normal();
        mean += z;
        sq += z * z;
    }
    mean /= 10000.0;
    CHECK(mean == doctest::Approx(0.0).epsilon(1.0).scale(0.05));
    CHECK(sq / 10000.0 == doctest::Approx(1.0).epsilon(0.05));
}

} // TEST_SUITE
