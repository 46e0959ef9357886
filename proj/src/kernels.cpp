#include "splitforge/kernels.hpp"

#include <cstdlib>

namespace splitforge::kernels {

namespace {

struct Backend {
    std::string name;
    double (*dot)(const double*, const double*, std::size_t);
    double (*l2sqr)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
};

const Backend kScalar{"scalar", &scalar::dot, &scalar::l2sqr, &scalar::axpy};

#if defined(SPLITFORGE_HAVE_AVX2)
const Backend kAvx2{"avx2", &avx2::dot, &avx2::l2sqr, &avx2::axpy};

bool cpu_has_avx2() {
#if defined(__GNUC__) || defined(__clang__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}
#endif

#if defined(SPLITFORGE_HAVE_NEON)
// NEON is baseline on aarch64
const Backend kNeon{"neon", &neon::dot, &neon::l2sqr, &neon::axpy};
#endif

const Backend* pick_default() {
    if (const char* env = std::getenv("SPLITFORGE_KERNELS")) {
        std::string want(env);
#if defined(SPLITFORGE_HAVE_AVX2)
        if (want == "avx2" && cpu_has_avx2()) return &kAvx2;
#endif
#if defined(SPLITFORGE_HAVE_NEON)
        if (want == "neon") return &kNeon;
#endif
        if (want == "scalar") return &kScalar;
        // unknown or unavailable request falls through to auto-detect
    }
#if defined(SPLITFORGE_HAVE_AVX2)
    if (cpu_has_avx2()) return &kAvx2;
#endif
#if defined(SPLITFORGE_HAVE_NEON)
    return &kNeon;
#else
    return &kScalar;
#endif
}

const Backend*& active() {
    static const Backend* backend = pick_default();
    return backend;
}

} // namespace

double dot(const double* a, const double* b, std::size_t n) {
    return active()->dot(a, b, n);
}

double l2sqr(const double* a, const double* b, std::size_t n) {
    return active()->l2sqr(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active()->axpy(alpha, x, y, n);
}

bool set_backend(const std::string& name) {
    if (name == "scalar") {
        active() = &kScalar;
        return true;
    }
#if defined(SPLITFORGE_HAVE_AVX2)
    if (name == "avx2" && cpu_has_avx2()) {
        active() = &kAvx2;
        return true;
    }
#endif
#if defined(SPLITFORGE_HAVE_NEON)
    if (name == "neon") {
        active() = &kNeon;
        return true;
    }
#endif
    return false;
}

const std::string& backend_name() {
    return active()->name;
}

} // namespace splitforge::kernels
