#pragma once

#include <cstddef>
#include <string>

namespace splitforge::kernels {

// Data-parallel inner loops used by embedding_ops and probe. The dispatched
// entry points select the widest backend the CPU supports at first use; the
// scalar versions are the reference semantics all variants must match.
//
// Within one process the selected backend is fixed, so repeated runs of the
// same config produce identical floating-point results.

double dot(const double* a, const double* b, std::size_t n);
double l2sqr(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);

// Force of a specific backend (tests, SPLITFORGE_KERNELS env override).
// Returns false if the backend is unavailable on this CPU/build.
bool set_backend(const std::string& name);
const std::string& backend_name();

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double l2sqr(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
} // namespace scalar

#if defined(SPLITFORGE_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double l2sqr(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
} // namespace avx2
#endif

#if defined(SPLITFORGE_HAVE_NEON)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double l2sqr(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
} // namespace neon
#endif

} // namespace splitforge::kernels
