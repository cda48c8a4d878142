#include <atomic>
#include <cstdlib>
#include <string>

#include "irisgate/error.hpp"
#include "irisgate/hamming_kernels.hpp"

namespace irisgate::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(IRISGATE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("popcnt");
#else
    return false;
#endif
}

Backend initial_backend() {
    if (const char* env = std::getenv("IRISGATE_KERNEL"); env && std::string(env) == "scalar")
        return Backend::Scalar;
    return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() {
    static std::atomic<Backend> b{initial_backend()};
    return b;
}

}  // namespace

std::string_view to_string(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

bool available(Backend b) { return b == Backend::Scalar || cpu_has_avx2(); }

Backend active() { return current().load(std::memory_order_relaxed); }

void select(Backend b) {
    if (!available(b)) throw Error(ErrorKind::InvalidInput, "kernel backend unavailable: " + std::string(to_string(b)));
    current().store(b);
}

MaskedXorFn function(Backend b) {
#if defined(IRISGATE_HAVE_AVX2)
    if (b == Backend::Avx2) return &masked_xor_avx2;
#else
    (void)b;
#endif
    return &masked_xor_scalar;
}

}  // namespace irisgate::kernels
