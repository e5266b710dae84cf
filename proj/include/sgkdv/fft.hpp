#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>

namespace sgkdv {
namespace fft {

// Process-wide cache of FFTW plans, one forward/backward pair per transform
// size. Plans are created with FFTW_ESTIMATE so plan selection is
// deterministic across runs, and FFTW_UNALIGNED so the same plan can execute
// on any caller-provided buffer via the new-array interface (which is the
// thread-safe way to share plans between workers).
class Plans {
public:
    static void forward(std::span<const std::complex<double>> in,
                        std::span<std::complex<double>> out) {
        execute(plan_pair(static_cast<int>(in.size())).fwd, in.data(), out.data());
    }

    static void backward(std::span<const std::complex<double>> in,
                         std::span<std::complex<double>> out) {
        execute(plan_pair(static_cast<int>(in.size())).bwd, in.data(), out.data());
    }

private:
    struct Pair {
        fftw_plan fwd = nullptr;
        fftw_plan bwd = nullptr;
    };

    static void execute(fftw_plan p, const std::complex<double>* in, std::complex<double>* out) {
        fftw_execute_dft(p,
                         reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }

    static const Pair& plan_pair(int n) {
        static std::mutex mu;
        static std::map<int, Pair> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(n);
        if (it == cache.end()) {
            // Plans are out-of-place; callers must pass distinct buffers.
            fftw_complex* a = fftw_alloc_complex(static_cast<size_t>(n));
            fftw_complex* b = fftw_alloc_complex(static_cast<size_t>(n));
            Pair p;
            p.fwd = fftw_plan_dft_1d(n, a, b, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
            p.bwd = fftw_plan_dft_1d(n, a, b, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
            fftw_free(a);
            fftw_free(b);
            it = cache.emplace(n, p).first;
        }
        return it->second;
    }
};

}  // namespace fft
}  // namespace sgkdv
