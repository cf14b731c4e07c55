#include "fft.hpp"

#include "mpyro/errors.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace mpyro::detail {

namespace {

struct PlanCache {
    std::mutex mutex;
    std::map<std::tuple<int, int, bool>, fftw_plan> plans;

    ~PlanCache() {
        for (auto& [key, plan] : plans)
            fftw_destroy_plan(plan);
    }
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

fftw_plan plan_for(int width, int height, bool inverse) {
    auto& c = cache();
    std::lock_guard lock(c.mutex);
    const auto key = std::make_tuple(width, height, inverse);
    if (auto it = c.plans.find(key); it != c.plans.end())
        return it->second;
    // Planning with FFTW_ESTIMATE never touches the arrays; a scratch buffer
    // only fixes the in-place layout.
    std::vector<Complex> scratch(static_cast<std::size_t>(width) * height);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(height, width, p, p, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr)
        throw Error("FFTW planning failed");
    c.plans.emplace(key, plan);
    return plan;
}

} // namespace

void fft2d(std::vector<Complex>& data, int width, int height, bool inverse) {
    if (data.size() != static_cast<std::size_t>(width) * height)
        throw ArgumentError("fft2d: buffer size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan_for(width, height, inverse), p, p);
}

} // namespace mpyro::detail
