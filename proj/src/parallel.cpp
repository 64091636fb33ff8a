#include "slq/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slq {

namespace {

int g_thread_limit = 0;

int default_threads() {
#ifdef _OPENMP
    return std::max(1, omp_get_num_procs());
#else
    return std::max(1u, std::thread::hardware_concurrency());
#endif
}

}  // namespace

void set_thread_limit(int threads) { g_thread_limit = std::max(0, threads); }

int thread_limit() { return g_thread_limit > 0 ? g_thread_limit : default_threads(); }

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body) {
    if (count == 0) return;
    const auto workers = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(thread_limit()), count));
    if (workers <= 1) {
        body(0, count);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    const auto chunks = static_cast<long>(workers);
#ifdef _OPENMP
#pragma omp parallel for schedule(static, 1) num_threads(static_cast<int>(workers))
#endif
    for (long c = 0; c < chunks; ++c) {
        const auto idx = static_cast<std::size_t>(c);
        const std::size_t begin = count * idx / workers;
        const std::size_t end = count * (idx + 1) / workers;
        try {
            body(begin, end);
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace slq
