#include "fkpath/estimate.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "fkpath/errors.hpp"

namespace fkpath {

std::size_t BatchLayout::batch_size(std::size_t batch) const {
    const std::size_t base = n_samples / n_batches;
    return base + (batch < n_samples % n_batches ? 1 : 0);
}

unsigned default_worker_count() {
    if (const char* env = std::getenv("FKPATH_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

struct BatchReducer {
    static std::vector<EstimateResult> reduce(const BatchLayout& layout, std::size_t n_outputs,
                                              const std::vector<BatchAccumulator>& batches) {
        std::vector<EstimateResult> out(n_outputs);
        const double n_b = static_cast<double>(layout.n_batches);
        for (std::size_t k = 0; k < n_outputs; ++k) {
            EstimateResult& r = out[k];
            r.n_samples = layout.n_samples;
            r.seed = layout.seed;
            r.n_batches = layout.n_batches;
            double total = 0.0;
            double total_sq = 0.0;
            for (const auto& b : batches) {
                total += b.sums_[k];
                total_sq += b.sums_sq_[k];
                r.min_path_weight = std::min(r.min_path_weight, b.min_weight_);
                r.max_path_weight = std::max(r.max_path_weight, b.max_weight_);
                r.quadrature_warnings += b.warnings_;
                r.formal = r.formal || b.formal_;
            }
            const double n = static_cast<double>(layout.n_samples);
            r.mean = total / n;
            if (layout.n_batches >= 2) {
                double ss = 0.0;
                for (std::size_t b = 0; b < batches.size(); ++b) {
                    const double m = batches[b].sums_[k] / static_cast<double>(layout.batch_size(b));
                    ss += (m - r.mean) * (m - r.mean);
                }
                r.stderr = std::sqrt(ss / (n_b - 1.0) / n_b);
            } else if (layout.n_samples >= 2) {
                const double var = std::max(0.0, (total_sq - n * r.mean * r.mean) / (n - 1.0));
                r.stderr = std::sqrt(var / n);
            }
        }
        return out;
    }
};

std::vector<EstimateResult> run_batches(const BatchLayout& layout, std::size_t n_outputs,
                                        const BatchKernel& kernel) {
    if (layout.n_batches == 0) throw ConfigurationError("batch layout needs at least one batch");
    if (layout.n_samples < layout.n_batches)
        throw ConfigurationError("batch layout: fewer samples (" + std::to_string(layout.n_samples) +
                                 ") than batches (" + std::to_string(layout.n_batches) + ")");
    std::vector<BatchAccumulator> batches(layout.n_batches, BatchAccumulator(n_outputs));
    const unsigned workers = std::max<unsigned>(
        1, std::min<unsigned>(layout.workers ? layout.workers : default_worker_count(),
                              static_cast<unsigned>(layout.n_batches)));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= layout.n_batches) return;
            try {
                RandomStream rng(layout.seed, b);
                kernel(b, layout.batch_size(b), rng, batches[b]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(layout.n_batches);
                return;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return BatchReducer::reduce(layout, n_outputs, batches);
}

}  // namespace fkpath
