#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "fkpath/random.hpp"

namespace fkpath {

/// Monte Carlo result with batch-means error bar and everything needed to reproduce it.
struct EstimateResult {
    double mean = 0.0;
    double stderr = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::size_t n_batches = 0;
    /// Smallest and largest per-path weight (path factor excluding the state values).
    double min_path_weight = std::numeric_limits<double>::infinity();
    double max_path_weight = -std::numeric_limits<double>::infinity();
    /// Paths whose conditional field quadrature failed the order-doubling check.
    std::size_t quadrature_warnings = 0;
    bool formal = false;
};

/// Per-batch accumulator for one or more estimated quantities sharing the same samples.
class BatchAccumulator {
public:
    explicit BatchAccumulator(std::size_t n_outputs = 1)
        : sums_(n_outputs, 0.0), sums_sq_(n_outputs, 0.0) {}

    void add(std::size_t output, double value) {
        sums_[output] += value;
        sums_sq_[output] += value * value;
    }
    void add(double value) { add(0, value); }
    void observe_path_weight(double w) {
        if (w < min_weight_) min_weight_ = w;
        if (w > max_weight_) max_weight_ = w;
    }
    void flag_quadrature_warning() { ++warnings_; }
    void flag_formal() { formal_ = true; }

private:
    friend struct BatchReducer;
    std::vector<double> sums_;
    std::vector<double> sums_sq_;
    double min_weight_ = std::numeric_limits<double>::infinity();
    double max_weight_ = -std::numeric_limits<double>::infinity();
    std::size_t warnings_ = 0;
    bool formal_ = false;
};

struct BatchLayout {
    std::size_t n_samples = 100000;
    std::size_t n_batches = 100;
    std::uint64_t seed = 1;
    /// Worker threads; 0 reads FKPATH_WORKERS, then falls back to hardware concurrency.
    unsigned workers = 0;

    [[nodiscard]] std::size_t batch_size(std::size_t batch) const;
};

/// Callback evaluating `count` samples of batch `batch` with the batch's private stream.
using BatchKernel =
    std::function<void(std::size_t batch, std::size_t count, RandomStream& rng, BatchAccumulator& acc)>;

/// Runs every batch (possibly on several threads) and reduces in batch order, so the
/// result is bit-identical for a fixed layout regardless of the worker count.
std::vector<EstimateResult> run_batches(const BatchLayout& layout, std::size_t n_outputs,
                                        const BatchKernel& kernel);

unsigned default_worker_count();

}  // namespace fkpath
