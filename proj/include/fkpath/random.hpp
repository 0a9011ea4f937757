#pragma once

#include <cstdint>
#include <random>

namespace fkpath {

/// Independent random stream identified by (seed, stream id).
///
/// Streams are never shared between workers; every batch of an estimate owns
/// one stream, so results depend only on the seed and the batch layout.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id);

    /// Uniform on the open interval (0, 1).
    double uniform();
    double normal();

    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] std::uint64_t stream_id() const { return stream_id_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace fkpath
