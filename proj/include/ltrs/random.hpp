#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ltrs {

using Rng = std::mt19937_64;

/// Mixes a base seed with a sequence of stream indices (splitmix64 finalizer),
/// so per-frame / per-batch generators are independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream);

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> stream = {}) {
    return Rng(derive_seed(base, stream));
}

}  // namespace ltrs
