#pragma once

// Synthetic two-block Markov click log shared by the integration experiments.
// Fifty items in two blocks of twenty-five; 90% of the transition mass stays
// within the block and concentrates on a few ring successors of the current
// item, the rest jumps uniformly into the other block. One session ends per
// minute so a trailing time window selects a clean test slice.

#include <cstdint>
#include <fstream>
#include <string>

#include "sessrec/rng.hpp"

namespace planted {

inline int next_item(int item, sessrec::Rng& rng) {
    const int block = item / 25;
    const int local = item % 25;
    if (rng.uniform() < 0.9) {
        const double u = rng.uniform();
        const int step = u < 0.6 ? 1 : u < 0.85 ? 2 : 3;
        return block * 25 + (local + step) % 25;
    }
    return (1 - block) * 25 + static_cast<int>(rng.below(25));
}

inline void write_log(const std::string& path, int sessions, std::uint64_t seed, int len_lo = 10,
                      int len_spread = 5) {
    sessrec::Rng rng(seed);
    std::ofstream out(path);
    for (int s = 0; s < sessions; ++s) {
        const std::int64_t end = 1000000000LL + static_cast<std::int64_t>(s) * 60000;
        const int len = len_lo + static_cast<int>(rng.below(len_spread));
        int item = static_cast<int>(rng.below(50));
        for (int k = 0; k < len; ++k) {
            out << "s" << s << ',' << end - static_cast<std::int64_t>(len - k) * 1000 << ",item"
                << item << '\n';
            item = next_item(item, rng);
        }
    }
}

}  // namespace planted
