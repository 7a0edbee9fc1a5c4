#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <span>
#include <thread>
#include <vector>

#include "sessrec/global_graph.hpp"
#include "sessrec/linalg.hpp"
#include "sessrec/rng.hpp"

namespace sessrec {

/// Item embedding tables: `vectors` holds the input embeddings that flow
/// downstream, `context_vectors` the output role used only during training.
struct EmbeddingTable {
    ItemId item_count = 0;
    int dim = 0;
    Matrix vectors;
    Matrix context_vectors;
};

struct SkipGramConfig {
    int window = 10;  // context radius
    int negatives = 5;
    int epochs = 5;
    double learning_rate = 0.025;
    double noise_exponent = 0.75;
    std::uint64_t seed = 42;
    int threads = 1;  // >1 runs lock-free updates; deterministic only at 1
};

/// Both tables start as i.i.d. N(0, 0.1^2) draws, reproducible per seed.
inline EmbeddingTable init_embeddings(ItemId item_count, int dim, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "init"));
    EmbeddingTable table;
    table.item_count = item_count;
    table.dim = dim;
    const auto m = static_cast<std::size_t>(item_count);
    const auto d = static_cast<std::size_t>(dim);
    table.vectors = Matrix::gaussian(m, d, 0.0, 0.1, rng);
    table.context_vectors = Matrix::gaussian(m, d, 0.0, 0.1, rng);
    return table;
}

namespace detail {
// Logistic with the argument clamped to [-30, 30] so log(sigmoid) stays finite.
inline double clamped_sigmoid(double x) {
    x = std::clamp(x, -30.0, 30.0);
    return 1.0 / (1.0 + std::exp(-x));
}
}  // namespace detail

struct PairGrads {
    double loss = 0.0;
    Vector center;
    Vector context;
    std::vector<Vector> negatives;
};

/// Loss and exact gradients of one training pair:
///   -log sigmoid(context . center) - sum_k log sigmoid(-neg_k . center).
inline PairGrads pair_loss_and_grads(std::span<const double> center,
                                     std::span<const double> context,
                                     const std::vector<std::span<const double>>& negatives) {
    const std::size_t d = center.size();
    PairGrads out;
    out.center.assign(d, 0.0);
    out.context.assign(d, 0.0);
    out.negatives.resize(negatives.size());

    const double pos_sig = detail::clamped_sigmoid(dot(context, center));
    out.loss = -std::log(pos_sig);
    axpy(pos_sig - 1.0, context, out.center);
    axpy(pos_sig - 1.0, center, out.context);

    for (std::size_t k = 0; k < negatives.size(); ++k) {
        const double neg_sig = detail::clamped_sigmoid(dot(negatives[k], center));
        out.loss -= std::log(1.0 - neg_sig);
        axpy(neg_sig, negatives[k], out.center);
        out.negatives[k].assign(d, 0.0);
        axpy(neg_sig, center, out.negatives[k]);
    }
    return out;
}

/// Draws noise items with probability proportional to count^exponent.
class NoiseSampler {
  public:
    NoiseSampler(const std::vector<std::int64_t>& counts, double exponent) {
        cdf_.reserve(counts.size());
        double cum = 0.0;
        for (const std::int64_t c : counts) {
            cum += c > 0 ? std::pow(static_cast<double>(c), exponent) : 0.0;
            cdf_.push_back(cum);
        }
        if (cum <= 0.0) throw DataError("noise sampler needs at least one positive count");
    }

    ItemId sample(Rng& rng) const {
        const double u = rng.uniform() * cdf_.back();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return static_cast<ItemId>(std::min<std::size_t>(
            static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1));
    }

    /// Resamples so the positive context item is never returned.
    ItemId sample_excluding(Rng& rng, ItemId excluded) const {
        for (int attempt = 0; attempt < 100; ++attempt) {
            const ItemId candidate = sample(rng);
            if (candidate != excluded) return candidate;
        }
        // All mass sits on the excluded item; fall back to a neighbor index.
        return excluded + 1 < static_cast<ItemId>(cdf_.size()) ? excluded + 1
               : excluded > 0                                  ? excluded - 1
                                                               : excluded;
    }

  private:
    std::vector<double> cdf_;
};

struct SkipGramStats {
    std::uint64_t pairs_trained = 0;
    std::vector<double> epoch_mean_loss;
};

namespace detail {

struct SgdShard {
    const std::vector<Walk>* walks;
    std::size_t walk_begin, walk_end;
    std::uint64_t pair_offset;  // position in the global pair schedule, for lr decay
};

inline void train_skipgram_shard(const SgdShard& shard, const SkipGramConfig& cfg,
                                 const NoiseSampler& sampler, std::uint64_t total_pairs,
                                 EmbeddingTable& table, Rng& neg_rng, SkipGramStats* stats) {
    const std::size_t d = static_cast<std::size_t>(table.dim);
    Vector center_grad(d);
    std::uint64_t done = shard.pair_offset;
    const double lr_hi = cfg.learning_rate;
    const double lr_lo = cfg.learning_rate / 100.0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::uint64_t epoch_pairs = 0;
        for (std::size_t w = shard.walk_begin; w < shard.walk_end; ++w) {
            const Walk& walk = (*shard.walks)[w];
            for (std::size_t i = 0; i < walk.size(); ++i) {
                const auto lo = i >= static_cast<std::size_t>(cfg.window)
                                    ? i - static_cast<std::size_t>(cfg.window)
                                    : 0;
                const auto hi = std::min(walk.size() - 1, i + static_cast<std::size_t>(cfg.window));
                auto center = table.vectors.row(static_cast<std::size_t>(walk[i]));
                for (std::size_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    const double lr =
                        lr_hi + (lr_lo - lr_hi) * (static_cast<double>(done) /
                                                   static_cast<double>(total_pairs));
                    ++done;

                    auto context = table.context_vectors.row(static_cast<std::size_t>(walk[j]));
                    std::fill(center_grad.begin(), center_grad.end(), 0.0);
                    double loss = 0.0;

                    // Positive term.
                    const double pos_sig = clamped_sigmoid(dot(context, center));
                    loss -= std::log(pos_sig);
                    axpy(pos_sig - 1.0, context, std::span<double>(center_grad));
                    axpy(-lr * (pos_sig - 1.0), center, context);

                    // Noise terms; grads taken at the pre-update center.
                    for (int k = 0; k < cfg.negatives; ++k) {
                        const ItemId noise = sampler.sample_excluding(neg_rng, walk[j]);
                        auto noise_row = table.context_vectors.row(static_cast<std::size_t>(noise));
                        const double neg_sig = clamped_sigmoid(dot(noise_row, center));
                        loss -= std::log(1.0 - neg_sig);
                        axpy(neg_sig, noise_row, std::span<double>(center_grad));
                        axpy(-lr * neg_sig, center, noise_row);
                    }
                    axpy(-lr, center_grad, center);

                    epoch_loss += loss;
                    ++epoch_pairs;
                }
            }
        }
        if (stats) {
            stats->pairs_trained += epoch_pairs;
            stats->epoch_mean_loss.push_back(
                epoch_pairs > 0 ? epoch_loss / static_cast<double>(epoch_pairs) : 0.0);
        }
    }
}

inline std::uint64_t count_window_pairs(const std::vector<Walk>& walks, std::size_t begin,
                                        std::size_t end, int window) {
    std::uint64_t pairs = 0;
    for (std::size_t w = begin; w < end; ++w) {
        const std::size_t len = walks[w].size();
        for (std::size_t i = 0; i < len; ++i) {
            const auto lo = i >= static_cast<std::size_t>(window)
                                ? i - static_cast<std::size_t>(window)
                                : 0;
            const auto hi = std::min(len - 1, i + static_cast<std::size_t>(window));
            pairs += hi - lo;  // window positions minus the center itself
        }
    }
    return pairs;
}

}  // namespace detail

/// Trains the tables in place on the walk corpus and reports per-epoch stats.
/// Every in-window pair (center, context) takes one SGD step against
/// `negatives` noise draws; the learning rate decays linearly to 1% of its
/// start value across the full pair schedule.
inline SkipGramStats train_skipgram(const std::vector<Walk>& walks, const SkipGramConfig& cfg,
                                    EmbeddingTable& table) {
    SkipGramStats stats;
    if (walks.empty()) {
        std::cerr << "train_skipgram: empty walk corpus, nothing to do\n";
        return stats;
    }

    std::vector<std::int64_t> counts(static_cast<std::size_t>(table.item_count), 0);
    for (const Walk& walk : walks) {
        for (const ItemId item : walk) ++counts[static_cast<std::size_t>(item)];
    }
    const NoiseSampler sampler(counts, cfg.noise_exponent);
    const std::uint64_t per_epoch = detail::count_window_pairs(walks, 0, walks.size(), cfg.window);
    const std::uint64_t total_pairs =
        std::max<std::uint64_t>(1, per_epoch * static_cast<std::uint64_t>(cfg.epochs));

    if (cfg.threads <= 1) {
        Rng neg_rng(derive_seed(cfg.seed, "negatives"));
        detail::train_skipgram_shard({&walks, 0, walks.size(), 0}, cfg, sampler, total_pairs,
                                     table, neg_rng, &stats);
        return stats;
    }

    // Lock-free parallel mode: shards update the shared tables without
    // synchronization, so results are not deterministic.
    const auto threads = static_cast<std::size_t>(cfg.threads);
    const std::size_t chunk = (walks.size() + threads - 1) / threads;
    std::vector<std::thread> pool;
    std::uint64_t offset = 0;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t begin = std::min(walks.size(), t * chunk);
        const std::size_t end = std::min(walks.size(), begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end, offset, t]() {
            Rng neg_rng(derive_seed(cfg.seed, "negatives", t));
            detail::train_skipgram_shard({&walks, begin, end, offset}, cfg, sampler,
                                         total_pairs, table, neg_rng, nullptr);
        });
        offset += detail::count_window_pairs(walks, begin, end, cfg.window) *
                  static_cast<std::uint64_t>(cfg.epochs);
    }
    for (std::thread& t : pool) t.join();
    stats.pairs_trained = total_pairs;
    return stats;
}

}  // namespace sessrec
