#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "sessrec/dataio.hpp"
#include "sessrec/rng.hpp"

namespace sessrec {

/// Weighted directed item-transition graph over the full catalog. Edge
/// weights count how often the pair occurred consecutively in train sessions.
struct GlobalGraph {
    struct Edge {
        ItemId target;
        double weight;
    };

    ItemId node_count = 0;
    std::vector<std::vector<Edge>> out_edges;  // per node, sorted by target
    std::vector<std::int32_t> out_degree;      // distinct outgoing targets
    std::vector<std::int32_t> in_degree;       // distinct incoming sources

    bool has_out_edge(ItemId src, ItemId dst) const {
        const auto& edges = out_edges[static_cast<std::size_t>(src)];
        const auto it = std::lower_bound(
            edges.begin(), edges.end(), dst,
            [](const Edge& e, ItemId target) { return e.target < target; });
        return it != edges.end() && it->target == dst;
    }
};

/// Second-order walk parameters. The return parameter scales the probability
/// of stepping back to the previous node, the in-out parameter the
/// probability of leaving its neighborhood.
struct WalkConfig {
    double return_param = 0.25;  // p
    double inout_param = 4.0;    // q
    int walk_length = 80;
    int walks_per_node = 10;
    std::uint64_t seed = 42;
    int threads = 1;
};

using Walk = std::vector<ItemId>;

/// Accumulates one count per consecutive pair of distinct items within each
/// session; consecutive duplicate clicks contribute no edge.
inline GlobalGraph build_global_graph(const std::vector<Session>& sessions, ItemId item_count) {
    std::vector<std::unordered_map<ItemId, double>> counts(
        static_cast<std::size_t>(item_count));
    for (const Session& s : sessions) {
        for (std::size_t k = 0; k + 1 < s.items.size(); ++k) {
            const ItemId a = s.items[k];
            const ItemId b = s.items[k + 1];
            if (a == b) continue;
            counts[static_cast<std::size_t>(a)][b] += 1.0;
        }
    }

    GlobalGraph g;
    g.node_count = item_count;
    g.out_edges.resize(counts.size());
    g.out_degree.assign(counts.size(), 0);
    g.in_degree.assign(counts.size(), 0);
    for (std::size_t v = 0; v < counts.size(); ++v) {
        auto& edges = g.out_edges[v];
        edges.reserve(counts[v].size());
        for (const auto& [target, weight] : counts[v]) edges.push_back({target, weight});
        std::sort(edges.begin(), edges.end(),
                  [](const GlobalGraph::Edge& a, const GlobalGraph::Edge& b) {
                      return a.target < b.target;
                  });
        g.out_degree[v] = static_cast<std::int32_t>(edges.size());
        for (const auto& e : edges) ++g.in_degree[static_cast<std::size_t>(e.target)];
    }
    return g;
}

/// Transition probabilities out of `src`, aligned with out_edges[src].
///
/// On the first step (no previous node) the distribution is proportional to
/// raw edge weights. Otherwise each weight is scaled by an adjustment factor:
/// 1/p for stepping back to the previous node, 1 for targets that are also
/// out-neighbors of the previous node, 1/q for everything else. An empty
/// result signals a dead end (no outgoing edges); the caller truncates.
inline std::vector<double> transition_distribution(const GlobalGraph& g,
                                                   std::optional<ItemId> prev, ItemId src,
                                                   const WalkConfig& cfg) {
    const auto& edges = g.out_edges[static_cast<std::size_t>(src)];
    std::vector<double> probs(edges.size());
    if (edges.empty()) return probs;

    double total = 0.0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        double factor = 1.0;
        if (prev) {
            if (edges[i].target == *prev) {
                factor = 1.0 / cfg.return_param;
            } else if (g.has_out_edge(*prev, edges[i].target)) {
                factor = 1.0;
            } else {
                factor = 1.0 / cfg.inout_param;
            }
        }
        probs[i] = factor * edges[i].weight;
        total += probs[i];
    }
    for (double& p : probs) p /= total;
    return probs;
}

/// Samples the next node of a walk, or nullopt at a dead end.
inline std::optional<ItemId> sample_step(const GlobalGraph& g, std::optional<ItemId> prev,
                                         ItemId src, const WalkConfig& cfg, Rng& rng) {
    const std::vector<double> probs = transition_distribution(g, prev, src, cfg);
    if (probs.empty()) return std::nullopt;
    const auto& edges = g.out_edges[static_cast<std::size_t>(src)];
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) return edges[i].target;
    }
    return edges.back().target;  // guard against rounding at u ~ 1
}

namespace detail {
inline Walk run_walk(const GlobalGraph& g, ItemId start, const WalkConfig& cfg, Rng& rng) {
    Walk walk{start};
    std::optional<ItemId> prev;
    ItemId current = start;
    while (walk.size() < static_cast<std::size_t>(cfg.walk_length)) {
        const auto next = sample_step(g, prev, current, cfg, rng);
        if (!next) break;
        walk.push_back(*next);
        prev = current;
        current = *next;
    }
    return walk;
}
}  // namespace detail

/// Starts walks_per_node walks from every node with at least one outgoing
/// edge. Each walk draws from its own stream keyed by (seed, node, walk), so
/// the corpus is identical for a fixed seed regardless of thread count, and
/// walks are emitted in (node, walk-index) order.
inline std::vector<Walk> generate_walks(const GlobalGraph& g, const WalkConfig& cfg) {
    std::vector<ItemId> origins;
    for (ItemId v = 0; v < g.node_count; ++v) {
        if (g.out_degree[static_cast<std::size_t>(v)] > 0) origins.push_back(v);
    }
    std::vector<Walk> walks(origins.size() * static_cast<std::size_t>(cfg.walks_per_node));

    const auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t o = begin; o < end; ++o) {
            for (int w = 0; w < cfg.walks_per_node; ++w) {
                const std::uint64_t stream =
                    static_cast<std::uint64_t>(origins[o]) *
                        static_cast<std::uint64_t>(cfg.walks_per_node) +
                    static_cast<std::uint64_t>(w);
                Rng rng(derive_seed(cfg.seed, "walks", stream));
                walks[o * static_cast<std::size_t>(cfg.walks_per_node) +
                      static_cast<std::size_t>(w)] = detail::run_walk(g, origins[o], cfg, rng);
            }
        }
    };

    const int threads = std::max(1, cfg.threads);
    if (threads == 1 || origins.size() < 2) {
        worker(0, origins.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (origins.size() + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(origins.size(), t * chunk);
            const std::size_t end = std::min(origins.size(), begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (std::thread& t : pool) t.join();
    }
    return walks;
}

}  // namespace sessrec
