#pragma once

#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "sessrec/dataio.hpp"
#include "sessrec/linalg.hpp"

namespace sessrec {

/// Directed graph over the distinct items of one session prefix, with
/// row-normalized outgoing and incoming weight matrices so messages can flow
/// both ways during message passing.
struct SessionGraph {
    std::vector<ItemId> nodes;       // distinct items, first-occurrence order
    std::vector<std::size_t> alias;  // sequence position -> node slot
    Matrix raw_out;                  // transition counts, node x node
    Matrix raw_in;                   // reversed-pair counts (= raw_out transposed)
    Matrix weights_out;              // raw_out with nonzero rows normalized to sum 1
    Matrix weights_in;
    std::size_t seq_len = 0;

    std::size_t node_count() const { return nodes.size(); }
};

namespace detail {
inline Matrix row_normalize(const Matrix& counts) {
    Matrix out = counts;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < out.cols(); ++c) sum += out(r, c);
        if (sum == 0.0) continue;  // no outgoing mass: row stays zero
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) /= sum;
    }
    return out;
}
}  // namespace detail

/// Builds the session graph of a prefix. Each consecutive pair of distinct
/// items adds one outgoing count; consecutive duplicates add no self-edge.
inline SessionGraph build_session_graph(const std::vector<ItemId>& prefix) {
    if (prefix.empty()) throw std::invalid_argument("session graph needs a non-empty prefix");

    SessionGraph g;
    g.seq_len = prefix.size();
    std::unordered_map<ItemId, std::size_t> slot_of;
    g.alias.reserve(prefix.size());
    for (const ItemId item : prefix) {
        auto [it, inserted] = slot_of.emplace(item, g.nodes.size());
        if (inserted) g.nodes.push_back(item);
        g.alias.push_back(it->second);
    }

    const std::size_t n = g.nodes.size();
    g.raw_out = Matrix(n, n);
    g.raw_in = Matrix(n, n);
    for (std::size_t k = 0; k + 1 < prefix.size(); ++k) {
        if (prefix[k] == prefix[k + 1]) continue;
        const std::size_t a = g.alias[k];
        const std::size_t b = g.alias[k + 1];
        g.raw_out(a, b) += 1.0;
        g.raw_in(b, a) += 1.0;
    }
    g.weights_out = detail::row_normalize(g.raw_out);
    g.weights_in = detail::row_normalize(g.raw_in);
    return g;
}

}  // namespace sessrec
