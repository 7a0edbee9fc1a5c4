#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "sessrec/dataio.hpp"
#include "sessrec/errors.hpp"

namespace sessrec {

enum class Stratum { All, Cold, Popular, Long, Short };

inline const char* stratum_name(Stratum s) {
    switch (s) {
        case Stratum::All: return "all";
        case Stratum::Cold: return "cold";
        case Stratum::Popular: return "popular";
        case Stratum::Long: return "long";
        case Stratum::Short: return "short";
    }
    return "?";
}

struct MetricReport {
    Stratum stratum = Stratum::All;
    int k = 20;
    double precision = 0.0;
    double mrr = 0.0;
    double ndcg = 0.0;
    std::size_t n_examples = 0;
};

struct StratumConfig {
    std::int64_t cold_threshold = 500;     // popularity <= threshold is cold
    std::int64_t popular_threshold = 5000; // popularity > threshold is popular
    std::size_t long_session_min = 6;      // prefix length >= min is long
};

/// 1-based rank of the label among all logits; ties resolve toward the lower
/// item index, matching how recommendation lists are ordered.
inline std::size_t rank_of_label(std::span<const double> logits, ItemId label) {
    const double ref = logits[static_cast<std::size_t>(label)];
    std::size_t rank = 1;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (logits[i] > ref) ++rank;
        else if (logits[i] == ref && i < static_cast<std::size_t>(label)) ++rank;
    }
    return rank;
}

/// Macro-averaged hit rate, reciprocal rank, and log-discounted gain at k.
inline MetricReport metrics_at_k(const std::vector<std::size_t>& ranks, int k) {
    if (ranks.empty()) throw DataError("metrics undefined on an empty rank list");
    MetricReport report;
    report.k = k;
    report.n_examples = ranks.size();
    double p = 0.0, mrr = 0.0, ndcg = 0.0;
    for (const std::size_t rank : ranks) {
        if (rank > static_cast<std::size_t>(k)) continue;
        p += 1.0;
        mrr += 1.0 / static_cast<double>(rank);
        ndcg += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
    }
    const auto n = static_cast<double>(ranks.size());
    report.precision = p / n;
    report.mrr = mrr / n;
    report.ndcg = ndcg / n;
    return report;
}

/// Index sets of the case-study strata. Cold/popular partition by label
/// popularity (with a middle band excluded when the thresholds differ);
/// long/short partition by prefix length and are exhaustive.
struct StratumPartition {
    std::vector<std::size_t> cold;
    std::vector<std::size_t> popular;
    std::vector<std::size_t> long_sessions;
    std::vector<std::size_t> short_sessions;
};

inline StratumPartition stratify(const std::vector<Example>& examples,
                                 const std::vector<std::int64_t>& popularity,
                                 const StratumConfig& cfg) {
    StratumPartition part;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const std::int64_t pop = popularity.at(static_cast<std::size_t>(examples[i].label));
        if (pop <= cfg.cold_threshold) part.cold.push_back(i);
        if (pop > cfg.popular_threshold) part.popular.push_back(i);
        if (examples[i].prefix.size() >= cfg.long_session_min) {
            part.long_sessions.push_back(i);
        } else {
            part.short_sessions.push_back(i);
        }
    }
    return part;
}

// ---------------------------------------------------------------------------
// Classical baselines. Each produces a full score vector for a prefix; ranks
// then follow the shared lower-index-wins tie rule of rank_of_label.
// ---------------------------------------------------------------------------

/// Global popularity ranking, identical for every query.
class PopBaseline {
  public:
    explicit PopBaseline(const std::vector<std::int64_t>& popularity) {
        scores_.reserve(popularity.size());
        for (const std::int64_t c : popularity) scores_.push_back(static_cast<double>(c));
    }

    std::vector<double> score(const std::vector<ItemId>& /*prefix*/) const { return scores_; }

  private:
    std::vector<double> scores_;
};

/// Items seen in the current prefix ranked by in-session frequency (ties by
/// index), followed by the remaining catalog in global-popularity order.
class SessionPopBaseline {
  public:
    explicit SessionPopBaseline(const std::vector<std::int64_t>& popularity)
        : popularity_(popularity) {
        std::int64_t max_pop = 0;
        for (const std::int64_t c : popularity) max_pop = std::max(max_pop, c);
        block_ = static_cast<double>(max_pop) + 1.0;
    }

    std::vector<double> score(const std::vector<ItemId>& prefix) const {
        std::vector<double> scores(popularity_.size());
        for (std::size_t i = 0; i < scores.size(); ++i) {
            scores[i] = static_cast<double>(popularity_[i]);
        }
        // In-session counts dominate any popularity value; equal counts stay
        // tied so rank_of_label breaks them by index.
        std::vector<std::int64_t> in_session(popularity_.size(), 0);
        for (const ItemId item : prefix) ++in_session[static_cast<std::size_t>(item)];
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (in_session[i] > 0) scores[i] = static_cast<double>(in_session[i]) * block_;
        }
        return scores;
    }

  private:
    std::vector<std::int64_t> popularity_;
    double block_ = 1.0;
};

/// Item-to-item collaborative filtering: items are binary session-incidence
/// vectors over the raw train sessions, candidates are scored by cosine
/// similarity to the last clicked item.
class ItemKnnBaseline {
  public:
    ItemKnnBaseline(const std::vector<Session>& train_sessions, ItemId item_count)
        : sessions_with_(static_cast<std::size_t>(item_count)),
          members_(train_sessions.size()) {
        for (std::size_t s = 0; s < train_sessions.size(); ++s) {
            const std::unordered_set<ItemId> distinct(train_sessions[s].items.begin(),
                                                      train_sessions[s].items.end());
            members_[s].assign(distinct.begin(), distinct.end());
            std::sort(members_[s].begin(), members_[s].end());
            for (const ItemId item : members_[s]) {
                sessions_with_[static_cast<std::size_t>(item)].push_back(s);
            }
        }
    }

    double similarity(ItemId a, ItemId b) const {
        if (a == b) return 1.0;
        const auto& sa = sessions_with_[static_cast<std::size_t>(a)];
        const auto& sb = sessions_with_[static_cast<std::size_t>(b)];
        if (sa.empty() || sb.empty()) return 0.0;
        std::size_t common = 0;
        std::size_t i = 0, j = 0;
        while (i < sa.size() && j < sb.size()) {
            if (sa[i] == sb[j]) { ++common; ++i; ++j; }
            else if (sa[i] < sb[j]) ++i;
            else ++j;
        }
        return static_cast<double>(common) /
               std::sqrt(static_cast<double>(sa.size()) * static_cast<double>(sb.size()));
    }

    std::vector<double> score(const std::vector<ItemId>& prefix) const {
        std::vector<double> scores(sessions_with_.size(), 0.0);
        if (prefix.empty()) return scores;
        const ItemId last = prefix.back();
        const auto& sessions = sessions_with_[static_cast<std::size_t>(last)];
        if (sessions.empty()) return scores;
        std::vector<std::size_t> common(sessions_with_.size(), 0);
        for (const std::size_t s : sessions) {
            for (const ItemId member : members_[s]) ++common[static_cast<std::size_t>(member)];
        }
        const auto n_last = static_cast<double>(sessions.size());
        for (std::size_t item = 0; item < scores.size(); ++item) {
            if (common[item] == 0) continue;
            const auto n_item = static_cast<double>(sessions_with_[item].size());
            scores[item] = static_cast<double>(common[item]) / std::sqrt(n_last * n_item);
        }
        return scores;
    }

  private:
    std::vector<std::vector<std::size_t>> sessions_with_;  // item -> sorted session ids
    std::vector<std::vector<ItemId>> members_;             // session -> distinct items
};

}  // namespace sessrec
