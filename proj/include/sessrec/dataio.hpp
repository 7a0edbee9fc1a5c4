#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sessrec/errors.hpp"

namespace sessrec {

/// Dense item index assigned after preprocessing; 0..m-1.
using ItemId = std::int32_t;

/// One row of a raw click log.
struct RawEvent {
    std::string session_id;
    std::string item_id;
    std::int64_t timestamp_ms = 0;
};

/// A time-ordered click sequence after preprocessing.
struct Session {
    std::vector<ItemId> items;
    std::int64_t end_time = 0;  // timestamp of the last retained click
};

/// One supervised instance: prefix of clicks plus the next click as label.
struct Example {
    std::vector<ItemId> prefix;
    ItemId label = 0;
};

/// Bidirectional map between raw item identifiers and dense indices.
class Vocab {
  public:
    ItemId add(const std::string& raw) {
        auto [it, inserted] = raw_to_index_.emplace(raw, static_cast<ItemId>(index_to_raw_.size()));
        if (inserted) index_to_raw_.push_back(raw);
        return it->second;
    }

    std::optional<ItemId> find(const std::string& raw) const {
        auto it = raw_to_index_.find(raw);
        if (it == raw_to_index_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& raw(ItemId index) const { return index_to_raw_.at(static_cast<std::size_t>(index)); }
    ItemId size() const { return static_cast<ItemId>(index_to_raw_.size()); }
    const std::vector<std::string>& entries() const { return index_to_raw_; }

  private:
    std::vector<std::string> index_to_raw_;
    std::unordered_map<std::string, ItemId> raw_to_index_;
};

/// Preprocessed corpus before the time split: sessions carry provisional
/// indices over the whole filtered item set.
struct Corpus {
    std::vector<Session> sessions;
    Vocab vocab;
};

/// Time-based split with the final vocabulary (train items only).
struct SplitSessions {
    std::vector<Session> train;
    std::vector<Session> validation;
    std::vector<Session> test;
    Vocab vocab;
    std::vector<std::int64_t> popularity;  // per-item clicks in train sessions
    std::size_t session_count = 0;
};

/// Augmented dataset: prefix/label examples per split.
struct SessionDataset {
    std::vector<Example> train;
    std::vector<Example> validation;
    std::vector<Example> test;
    Vocab vocab;
    std::vector<std::int64_t> popularity;
    std::size_t session_count = 0;

    ItemId item_count() const { return vocab.size(); }
};

enum class LogFormat { Csv, Tsv };

namespace detail {

// Accepts integer epoch-milliseconds or ISO-8601 UTC ("2014-04-07T10:51:09.277Z").
inline std::optional<std::int64_t> parse_timestamp(const std::string& field) {
    if (field.empty()) return std::nullopt;
    bool digits_only = true;
    for (const char c : field) {
        if (c < '0' || c > '9') {
            digits_only = false;
            break;
        }
    }
    if (digits_only) {
        errno = 0;
        char* end = nullptr;
        const long long v = std::strtoll(field.c_str(), &end, 10);
        if (errno != 0 || end == field.c_str() || *end != '\0') return std::nullopt;
        return static_cast<std::int64_t>(v);
    }
    int year, month, day, hour, minute;
    double second;
    if (std::sscanf(field.c_str(), "%d-%d-%dT%d:%d:%lf", &year, &month, &day, &hour, &minute,
                    &second) != 6) {
        return std::nullopt;
    }
    std::tm tm{};
    tm.tm_year = year - 1900;
    tm.tm_mon = month - 1;
    tm.tm_mday = day;
    tm.tm_hour = hour;
    tm.tm_min = minute;
    tm.tm_sec = 0;
    const std::time_t base = timegm(&tm);
    if (base == static_cast<std::time_t>(-1)) return std::nullopt;
    return static_cast<std::int64_t>(base) * 1000 + static_cast<std::int64_t>(second * 1000.0 + 0.5);
}

inline void split_fields(const std::string& line, char delim, std::vector<std::string>& out) {
    out.clear();
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace detail

/// Reads a click log with columns (session_id, timestamp, item_id).
/// Extra trailing columns are ignored. No filtering is applied here.
inline std::vector<RawEvent> load_events(const std::string& path, LogFormat format,
                                         bool has_header = false) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open event log: " + path);
    const char delim = format == LogFormat::Csv ? ',' : '\t';

    std::vector<RawEvent> events;
    std::vector<std::string> fields;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && has_header) continue;
        if (line.empty()) continue;
        detail::split_fields(line, delim, fields);
        if (fields.size() < 3 || fields[0].empty() || fields[2].empty()) {
            throw ParseError("malformed event row at line " + std::to_string(line_no) + ": " + line);
        }
        const auto ts = detail::parse_timestamp(fields[1]);
        if (!ts) {
            throw ParseError("bad timestamp at line " + std::to_string(line_no) + ": " + fields[1]);
        }
        events.push_back(RawEvent{fields[0], fields[2], *ts});
    }
    return events;
}

/// Groups events into sessions and filters rare items / short sessions to a
/// fixed point. Removing an item can shorten a session below the minimum,
/// and removing a session lowers item supports, so the two filters iterate
/// until neither fires. Surviving items get dense indices in first-appearance
/// order; sessions keep file order.
inline Corpus preprocess(const std::vector<RawEvent>& events, int min_item_support = 5,
                         int min_session_len = 2) {
    if (events.empty()) throw DataError("no events to preprocess");

    // Intern raw ids once so the filter loop works on integers.
    Vocab interned;
    std::unordered_map<std::string, std::size_t> session_slot;
    struct WorkSession {
        std::vector<std::pair<std::int64_t, ItemId>> clicks;  // (timestamp, item)
    };
    std::vector<WorkSession> work;
    for (const RawEvent& e : events) {
        auto [it, inserted] = session_slot.emplace(e.session_id, work.size());
        if (inserted) work.emplace_back();
        work[it->second].clicks.emplace_back(e.timestamp_ms, interned.add(e.item_id));
    }
    for (WorkSession& s : work) {
        std::stable_sort(s.clicks.begin(), s.clicks.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
    }

    std::vector<std::vector<std::pair<std::int64_t, ItemId>>> sessions;
    sessions.reserve(work.size());
    for (WorkSession& s : work) sessions.push_back(std::move(s.clicks));

    std::vector<std::int64_t> support(static_cast<std::size_t>(interned.size()), 0);
    for (;;) {
        // Drop short sessions first, then recount supports and drop rare items.
        std::erase_if(sessions, [&](const auto& s) {
            return s.size() < static_cast<std::size_t>(min_session_len);
        });
        std::fill(support.begin(), support.end(), 0);
        for (const auto& s : sessions) {
            for (const auto& [ts, item] : s) ++support[static_cast<std::size_t>(item)];
        }
        bool removed_item = false;
        for (auto& s : sessions) {
            const std::size_t before = s.size();
            std::erase_if(s, [&](const auto& click) {
                return support[static_cast<std::size_t>(click.second)] <
                       static_cast<std::int64_t>(min_item_support);
            });
            removed_item |= s.size() != before;
        }
        const bool has_short = std::any_of(sessions.begin(), sessions.end(), [&](const auto& s) {
            return s.size() < static_cast<std::size_t>(min_session_len);
        });
        if (!removed_item && !has_short) break;
    }
    if (sessions.empty()) {
        throw DataError("degenerate corpus: preprocessing removed every session");
    }

    Corpus corpus;
    for (const auto& s : sessions) {
        Session out;
        out.items.reserve(s.size());
        for (const auto& [ts, item] : s) {
            out.items.push_back(corpus.vocab.add(interned.raw(item)));
            out.end_time = ts;
        }
        corpus.sessions.push_back(std::move(out));
    }
    return corpus;
}

/// Splits sessions by end time: the trailing window forms the test set, the
/// most recent fraction of the remainder forms validation, the rest train.
/// The vocabulary is rebuilt from train items only (dense indices in order of
/// first appearance in time-ordered train data); validation/test clicks on
/// items outside it are dropped, and sessions left shorter than two clicks
/// are discarded since they can no longer produce an example.
inline SplitSessions split_by_time(const Corpus& corpus, std::int64_t test_window_ms,
                                   double validation_fraction = 0.10) {
    if (corpus.sessions.empty()) throw DataError("empty corpus");

    std::int64_t max_end = corpus.sessions.front().end_time;
    for (const Session& s : corpus.sessions) max_end = std::max(max_end, s.end_time);
    const std::int64_t cutoff = max_end - test_window_ms;

    std::vector<std::size_t> rest, test_idx;
    for (std::size_t i = 0; i < corpus.sessions.size(); ++i) {
        (corpus.sessions[i].end_time > cutoff ? test_idx : rest).push_back(i);
    }
    std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
        return corpus.sessions[a].end_time < corpus.sessions[b].end_time;
    });
    const auto val_count = static_cast<std::size_t>(
        std::llround(validation_fraction * static_cast<double>(rest.size())));
    if (rest.size() == val_count) {
        throw DataError("empty train split: test window covers the whole time range");
    }
    const std::size_t train_count = rest.size() - val_count;

    SplitSessions split;
    for (std::size_t i = 0; i < train_count; ++i) {
        const Session& src = corpus.sessions[rest[i]];
        Session remapped{{}, src.end_time};
        remapped.items.reserve(src.items.size());
        for (const ItemId item : src.items) {
            remapped.items.push_back(split.vocab.add(corpus.vocab.raw(item)));
        }
        split.train.push_back(std::move(remapped));
    }

    const auto remap_unseen = [&](const Session& src, std::vector<Session>& out) {
        Session remapped{{}, src.end_time};
        for (const ItemId item : src.items) {
            if (const auto id = split.vocab.find(corpus.vocab.raw(item))) {
                remapped.items.push_back(*id);
            }
        }
        if (remapped.items.size() >= 2) out.push_back(std::move(remapped));
    };
    for (std::size_t i = train_count; i < rest.size(); ++i) {
        remap_unseen(corpus.sessions[rest[i]], split.validation);
    }
    for (const std::size_t i : test_idx) remap_unseen(corpus.sessions[i], split.test);

    split.popularity.assign(static_cast<std::size_t>(split.vocab.size()), 0);
    for (const Session& s : split.train) {
        for (const ItemId item : s.items) ++split.popularity[static_cast<std::size_t>(item)];
    }
    split.session_count = split.train.size() + split.validation.size() + split.test.size();
    return split;
}

/// Unrolls each session [v1..vL] into its L-1 prefix/label examples.
inline std::vector<Example> augment(const std::vector<Session>& sessions) {
    std::vector<Example> examples;
    for (const Session& s : sessions) {
        if (s.items.size() < 2) {
            throw std::invalid_argument("augment requires sessions of length >= 2");
        }
        for (std::size_t k = 1; k < s.items.size(); ++k) {
            examples.push_back(
                Example{{s.items.begin(), s.items.begin() + static_cast<std::ptrdiff_t>(k)},
                        s.items[k]});
        }
    }
    return examples;
}

/// Augments each split independently (split first, then augment).
inline SessionDataset make_dataset(const SplitSessions& split) {
    SessionDataset ds;
    ds.train = augment(split.train);
    ds.validation = augment(split.validation);
    ds.test = augment(split.test);
    ds.vocab = split.vocab;
    ds.popularity = split.popularity;
    ds.session_count = split.session_count;
    return ds;
}

}  // namespace sessrec
