#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "sessrec/dataio.hpp"
#include "sessrec/rng.hpp"

using namespace sessrec;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("sessrec_dataio_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

// Convenience: build raw events directly.
RawEvent ev(const std::string& sid, std::int64_t ts, const std::string& item) {
    return RawEvent{sid, item, ts};
}

}  // namespace

TEST_CASE("load_events reads well-formed rows in file order") {
    TempDir dir;
    const auto path = dir.file("log.csv");
    write_file(path, "s1,100,a\ns1,200,b\ns2,150,a\n");
    const auto events = load_events(path, LogFormat::Csv);
    REQUIRE(events.size() == 3);
    CHECK(events[0].session_id == "s1");
    CHECK(events[0].item_id == "a");
    CHECK(events[0].timestamp_ms == 100);
    CHECK(events[2].session_id == "s2");
}

TEST_CASE("load_events handles tsv, headers and iso timestamps") {
    TempDir dir;
    const auto path = dir.file("log.tsv");
    write_file(path, "session\ttime\titem\ns1\t2014-04-07T10:51:09.277Z\t214536502\n");
    const auto events = load_events(path, LogFormat::Tsv, /*has_header=*/true);
    REQUIRE(events.size() == 1);
    CHECK(events[0].item_id == "214536502");
    CHECK(events[0].timestamp_ms == 1396867869277LL);
}

TEST_CASE("load_events reports the line number of a malformed row") {
    TempDir dir;
    const auto path = dir.file("bad.csv");
    write_file(path, "s1,100,a\ns1,200\n");
    try {
        load_events(path, LogFormat::Csv);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("load_events on a missing file is an io error") {
    CHECK_THROWS_AS(load_events("/nonexistent/log.csv", LogFormat::Csv), IoError);
}

TEST_CASE("preprocess removes everything below support and signals degeneracy") {
    // sessions [[a],[a,b],[a,b]] with threshold 5: nothing survives
    std::vector<RawEvent> events = {ev("s1", 1, "a"),  ev("s2", 1, "a"), ev("s2", 2, "b"),
                                    ev("s3", 1, "a"), ev("s3", 2, "b")};
    CHECK_THROWS_AS(preprocess(events, 5, 2), DataError);
}

TEST_CASE("an item with support exactly at the threshold is retained") {
    std::vector<RawEvent> events;
    for (int s = 0; s < 5; ++s) {
        events.push_back(ev("s" + std::to_string(s), 1, "keep"));
        events.push_back(ev("s" + std::to_string(s), 2, "keep2"));
    }
    const Corpus corpus = preprocess(events, 5, 2);
    CHECK(corpus.sessions.size() == 5);
    CHECK(corpus.vocab.size() == 2);
}

TEST_CASE("filtering iterates to a fixed point") {
    // Hand-simulated with support >= 2 and length >= 2:
    //   s1=[A,B] s2=[A,C] s3=[B,C] s4=[D,E] s5=[D,A] s6=[E,F]
    // F(1) is removed -> s6 shrinks to [E] and is dropped -> E drops to 1 and
    // is removed -> s4 shrinks and is dropped -> D drops to 1 -> s5 dropped.
    // Fixed point: s1,s2,s3 with A,B,C all at support 2.
    std::vector<RawEvent> events = {
        ev("s1", 1, "A"), ev("s1", 2, "B"), ev("s2", 1, "A"), ev("s2", 2, "C"),
        ev("s3", 1, "B"), ev("s3", 2, "C"), ev("s4", 1, "D"), ev("s4", 2, "E"),
        ev("s5", 1, "D"), ev("s5", 2, "A"), ev("s6", 1, "E"), ev("s6", 2, "F")};
    const Corpus corpus = preprocess(events, 2, 2);
    REQUIRE(corpus.sessions.size() == 3);
    CHECK(corpus.vocab.size() == 3);
    // Dense ids follow first appearance: A=0, B=1, C=2.
    CHECK(corpus.vocab.raw(0) == "A");
    CHECK(corpus.vocab.raw(1) == "B");
    CHECK(corpus.vocab.raw(2) == "C");
    CHECK(corpus.sessions[0].items == std::vector<ItemId>{0, 1});
    CHECK(corpus.sessions[1].items == std::vector<ItemId>{0, 2});
    CHECK(corpus.sessions[2].items == std::vector<ItemId>{1, 2});
}

TEST_CASE("preprocess output always satisfies both filters (property)") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<RawEvent> events;
        const int sessions = 3 + static_cast<int>(rng.below(20));
        for (int s = 0; s < sessions; ++s) {
            const int len = 1 + static_cast<int>(rng.below(6));
            for (int k = 0; k < len; ++k) {
                events.push_back(ev("s" + std::to_string(s), k,
                                    "i" + std::to_string(rng.below(8))));
            }
        }
        const int min_support = 2 + static_cast<int>(rng.below(3));
        const int min_len = 2;
        Corpus corpus;
        try {
            corpus = preprocess(events, min_support, min_len);
        } catch (const DataError&) {
            continue;  // fully filtered corpora are legal outcomes
        }
        std::vector<int> support(static_cast<std::size_t>(corpus.vocab.size()), 0);
        for (const Session& s : corpus.sessions) {
            CHECK(s.items.size() >= static_cast<std::size_t>(min_len));
            for (const ItemId item : s.items) ++support[static_cast<std::size_t>(item)];
        }
        for (const int count : support) CHECK(count >= min_support);
    }
}

TEST_CASE("within-session ordering is by timestamp with stable ties") {
    std::vector<RawEvent> events = {ev("s", 200, "b"), ev("s", 100, "a"), ev("s", 200, "c"),
                                    ev("t", 1, "a"),   ev("t", 2, "b"),   ev("t", 3, "c")};
    const Corpus corpus = preprocess(events, 1, 2);
    // a(100) first, then b and c keep file order at the tied timestamp 200.
    CHECK(corpus.sessions[0].items.size() == 3);
    CHECK(corpus.vocab.raw(corpus.sessions[0].items[0]) == "a");
    CHECK(corpus.vocab.raw(corpus.sessions[0].items[1]) == "b");
    CHECK(corpus.vocab.raw(corpus.sessions[0].items[2]) == "c");
    CHECK(corpus.sessions[0].end_time == 200);
}

namespace {

Corpus toy_corpus(const std::vector<std::pair<std::vector<std::string>, std::int64_t>>& sessions) {
    std::vector<RawEvent> events;
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        const auto& [items, end] = sessions[s];
        for (std::size_t k = 0; k < items.size(); ++k) {
            events.push_back(ev("s" + std::to_string(s),
                                end - static_cast<std::int64_t>(items.size() - 1 - k), items[k]));
        }
    }
    return preprocess(events, 1, 2);
}

}  // namespace

TEST_CASE("split_by_time partitions by the trailing window") {
    std::vector<std::pair<std::vector<std::string>, std::int64_t>> sessions;
    for (int i = 0; i < 10; ++i) sessions.push_back({{"a", "b"}, 1000 + i * 100});
    const Corpus corpus = toy_corpus(sessions);
    const SplitSessions split = split_by_time(corpus, 150, 0.0);
    CHECK(split.test.size() == 2);  // end times 1800 and 1900 fall in (1750, 1900]
    CHECK(split.train.size() == 8);
    CHECK(split.validation.empty());
}

TEST_CASE("validation takes the most recent fraction of the remainder") {
    std::vector<std::pair<std::vector<std::string>, std::int64_t>> sessions;
    for (int i = 0; i < 101; ++i) sessions.push_back({{"a", "b"}, 1000 + i * 10});
    const Corpus corpus = toy_corpus(sessions);
    const SplitSessions split = split_by_time(corpus, 5, 0.10);  // only the last session is test
    CHECK(split.test.size() == 1);
    CHECK(split.validation.size() == 10);
    CHECK(split.train.size() == 90);
    // Time ordering between the splits.
    std::int64_t max_train = 0, min_val = 1LL << 60, max_val = 0, min_test = 1LL << 60;
    for (const Session& s : split.train) max_train = std::max(max_train, s.end_time);
    for (const Session& s : split.validation) {
        min_val = std::min(min_val, s.end_time);
        max_val = std::max(max_val, s.end_time);
    }
    for (const Session& s : split.test) min_test = std::min(min_test, s.end_time);
    CHECK(max_train <= min_val);
    CHECK(max_val <= min_test);
}

TEST_CASE("unseen items drop from test prefixes, unseen labels drop the example") {
    // Hand-checked 5-session toy split: "x" appears only in the test window,
    // so it is absent from the train vocabulary.
    std::vector<std::pair<std::vector<std::string>, std::int64_t>> sessions = {
        {{"a", "b"}, 100},  {{"b", "c"}, 200},      {{"a", "c"}, 300},
        {{"c", "a"}, 400},  {{"a", "x", "b"}, 1000}};
    const Corpus corpus = toy_corpus(sessions);
    const SplitSessions split = split_by_time(corpus, 300, 0.0);
    REQUIRE(split.test.size() == 1);
    // The test session keeps [a, b]: the x click vanished.
    REQUIRE(split.test[0].items.size() == 2);
    CHECK(split.vocab.raw(split.test[0].items[0]) == "a");
    CHECK(split.vocab.raw(split.test[0].items[1]) == "b");

    const SessionDataset ds = make_dataset(split);
    // [a,x,b] would have produced ([a],x) and ([a,x],b); after the drop only
    // ([a],b) remains.
    REQUIRE(ds.test.size() == 1);
    CHECK(ds.test[0].prefix == std::vector<ItemId>{*split.vocab.find("a")});
    CHECK(ds.test[0].label == *split.vocab.find("b"));
}

TEST_CASE("a test window covering the whole range is an error") {
    std::vector<std::pair<std::vector<std::string>, std::int64_t>> sessions = {
        {{"a", "b"}, 100}, {{"a", "b"}, 200}};
    const Corpus corpus = toy_corpus(sessions);
    CHECK_THROWS_AS(split_by_time(corpus, 1000, 0.0), DataError);
}

TEST_CASE("vocab round trip is the identity") {
    std::vector<std::pair<std::vector<std::string>, std::int64_t>> sessions;
    for (int i = 0; i < 20; ++i) {
        sessions.push_back({{"i" + std::to_string(i % 7), "i" + std::to_string((i + 3) % 7)},
                            1000 + i * 10});
    }
    const SplitSessions split = split_by_time(toy_corpus(sessions), 15, 0.10);
    for (ItemId i = 0; i < split.vocab.size(); ++i) {
        CHECK(*split.vocab.find(split.vocab.raw(i)) == i);
    }
}

TEST_CASE("augment unrolls a session into its prefixes") {
    const std::vector<Session> sessions = {{{3, 7, 5}, 0}};
    const auto examples = augment(sessions);
    REQUIRE(examples.size() == 2);
    CHECK(examples[0].prefix == std::vector<ItemId>{3});
    CHECK(examples[0].label == 7);
    CHECK(examples[1].prefix == std::vector<ItemId>{3, 7});
    CHECK(examples[1].label == 5);
}

TEST_CASE("augment edge cases") {
    CHECK(augment({{{1, 2}, 0}}).size() == 1);
    // lengths 2, 3, 5 -> 1 + 2 + 4 = 7 examples
    CHECK(augment({{{1, 2}, 0}, {{1, 2, 3}, 0}, {{1, 2, 3, 4, 1}, 0}}).size() == 7);
    CHECK_THROWS_AS(augment({{{1}, 0}}), std::invalid_argument);
}

TEST_CASE("augment count property: sum of (len - 1)") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Session> sessions;
        std::size_t expected = 0;
        const int count = 1 + static_cast<int>(rng.below(10));
        for (int s = 0; s < count; ++s) {
            Session session;
            const std::size_t len = 2 + rng.below(8);
            for (std::size_t k = 0; k < len; ++k) {
                session.items.push_back(static_cast<ItemId>(rng.below(5)));
            }
            expected += len - 1;
            sessions.push_back(std::move(session));
        }
        CHECK(augment(sessions).size() == expected);
    }
}
