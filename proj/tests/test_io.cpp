#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "sessrec/checkpoint.hpp"
#include "sessrec/io.hpp"
#include "sessrec/rng.hpp"

using namespace sessrec;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("sessrec_io_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("vocab file round trip") {
    TempDir dir;
    Vocab vocab;
    vocab.add("item-a");
    vocab.add("214536502");
    vocab.add("x y");  // spaces are fine, the separator is a tab
    const auto path = dir.file("vocab.tsv");
    write_vocab(path, vocab);
    CHECK(slurp(path) == "item-a\t0\n214536502\t1\nx y\t2\n");

    const Vocab loaded = read_vocab(path);
    REQUIRE(loaded.size() == 3);
    for (ItemId i = 0; i < 3; ++i) CHECK(loaded.raw(i) == vocab.raw(i));
}

TEST_CASE("example file round trip preserves prefixes and labels") {
    TempDir dir;
    Rng rng(3);
    std::vector<Example> examples;
    for (int i = 0; i < 40; ++i) {
        Example ex;
        const std::size_t len = 1 + rng.below(6);
        for (std::size_t j = 0; j < len; ++j) {
            ex.prefix.push_back(static_cast<ItemId>(rng.below(50)));
        }
        ex.label = static_cast<ItemId>(rng.below(50));
        examples.push_back(std::move(ex));
    }
    const auto path = dir.file("examples.txt");
    write_examples(path, examples);
    const auto loaded = read_examples(path);
    REQUIRE(loaded.size() == examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        CHECK(loaded[i].prefix == examples[i].prefix);
        CHECK(loaded[i].label == examples[i].label);
    }
}

TEST_CASE("example file format is exact") {
    TempDir dir;
    const auto path = dir.file("e.txt");
    write_examples(path, {Example{{3, 1, 4}, 7}});
    CHECK(slurp(path) == "3,1,4\t7\n");
}

TEST_CASE("walk and session lines round trip") {
    TempDir dir;
    const std::vector<std::vector<ItemId>> lines = {{0, 1, 2}, {5}, {9, 9, 1}};
    const auto path = dir.file("walks.txt");
    write_index_lines(path, lines);
    CHECK(slurp(path) == "0 1 2\n5\n9 9 1\n");
    CHECK(read_index_lines(path) == lines);
}

TEST_CASE("edge list format") {
    TempDir dir;
    const GlobalGraph g = build_global_graph({Session{{0, 1, 0, 1}, 0}}, 2);
    const auto path = dir.file("graph.tsv");
    write_edge_list(path, g);
    CHECK(slurp(path) == "0\t1\t2\n1\t0\t1\n");
}

TEST_CASE("embedding file: header, superset restriction, missing item error") {
    TempDir dir;
    Rng rng(4);
    Vocab vocab;
    vocab.add("a");
    vocab.add("b");
    vocab.add("c");
    const Matrix vectors = Matrix::gaussian(3, 4, 0.0, 0.3, rng);
    const auto path = dir.file("emb.txt");
    write_embeddings(path, vectors, vocab);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "3 4");

    const LoadedEmbeddings loaded = read_embeddings(path);
    REQUIRE(loaded.raw_ids.size() == 3);
    CHECK(loaded.vectors.rows() == 3);
    CHECK(loaded.vectors.cols() == 4);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(loaded.vectors(i, j) == vectors(i, j));  // full precision round trip
        }
    }

    // Downstream vocabulary that is a subset in a different order.
    Vocab downstream;
    downstream.add("c");
    downstream.add("a");
    const Matrix restricted = restrict_embeddings(loaded, downstream);
    REQUIRE(restricted.rows() == 2);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(restricted(0, j) == vectors(2, j));
        CHECK(restricted(1, j) == vectors(0, j));
    }

    Vocab misses;
    misses.add("a");
    misses.add("zzz");
    CHECK_THROWS_AS(restrict_embeddings(loaded, misses), DataError);
}

TEST_CASE("report lines carry six decimal places") {
    MetricReport r;
    r.stratum = Stratum::Cold;
    r.k = 20;
    r.precision = 0.5;
    r.mrr = 1.0 / 3.0;
    r.ndcg = 0.25;
    r.n_examples = 17;
    CHECK(format_report_line(r) == "cold\t20\t0.500000\t0.333333\t0.250000\t17");
}

TEST_CASE("stats file follows the summary layout") {
    TempDir dir;
    DatasetStats stats;
    stats.clicks = 1234;
    stats.train_examples = 900;
    stats.test_examples = 100;
    stats.items = 57;
    stats.average_length = 5.114;
    const auto path = dir.file("stats.txt");
    write_stats(path, stats);
    CHECK(slurp(path) ==
          "# of clicks\t1234\n# of train sessions\t900\n# of test sessions\t100\n"
          "# of items\t57\nAverage length\t5.11\n");
}

namespace {

Checkpoint make_checkpoint(ReadoutKind kind, bool has_bias) {
    Rng rng(91);
    ModelConfig cfg;
    cfg.dim = 6;
    cfg.steps = 2;
    cfg.readout = ReadoutConfig{kind, 0.75};
    Checkpoint ckpt;
    ckpt.item_count = 5;
    ckpt.dim = 6;
    ckpt.steps = 2;
    ckpt.readout = cfg.readout;
    ckpt.has_bias = has_bias;
    ckpt.phi = Matrix::gaussian(5, 6, 0.0, 0.2, rng);
    ckpt.params = init_params(5, cfg, 91);
    for (const char* name : {"i0", "i1", "i2", "i3", "i4"}) ckpt.vocab.add(name);
    return ckpt;
}

void round_to_float32(Matrix& m) {
    for (double& x : m.data()) x = static_cast<double>(static_cast<float>(x));
}

}  // namespace

TEST_CASE("checkpoint round trip through float32 storage") {
    TempDir dir;
    for (const ReadoutKind kind : {ReadoutKind::ExpDecay, ReadoutKind::Sum,
                                   ReadoutKind::Attention}) {
        Checkpoint ckpt = make_checkpoint(kind, true);
        const auto path = dir.file("model.bin");
        save_checkpoint(path, ckpt);
        const Checkpoint loaded = load_checkpoint(path);

        CHECK(loaded.item_count == 5);
        CHECK(loaded.dim == 6);
        CHECK(loaded.steps == 2);
        CHECK(loaded.readout.kind == kind);
        CHECK(loaded.readout.tau == 0.75);
        CHECK(loaded.has_bias);
        for (ItemId i = 0; i < 5; ++i) CHECK(loaded.vocab.raw(i) == ckpt.vocab.raw(i));

        Matrix expected_phi = ckpt.phi;
        round_to_float32(expected_phi);
        CHECK(loaded.phi == expected_phi);
        Matrix expected_beta = ckpt.params.beta;
        round_to_float32(expected_beta);
        CHECK(loaded.params.beta == expected_beta);

        // Saving the loaded model again is byte-identical: float32 is a
        // fixed point of the round trip.
        const auto second = dir.file("model2.bin");
        save_checkpoint(second, loaded);
        CHECK(slurp(path) == slurp(second));
    }
}

TEST_CASE("a biasless checkpoint stores no beta tensor and loads zeros") {
    TempDir dir;
    Checkpoint ckpt = make_checkpoint(ReadoutKind::ExpDecay, false);
    const auto path = dir.file("nobias.bin");
    save_checkpoint(path, ckpt);
    CHECK(slurp(path).find("beta") == std::string::npos);

    const Checkpoint loaded = load_checkpoint(path);
    CHECK_FALSE(loaded.has_bias);
    REQUIRE(loaded.params.beta.rows() == 5);
    for (const double b : loaded.params.beta.data()) CHECK(b == 0.0);
}

TEST_CASE("corrupt checkpoints are rejected") {
    TempDir dir;
    const auto path = dir.file("junk.bin");
    std::ofstream(path) << "definitely not a checkpoint";
    CHECK_THROWS_AS(load_checkpoint(path), ParseError);
    CHECK_THROWS_AS(load_checkpoint(dir.file("missing.bin")), IoError);
}
