#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sessrec/checkpoint.hpp"
#include "sessrec/dataio.hpp"
#include "sessrec/embedding.hpp"
#include "sessrec/eval.hpp"
#include "sessrec/global_graph.hpp"
#include "sessrec/io.hpp"
#include "sessrec/train.hpp"

namespace sessrec {

namespace detail {

inline std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

inline std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

/// Flat "key = value" manifest; info lines go in as comments so the file can
/// be fed straight back through --config.
inline void write_manifest(const std::string& path,
                           const std::vector<std::pair<std::string, std::string>>& entries,
                           const std::vector<std::pair<std::string, std::string>>& info = {}) {
    auto out = open_out(path);
    for (const auto& [key, value] : entries) out << key << " = " << value << '\n';
    for (const auto& [key, value] : info) out << "# " << key << " = " << value << '\n';
}

inline LogFormat parse_format(const std::string& name) {
    if (name == "csv") return LogFormat::Csv;
    if (name == "tsv") return LogFormat::Tsv;
    throw DataError("unknown log format '" + name + "' (expected csv or tsv)");
}

inline std::vector<int> parse_k_list(const std::string& csv) {
    std::vector<int> ks;
    std::stringstream ss(csv);
    std::string field;
    while (std::getline(ss, field, ',')) {
        if (field.empty()) continue;
        ks.push_back(static_cast<int>(parse_int(field, "--k-list", 1)));
    }
    if (ks.empty()) throw DataError("--k-list is empty");
    return ks;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// preprocess
// ---------------------------------------------------------------------------

struct PreprocessOptions {
    std::string input;
    std::string format = "csv";
    bool has_header = false;
    int min_item_support = 5;
    int min_session_len = 2;
    double test_window_days = 1.0;
    double validation_fraction = 0.10;
    std::string out_dir = "dataset";
};

/// Dataset directory layout written by cmd_preprocess.
struct DatasetPaths {
    std::string vocab, train, validation, test, train_sessions, stats, manifest;

    explicit DatasetPaths(const std::string& dir)
        : vocab(dir + "/vocab.tsv"),
          train(dir + "/train.txt"),
          validation(dir + "/validation.txt"),
          test(dir + "/test.txt"),
          train_sessions(dir + "/train_sessions.txt"),
          stats(dir + "/stats.txt"),
          manifest(dir + "/manifest.cfg") {}
};

inline DatasetStats cmd_preprocess(const PreprocessOptions& opts) {
    const auto events = load_events(opts.input, detail::parse_format(opts.format), opts.has_header);
    const Corpus corpus = preprocess(events, opts.min_item_support, opts.min_session_len);
    const auto window_ms =
        static_cast<std::int64_t>(std::llround(opts.test_window_days * 86400000.0));
    const SplitSessions split = split_by_time(corpus, window_ms, opts.validation_fraction);
    const SessionDataset ds = make_dataset(split);

    std::uint64_t clicks = 0;
    for (const Session& s : corpus.sessions) clicks += s.items.size();
    DatasetStats stats;
    stats.clicks = clicks;
    stats.train_examples = ds.train.size();
    stats.test_examples = ds.test.size();
    stats.items = static_cast<std::uint64_t>(ds.item_count());
    stats.average_length = static_cast<double>(clicks) / static_cast<double>(corpus.sessions.size());

    std::filesystem::create_directories(opts.out_dir);
    const DatasetPaths paths(opts.out_dir);
    write_vocab(paths.vocab, ds.vocab);
    write_examples(paths.train, ds.train);
    write_examples(paths.validation, ds.validation);
    write_examples(paths.test, ds.test);
    write_sessions(paths.train_sessions, split.train);
    write_stats(paths.stats, stats);
    detail::write_manifest(
        paths.manifest,
        {{"input", opts.input},
         {"format", opts.format},
         {"has-header", opts.has_header ? "true" : "false"},
         {"min-item-support", std::to_string(opts.min_item_support)},
         {"min-session-len", std::to_string(opts.min_session_len)},
         {"test-window-days", detail::format_double(opts.test_window_days)},
         {"validation-fraction", detail::format_double(opts.validation_fraction)},
         {"out", opts.out_dir}},
        {{"input-hash", std::to_string(detail::fnv1a_file(opts.input))}});
    return stats;
}

/// Loads what evaluate/train need back from a dataset directory.
struct LoadedDataset {
    SessionDataset dataset;
    std::vector<Session> train_sessions;
};

inline LoadedDataset load_dataset_dir(const std::string& dir) {
    const DatasetPaths paths(dir);
    LoadedDataset loaded;
    loaded.dataset.vocab = read_vocab(paths.vocab);
    loaded.dataset.train = read_examples(paths.train);
    loaded.dataset.validation = read_examples(paths.validation);
    loaded.dataset.test = read_examples(paths.test);
    loaded.train_sessions = read_sessions(paths.train_sessions);
    loaded.dataset.popularity.assign(static_cast<std::size_t>(loaded.dataset.vocab.size()), 0);
    for (const Session& s : loaded.train_sessions) {
        for (const ItemId item : s.items) {
            ++loaded.dataset.popularity[static_cast<std::size_t>(item)];
        }
    }
    loaded.dataset.session_count = loaded.train_sessions.size();
    return loaded;
}

// ---------------------------------------------------------------------------
// pretrain
// ---------------------------------------------------------------------------

struct PretrainOptions {
    std::string dataset_dir;
    std::string out_dir = "pretrain";
    // Optional larger corpus to pre-train on; the downstream task later
    // restricts the embedding file to its own vocabulary.
    std::string pretrain_corpus;
    std::string corpus_format = "csv";
    bool corpus_has_header = false;
    int min_item_support = 5;
    int min_session_len = 2;

    int dim = 100;
    double p = 0.25;
    double q = 4.0;
    int walk_length = 80;
    int walks_per_node = 10;
    int window = 10;
    int negatives = 5;
    int epochs = 5;
    double learning_rate = 0.025;
    double noise_exponent = 0.75;
    std::uint64_t seed = 42;
    int threads = 1;
    bool deterministic = false;  // force single-threaded numeric paths
};

struct PretrainPaths {
    std::string embeddings, walks, graph, manifest;

    explicit PretrainPaths(const std::string& dir)
        : embeddings(dir + "/embeddings.txt"),
          walks(dir + "/walks.txt"),
          graph(dir + "/graph.tsv"),
          manifest(dir + "/manifest.cfg") {}
};

inline void cmd_pretrain(const PretrainOptions& raw_opts) {
    PretrainOptions opts = raw_opts;
    if (opts.deterministic) opts.threads = 1;
    if (opts.p <= 0.0 || opts.q <= 0.0) throw DataError("--p and --q must be positive");
    if (opts.walk_length < 2) throw DataError("--walk-length must be at least 2");
    if (opts.walks_per_node < 1) throw DataError("--walks-per-node must be at least 1");
    if (opts.window < 1) throw DataError("--window must be at least 1");
    if (opts.negatives < 1) throw DataError("--negatives must be at least 1");
    if (opts.learning_rate <= 0.0) throw DataError("--learning-rate must be positive");
    std::vector<Session> sessions;
    Vocab vocab;
    if (opts.pretrain_corpus.empty()) {
        LoadedDataset loaded = load_dataset_dir(opts.dataset_dir);
        sessions = std::move(loaded.train_sessions);
        vocab = loaded.dataset.vocab;
    } else {
        const auto events = load_events(opts.pretrain_corpus,
                                        detail::parse_format(opts.corpus_format),
                                        opts.corpus_has_header);
        Corpus corpus = preprocess(events, opts.min_item_support, opts.min_session_len);
        sessions = std::move(corpus.sessions);
        vocab = std::move(corpus.vocab);
    }

    const GlobalGraph graph = build_global_graph(sessions, vocab.size());
    WalkConfig walk_cfg;
    walk_cfg.return_param = opts.p;
    walk_cfg.inout_param = opts.q;
    walk_cfg.walk_length = opts.walk_length;
    walk_cfg.walks_per_node = opts.walks_per_node;
    walk_cfg.seed = derive_seed(opts.seed, "walks");
    walk_cfg.threads = opts.threads;
    const std::vector<Walk> walks = generate_walks(graph, walk_cfg);

    EmbeddingTable table = init_embeddings(vocab.size(), opts.dim, derive_seed(opts.seed, "init"));
    SkipGramConfig sg_cfg;
    sg_cfg.window = opts.window;
    sg_cfg.negatives = opts.negatives;
    sg_cfg.epochs = opts.epochs;
    sg_cfg.learning_rate = opts.learning_rate;
    sg_cfg.noise_exponent = opts.noise_exponent;
    sg_cfg.seed = derive_seed(opts.seed, "negatives");
    sg_cfg.threads = opts.threads;
    train_skipgram(walks, sg_cfg, table);

    std::filesystem::create_directories(opts.out_dir);
    const PretrainPaths paths(opts.out_dir);
    write_edge_list(paths.graph, graph);
    std::vector<std::vector<ItemId>> walk_lines(walks.begin(), walks.end());
    write_index_lines(paths.walks, walk_lines);
    write_embeddings(paths.embeddings, table.vectors, vocab);

    std::vector<std::pair<std::string, std::string>> manifest = {
        {"dataset", opts.dataset_dir},
        {"out", opts.out_dir},
        {"dim", std::to_string(opts.dim)},
        {"p", detail::format_double(opts.p)},
        {"q", detail::format_double(opts.q)},
        {"walk-length", std::to_string(opts.walk_length)},
        {"walks-per-node", std::to_string(opts.walks_per_node)},
        {"window", std::to_string(opts.window)},
        {"negatives", std::to_string(opts.negatives)},
        {"epochs", std::to_string(opts.epochs)},
        {"learning-rate", detail::format_double(opts.learning_rate)},
        {"noise-exponent", detail::format_double(opts.noise_exponent)},
        {"seed", std::to_string(opts.seed)},
        {"threads", std::to_string(opts.threads)},
        {"deterministic", opts.deterministic ? "true" : "false"}};
    if (!opts.pretrain_corpus.empty()) {
        manifest.emplace_back("pretrain-corpus", opts.pretrain_corpus);
        manifest.emplace_back("corpus-format", opts.corpus_format);
        manifest.emplace_back("corpus-has-header", opts.corpus_has_header ? "true" : "false");
        manifest.emplace_back("min-item-support", std::to_string(opts.min_item_support));
        manifest.emplace_back("min-session-len", std::to_string(opts.min_session_len));
    }
    detail::write_manifest(paths.manifest, manifest,
                           {{"walk-lines", std::to_string(walks.size())},
                            {"vocab-size", std::to_string(vocab.size())}});
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOptions {
    std::string dataset_dir;
    std::string embeddings;  // embeddings.txt from pretrain (unused with no_pretrain)
    std::string out_dir = "model";
    int dim = 100;
    int steps = 1;
    std::string readout = "exp_decay";
    double tau = 1.0;
    int max_epochs = 30;
    int batch_size = 100;
    double learning_rate = 1e-3;
    int patience = 3;
    bool no_pretrain = false;  // zero embedding, bias carries the model
    bool no_bias = false;      // fine-tune the embedding, no bias table
    bool literal_ce = false;   // per-item binary objective
    std::uint64_t seed = 42;
    int threads = 1;
    bool deterministic = false;
};

struct TrainPaths {
    std::string checkpoint, manifest, log;

    explicit TrainPaths(const std::string& dir)
        : checkpoint(dir + "/checkpoint.bin"),
          manifest(dir + "/manifest.cfg"),
          log(dir + "/train_log.tsv") {}
};

inline TrainResult cmd_train(const TrainOptions& raw_opts) {
    TrainOptions opts = raw_opts;
    if (opts.deterministic) opts.threads = 1;
    if (opts.no_pretrain && opts.no_bias) {
        throw DataError("--no-pretrain and --no-bias cannot be combined");
    }
    const auto kind = readout_from_name(opts.readout);
    if (!kind) throw DataError("unknown readout '" + opts.readout + "'");
    if (*kind == ReadoutKind::ExpDecay && opts.tau <= 0.0) {
        throw DataError("--tau must be positive for the exp_decay readout");
    }
    const LoadedDataset loaded = load_dataset_dir(opts.dataset_dir);
    const SessionDataset& ds = loaded.dataset;

    Matrix phi;
    int dim = opts.dim;
    if (opts.no_pretrain) {
        phi = Matrix(static_cast<std::size_t>(ds.item_count()), static_cast<std::size_t>(dim));
    } else {
        const LoadedEmbeddings emb = read_embeddings(opts.embeddings);
        if (static_cast<int>(emb.vectors.cols()) != opts.dim) {
            throw DataError("embedding dimension " + std::to_string(emb.vectors.cols()) +
                            " does not match --dim " + std::to_string(opts.dim));
        }
        phi = restrict_embeddings(emb, ds.vocab);  // shape error if vocab mismatch
    }

    ModelConfig model_cfg;
    model_cfg.dim = dim;
    model_cfg.steps = opts.steps;
    model_cfg.readout = ReadoutConfig{*kind, opts.tau};
    model_cfg.loss = opts.literal_ce ? LossKind::BinaryPerItem : LossKind::SoftmaxNll;

    TrainConfig train_cfg;
    train_cfg.max_epochs = opts.max_epochs;
    train_cfg.batch_size = opts.batch_size;
    train_cfg.learning_rate = opts.learning_rate;
    train_cfg.patience = opts.patience;
    train_cfg.seed = opts.seed;
    train_cfg.threads = opts.threads;
    train_cfg.bias_mode =
        opts.no_bias ? BiasMode::FineTunePhiNoBias : BiasMode::FrozenPhiWithBias;

    TrainResult result = train(ds, phi, model_cfg, train_cfg);

    std::filesystem::create_directories(opts.out_dir);
    const TrainPaths paths(opts.out_dir);
    {
        auto log = detail::open_out(paths.log);
        log << "epoch\ttrain_loss\tval_precision\tval_mrr\n" << std::setprecision(10);
        for (std::size_t e = 0; e < result.history.size(); ++e) {
            log << e << '\t' << result.history[e].train_loss << '\t'
                << result.history[e].val_precision << '\t' << result.history[e].val_mrr << '\n';
        }
    }

    Checkpoint ckpt;
    ckpt.item_count = ds.item_count();
    ckpt.dim = dim;
    ckpt.steps = opts.steps;
    ckpt.readout = model_cfg.readout;
    ckpt.has_bias = !opts.no_bias;
    ckpt.phi = result.phi;
    ckpt.params = result.params;
    ckpt.vocab = ds.vocab;
    save_checkpoint(paths.checkpoint, ckpt);

    const DatasetPaths ds_paths(opts.dataset_dir);
    detail::write_manifest(
        paths.manifest,
        {{"dataset", opts.dataset_dir},
         {"embeddings", opts.embeddings},
         {"out", opts.out_dir},
         {"dim", std::to_string(opts.dim)},
         {"steps", std::to_string(opts.steps)},
         {"readout", opts.readout},
         {"tau", detail::format_double(opts.tau)},
         {"max-epochs", std::to_string(opts.max_epochs)},
         {"batch-size", std::to_string(opts.batch_size)},
         {"learning-rate", detail::format_double(opts.learning_rate)},
         {"patience", std::to_string(opts.patience)},
         {"no-pretrain", opts.no_pretrain ? "true" : "false"},
         {"no-bias", opts.no_bias ? "true" : "false"},
         {"literal-ce", opts.literal_ce ? "true" : "false"},
         {"seed", std::to_string(opts.seed)},
         {"threads", std::to_string(opts.threads)},
         {"deterministic", opts.deterministic ? "true" : "false"}},
        {{"train-hash", std::to_string(detail::fnv1a_file(ds_paths.train))},
         {"vocab-hash", std::to_string(detail::fnv1a_file(ds_paths.vocab))},
         {"embeddings-hash",
          std::to_string(opts.no_pretrain ? 0 : detail::fnv1a_file(opts.embeddings))},
         {"best-epoch", std::to_string(result.best_epoch)},
         {"best-val-precision", detail::format_double(result.best_val_precision)}});
    return result;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOptions {
    std::string dataset_dir;
    std::string checkpoint;
    std::string out_dir = "reports";
    std::string k_list = "1,5,10,20";
    std::int64_t cold_threshold = 500;
    std::int64_t popular_threshold = 5000;
    std::size_t long_session_min = 6;
    bool baselines = true;
    int threads = 1;
    bool deterministic = false;
};

using EvaluationReports = std::vector<std::pair<std::string, std::vector<MetricReport>>>;

namespace detail {

template <typename ScoreFn>
inline std::vector<std::size_t> ranks_for(const std::vector<Example>& examples, ScoreFn&& score_fn,
                                          int threads) {
    std::vector<std::size_t> ranks(examples.size());
    const auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::vector<double> logits = score_fn(examples[i].prefix);
            ranks[i] = rank_of_label(logits, examples[i].label);
        }
    };
    if (threads <= 1 || examples.size() < 64) {
        worker(0, examples.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (examples.size() + static_cast<std::size_t>(threads) - 1) /
                                  static_cast<std::size_t>(threads);
        for (int t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(examples.size(), t * chunk);
            const std::size_t end = std::min(examples.size(), begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (std::thread& t : pool) t.join();
    }
    return ranks;
}

inline std::vector<MetricReport> stratified_reports(const std::vector<std::size_t>& ranks,
                                                    const StratumPartition& partition,
                                                    const std::vector<int>& ks) {
    const auto subset = [&](const std::vector<std::size_t>& idx) {
        std::vector<std::size_t> out;
        out.reserve(idx.size());
        for (const std::size_t i : idx) out.push_back(ranks[i]);
        return out;
    };
    std::vector<std::pair<Stratum, std::vector<std::size_t>>> strata;
    strata.emplace_back(Stratum::All, ranks);
    strata.emplace_back(Stratum::Cold, subset(partition.cold));
    strata.emplace_back(Stratum::Popular, subset(partition.popular));
    strata.emplace_back(Stratum::Long, subset(partition.long_sessions));
    strata.emplace_back(Stratum::Short, subset(partition.short_sessions));

    std::vector<MetricReport> reports;
    for (const auto& [stratum, stratum_ranks] : strata) {
        if (stratum_ranks.empty()) continue;  // metrics undefined on empty strata
        for (const int k : ks) {
            MetricReport r = metrics_at_k(stratum_ranks, k);
            r.stratum = stratum;
            reports.push_back(r);
        }
    }
    return reports;
}

}  // namespace detail

inline EvaluationReports cmd_evaluate(const EvaluateOptions& raw_opts) {
    EvaluateOptions opts = raw_opts;
    if (opts.deterministic) opts.threads = 1;
    if (opts.cold_threshold >= opts.popular_threshold) {
        throw DataError("--cold-threshold must be below --popular-threshold");
    }
    if (opts.long_session_min < 2) throw DataError("--long-session-min must be at least 2");
    const LoadedDataset loaded = load_dataset_dir(opts.dataset_dir);
    const SessionDataset& ds = loaded.dataset;
    if (ds.test.empty()) throw DataError("test split is empty");
    const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
    if (ckpt.vocab.entries() != ds.vocab.entries()) {
        throw DataError("checkpoint vocabulary does not match the dataset");
    }

    const std::vector<int> ks = detail::parse_k_list(opts.k_list);
    const StratumConfig stratum_cfg{opts.cold_threshold, opts.popular_threshold,
                                    opts.long_session_min};
    const StratumPartition partition = stratify(ds.test, ds.popularity, stratum_cfg);

    EvaluationReports reports;
    const auto model_ranks = detail::ranks_for(
        ds.test,
        [&](const std::vector<ItemId>& prefix) {
            const SessionGraph sg = build_session_graph(prefix);
            return forward(sg, ckpt.phi, ckpt.params).logits;
        },
        opts.threads);
    reports.emplace_back("model", detail::stratified_reports(model_ranks, partition, ks));

    if (opts.baselines) {
        const PopBaseline pop(ds.popularity);
        reports.emplace_back(
            "pop", detail::stratified_reports(
                       detail::ranks_for(
                           ds.test,
                           [&](const std::vector<ItemId>& p) { return pop.score(p); },
                           opts.threads),
                       partition, ks));
        const SessionPopBaseline spop(ds.popularity);
        reports.emplace_back(
            "spop", detail::stratified_reports(
                        detail::ranks_for(
                            ds.test,
                            [&](const std::vector<ItemId>& p) { return spop.score(p); },
                            opts.threads),
                        partition, ks));
        const ItemKnnBaseline knn(loaded.train_sessions, ds.item_count());
        reports.emplace_back(
            "itemknn", detail::stratified_reports(
                           detail::ranks_for(
                               ds.test,
                               [&](const std::vector<ItemId>& p) { return knn.score(p); },
                               opts.threads),
                           partition, ks));
    }

    std::filesystem::create_directories(opts.out_dir);
    for (const auto& [method, method_reports] : reports) {
        write_report(opts.out_dir + "/report_" + method + ".tsv", method_reports);
    }
    detail::write_manifest(opts.out_dir + "/manifest.cfg",
                           {{"dataset", opts.dataset_dir},
                            {"checkpoint", opts.checkpoint},
                            {"out", opts.out_dir},
                            {"k-list", opts.k_list},
                            {"cold-threshold", std::to_string(opts.cold_threshold)},
                            {"popular-threshold", std::to_string(opts.popular_threshold)},
                            {"long-session-min", std::to_string(opts.long_session_min)},
                            {"baselines", opts.baselines ? "true" : "false"},
                            {"threads", std::to_string(opts.threads)},
                            {"deterministic", opts.deterministic ? "true" : "false"}},
                           {{"checkpoint-hash", std::to_string(detail::fnv1a_file(opts.checkpoint))}});
    return reports;
}

inline void print_report_table(std::ostream& out, const EvaluationReports& reports) {
    out << std::left << std::setw(10) << "method" << std::setw(9) << "stratum" << std::right
        << std::setw(4) << "k" << std::setw(10) << "P" << std::setw(10) << "MRR" << std::setw(10)
        << "NDCG" << std::setw(8) << "n" << '\n';
    for (const auto& [method, method_reports] : reports) {
        for (const MetricReport& r : method_reports) {
            out << std::left << std::setw(10) << method << std::setw(9) << stratum_name(r.stratum)
                << std::right << std::setw(4) << r.k << std::fixed << std::setprecision(4)
                << std::setw(10) << r.precision << std::setw(10) << r.mrr << std::setw(10)
                << r.ndcg << std::setw(8) << r.n_examples << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// recommend
// ---------------------------------------------------------------------------

struct RecommendOptions {
    std::string checkpoint;
    std::vector<std::string> prefix;  // raw item ids
    std::size_t k = 20;
};

inline std::vector<std::pair<std::string, double>> cmd_recommend(const RecommendOptions& opts) {
    const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
    if (opts.prefix.empty()) throw DataError("recommend needs a non-empty prefix");

    std::vector<ItemId> prefix;
    prefix.reserve(opts.prefix.size());
    for (const std::string& raw : opts.prefix) {
        const auto id = ckpt.vocab.find(raw);
        if (!id) throw LookupError("unknown item id '" + raw + "'");
        prefix.push_back(*id);
    }

    const auto top = recommend(prefix, opts.k, ckpt.phi, ckpt.params);
    std::vector<std::pair<std::string, double>> out;
    out.reserve(top.size());
    for (const auto& [item, score] : top) out.emplace_back(ckpt.vocab.raw(item), score);
    return out;
}

}  // namespace sessrec
