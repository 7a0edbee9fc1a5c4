#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "sessrec/dataio.hpp"
#include "sessrec/errors.hpp"
#include "sessrec/eval.hpp"
#include "sessrec/global_graph.hpp"
#include "sessrec/linalg.hpp"

namespace sessrec {

namespace detail {

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write: " + path);
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    return in;
}

inline long long parse_int(const std::string& text, const std::string& path, std::size_t line) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (errno != 0 || end == text.c_str() || *end != '\0') {
        throw ParseError(path + ":" + std::to_string(line) + ": expected integer, got '" + text +
                         "'");
    }
    return v;
}

}  // namespace detail

// --- vocabulary: one "raw_id<TAB>index" per line ---------------------------

inline void write_vocab(const std::string& path, const Vocab& vocab) {
    auto out = detail::open_out(path);
    for (ItemId i = 0; i < vocab.size(); ++i) out << vocab.raw(i) << '\t' << i << '\n';
}

inline Vocab read_vocab(const std::string& path) {
    auto in = detail::open_in(path);
    Vocab vocab;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": missing tab");
        }
        const auto index = detail::parse_int(line.substr(tab + 1), path, line_no);
        const ItemId assigned = vocab.add(line.substr(0, tab));
        if (assigned != static_cast<ItemId>(index)) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": indices must be dense and in order");
        }
    }
    return vocab;
}

// --- example files: "idx,idx,...<TAB>label" per line ------------------------

inline void write_examples(const std::string& path, const std::vector<Example>& examples) {
    auto out = detail::open_out(path);
    for (const Example& ex : examples) {
        for (std::size_t i = 0; i < ex.prefix.size(); ++i) {
            if (i) out << ',';
            out << ex.prefix[i];
        }
        out << '\t' << ex.label << '\n';
    }
}

inline std::vector<Example> read_examples(const std::string& path) {
    auto in = detail::open_in(path);
    std::vector<Example> examples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": missing tab");
        }
        Example ex;
        std::stringstream prefix(line.substr(0, tab));
        std::string field;
        while (std::getline(prefix, field, ',')) {
            ex.prefix.push_back(static_cast<ItemId>(detail::parse_int(field, path, line_no)));
        }
        if (ex.prefix.empty()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": empty prefix");
        }
        ex.label = static_cast<ItemId>(detail::parse_int(line.substr(tab + 1), path, line_no));
        examples.push_back(std::move(ex));
    }
    return examples;
}

// --- sessions / walks: space-separated indices per line ---------------------

inline void write_index_lines(const std::string& path,
                              const std::vector<std::vector<ItemId>>& lines) {
    auto out = detail::open_out(path);
    for (const auto& items : lines) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i) out << ' ';
            out << items[i];
        }
        out << '\n';
    }
}

inline std::vector<std::vector<ItemId>> read_index_lines(const std::string& path) {
    auto in = detail::open_in(path);
    std::vector<std::vector<ItemId>> lines;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<ItemId> items;
        std::stringstream ss(line);
        std::string field;
        while (ss >> field) {
            items.push_back(static_cast<ItemId>(detail::parse_int(field, path, line_no)));
        }
        lines.push_back(std::move(items));
    }
    return lines;
}

inline void write_sessions(const std::string& path, const std::vector<Session>& sessions) {
    std::vector<std::vector<ItemId>> lines;
    lines.reserve(sessions.size());
    for (const Session& s : sessions) lines.push_back(s.items);
    write_index_lines(path, lines);
}

inline std::vector<Session> read_sessions(const std::string& path) {
    std::vector<Session> sessions;
    for (auto& items : read_index_lines(path)) sessions.push_back(Session{std::move(items), 0});
    return sessions;
}

// --- global graph: "src<TAB>dst<TAB>weight" ---------------------------------

inline void write_edge_list(const std::string& path, const GlobalGraph& g) {
    auto out = detail::open_out(path);
    for (ItemId v = 0; v < g.node_count; ++v) {
        for (const auto& e : g.out_edges[static_cast<std::size_t>(v)]) {
            out << v << '\t' << e.target << '\t' << static_cast<long long>(e.weight) << '\n';
        }
    }
}

// --- embeddings: "m d" header, then "raw_id f1 .. fd" per item ---------------

inline void write_embeddings(const std::string& path, const Matrix& vectors, const Vocab& vocab) {
    if (vectors.rows() != static_cast<std::size_t>(vocab.size())) {
        throw DataError("embedding rows do not match the vocabulary");
    }
    auto out = detail::open_out(path);
    out << std::setprecision(17);
    out << vectors.rows() << ' ' << vectors.cols() << '\n';
    for (std::size_t i = 0; i < vectors.rows(); ++i) {
        out << vocab.raw(static_cast<ItemId>(i));
        for (const double x : vectors.row(i)) out << ' ' << x;
        out << '\n';
    }
}

struct LoadedEmbeddings {
    std::vector<std::string> raw_ids;
    Matrix vectors;
};

inline LoadedEmbeddings read_embeddings(const std::string& path) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ":1: missing header");
    std::stringstream header(line);
    std::size_t rows = 0, cols = 0;
    if (!(header >> rows >> cols) || rows == 0 || cols == 0) {
        throw ParseError(path + ":1: bad header '" + line + "'");
    }
    LoadedEmbeddings loaded;
    loaded.vectors = Matrix(rows, cols);
    loaded.raw_ids.reserve(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) {
            throw ParseError(path + ": expected " + std::to_string(rows) + " rows");
        }
        std::stringstream ss(line);
        std::string id;
        if (!(ss >> id)) throw ParseError(path + ":" + std::to_string(i + 2) + ": empty row");
        loaded.raw_ids.push_back(id);
        auto row = loaded.vectors.row(i);
        for (std::size_t j = 0; j < cols; ++j) {
            if (!(ss >> row[j])) {
                throw ParseError(path + ":" + std::to_string(i + 2) + ": expected " +
                                 std::to_string(cols) + " values");
            }
        }
    }
    return loaded;
}

/// Reorders loaded embeddings onto a vocabulary (the pre-training corpus may
/// cover a superset of it). Every vocab item must be present.
inline Matrix restrict_embeddings(const LoadedEmbeddings& loaded, const Vocab& vocab) {
    std::unordered_map<std::string, std::size_t> row_of;
    row_of.reserve(loaded.raw_ids.size());
    for (std::size_t i = 0; i < loaded.raw_ids.size(); ++i) row_of.emplace(loaded.raw_ids[i], i);

    Matrix out(static_cast<std::size_t>(vocab.size()), loaded.vectors.cols());
    for (ItemId i = 0; i < vocab.size(); ++i) {
        const auto it = row_of.find(vocab.raw(i));
        if (it == row_of.end()) {
            throw DataError("embedding file is missing item '" + vocab.raw(i) + "'");
        }
        const auto src = loaded.vectors.row(it->second);
        auto dst = out.row(static_cast<std::size_t>(i));
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

// --- metric reports ----------------------------------------------------------

inline std::string format_report_line(const MetricReport& r) {
    std::ostringstream out;
    out << stratum_name(r.stratum) << '\t' << r.k << '\t' << std::fixed << std::setprecision(6)
        << r.precision << '\t' << r.mrr << '\t' << r.ndcg << '\t' << r.n_examples;
    return out.str();
}

inline void write_report(const std::string& path, const std::vector<MetricReport>& reports) {
    auto out = detail::open_out(path);
    for (const MetricReport& r : reports) out << format_report_line(r) << '\n';
}

// --- dataset statistics summary ----------------------------------------------

struct DatasetStats {
    std::uint64_t clicks = 0;
    std::uint64_t train_examples = 0;
    std::uint64_t test_examples = 0;
    std::uint64_t items = 0;
    double average_length = 0.0;
};

inline void write_stats(const std::string& path, const DatasetStats& stats) {
    auto out = detail::open_out(path);
    out << "# of clicks\t" << stats.clicks << '\n'
        << "# of train sessions\t" << stats.train_examples << '\n'
        << "# of test sessions\t" << stats.test_examples << '\n'
        << "# of items\t" << stats.items << '\n'
        << "Average length\t" << std::fixed << std::setprecision(2) << stats.average_length
        << '\n';
}

}  // namespace sessrec
