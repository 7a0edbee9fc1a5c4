// Command-line front end for the session recommendation pipeline:
// preprocess -> pretrain -> train -> evaluate / recommend.
//
// Every option can also be given through a flat "key = value" config file
// (--config); explicit flags win over config entries. Each command writes a
// manifest in the same format, so a run can be reproduced by feeding its
// manifest back through --config.

#include <CLI11.hpp>
#include <fstream>
#include <exception>
#include <iomanip>
#include <iostream>

#include "sessrec/pipeline.hpp"

namespace {

std::string config_path;

void add_config(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Read options from a key = value file");
}

// Expands "--config FILE" into the flags the file contains. Explicit flags
// win: a key is skipped whenever the same option already appears on the
// command line. Lines starting with '#' are comments.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;

    std::ifstream in(path);
    if (!in) throw sessrec::IoError("cannot open config file: " + path);
    std::vector<std::string> expanded = args;
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        const std::size_t eq = line.find('=', start);
        if (eq == std::string::npos) {
            throw sessrec::ParseError("config line without '=': " + line);
        }
        const auto trim = [](std::string s) {
            const std::size_t a = s.find_first_not_of(" \t");
            const std::size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(start, eq - start));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw sessrec::ParseError("config line without a key: " + line);

        const std::string flag = "--" + key;
        bool overridden = false;
        for (const std::string& arg : args) {
            if (arg == flag || arg.rfind(flag + "=", 0) == 0) {
                overridden = true;
                break;
            }
        }
        if (!overridden) expanded.push_back(flag + "=" + value);
    }
    return expanded;
}

int run(int argc, char** argv) {
    CLI::App app{"Session-based recommendation pipeline"};
    app.require_subcommand(1);

    sessrec::PreprocessOptions pre;
    CLI::App* pre_cmd = app.add_subcommand("preprocess", "Build a dataset directory from a click log");
    add_config(pre_cmd);
    pre_cmd->add_option("--input", pre.input, "Click log with session_id, timestamp, item_id columns")
        ->required();
    pre_cmd->add_option("--format", pre.format, "Input format: csv or tsv");
    pre_cmd->add_flag("--has-header", pre.has_header, "Skip the first input line");
    pre_cmd->add_option("--min-item-support", pre.min_item_support, "Drop items seen fewer times");
    pre_cmd->add_option("--min-session-len", pre.min_session_len, "Drop shorter sessions");
    pre_cmd->add_option("--test-window-days", pre.test_window_days, "Trailing window for the test split");
    pre_cmd->add_option("--validation-fraction", pre.validation_fraction,
                        "Most recent fraction of train used for validation");
    pre_cmd->add_option("--out", pre.out_dir, "Dataset output directory");

    sessrec::PretrainOptions pt;
    CLI::App* pt_cmd = app.add_subcommand("pretrain", "Learn item embeddings from global-graph walks");
    add_config(pt_cmd);
    pt_cmd->add_option("--dataset", pt.dataset_dir, "Dataset directory from preprocess")->required();
    pt_cmd->add_option("--out", pt.out_dir, "Output directory (embeddings, walks, graph)");
    pt_cmd->add_option("--pretrain-corpus", pt.pretrain_corpus,
                       "Optional larger click log to pre-train on");
    pt_cmd->add_option("--corpus-format", pt.corpus_format, "Format of --pretrain-corpus");
    pt_cmd->add_flag("--corpus-has-header", pt.corpus_has_header, "Skip its first line");
    pt_cmd->add_option("--min-item-support", pt.min_item_support, "Filter for --pretrain-corpus");
    pt_cmd->add_option("--min-session-len", pt.min_session_len, "Filter for --pretrain-corpus");
    pt_cmd->add_option("--dim", pt.dim, "Embedding size");
    pt_cmd->add_option("--p", pt.p, "Return parameter of the biased walk");
    pt_cmd->add_option("--q", pt.q, "In-out parameter of the biased walk");
    pt_cmd->add_option("--walk-length", pt.walk_length, "Nodes per walk");
    pt_cmd->add_option("--walks-per-node", pt.walks_per_node, "Walks started from each node");
    pt_cmd->add_option("--window", pt.window, "Context radius");
    pt_cmd->add_option("--negatives", pt.negatives, "Noise samples per positive pair");
    pt_cmd->add_option("--epochs", pt.epochs, "Passes over the walk corpus");
    pt_cmd->add_option("--learning-rate", pt.learning_rate, "Initial SGD step size");
    pt_cmd->add_option("--noise-exponent", pt.noise_exponent, "Noise distribution exponent");
    pt_cmd->add_option("--seed", pt.seed, "Root random seed");
    pt_cmd->add_option("--threads", pt.threads, "Worker threads (1 = deterministic)");
    pt_cmd->add_flag("--deterministic", pt.deterministic, "Force single-threaded numeric paths");

    sessrec::TrainOptions tr;
    CLI::App* tr_cmd = app.add_subcommand("train", "Train the session model");
    add_config(tr_cmd);
    tr_cmd->add_option("--dataset", tr.dataset_dir, "Dataset directory")->required();
    tr_cmd->add_option("--embeddings", tr.embeddings, "embeddings.txt from pretrain");
    tr_cmd->add_option("--out", tr.out_dir, "Output directory (checkpoint, manifest, log)");
    tr_cmd->add_option("--dim", tr.dim, "Representation size");
    tr_cmd->add_option("--steps", tr.steps, "Message-passing rounds");
    tr_cmd->add_option("--readout", tr.readout, "exp_decay, last, mean, sum or attention");
    tr_cmd->add_option("--tau", tr.tau, "Decay temperature for exp_decay");
    tr_cmd->add_option("--max-epochs", tr.max_epochs, "Epoch cap");
    tr_cmd->add_option("--batch-size", tr.batch_size, "Examples per optimizer step");
    tr_cmd->add_option("--learning-rate", tr.learning_rate, "Adam step size");
    tr_cmd->add_option("--patience", tr.patience, "Early-stop patience in epochs");
    tr_cmd->add_flag("--no-pretrain", tr.no_pretrain, "Zero embedding; bias-only initialization");
    tr_cmd->add_flag("--no-bias", tr.no_bias, "Fine-tune the embedding instead of adding a bias");
    tr_cmd->add_flag("--literal-ce", tr.literal_ce, "Per-item binary objective");
    tr_cmd->add_option("--seed", tr.seed, "Root random seed");
    tr_cmd->add_option("--threads", tr.threads, "Worker threads (1 = deterministic)");
    tr_cmd->add_flag("--deterministic", tr.deterministic, "Force single-threaded numeric paths");

    sessrec::EvaluateOptions ev;
    CLI::App* ev_cmd = app.add_subcommand("evaluate", "Rank the test split and report metrics");
    add_config(ev_cmd);
    ev_cmd->add_option("--dataset", ev.dataset_dir, "Dataset directory")->required();
    ev_cmd->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
    ev_cmd->add_option("--out", ev.out_dir, "Report output directory");
    ev_cmd->add_option("--k-list", ev.k_list, "Comma-separated cutoffs");
    ev_cmd->add_option("--cold-threshold", ev.cold_threshold, "Popularity at or below is cold");
    ev_cmd->add_option("--popular-threshold", ev.popular_threshold, "Popularity above is popular");
    ev_cmd->add_option("--long-session-min", ev.long_session_min, "Prefix length that counts as long");
    ev_cmd->add_flag("--baselines,!--no-baselines", ev.baselines, "Include/skip the baseline rows");
    ev_cmd->add_option("--threads", ev.threads, "Worker threads");
    ev_cmd->add_flag("--deterministic", ev.deterministic, "Force single-threaded numeric paths");

    sessrec::RecommendOptions rc;
    CLI::App* rc_cmd = app.add_subcommand("recommend", "Top-k items for a session prefix");
    add_config(rc_cmd);
    rc_cmd->add_option("--checkpoint", rc.checkpoint, "Model checkpoint")->required();
    rc_cmd->add_option("--prefix", rc.prefix, "Raw item ids, in click order")->required();
    rc_cmd->add_option("--k", rc.k, "List length");

    const std::vector<std::string> raw_args(argv + 1, argv + argc);
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<char*> argv2 = {argv[0]};
    for (std::string& arg : args) argv2.push_back(arg.data());
    try {
        app.parse(static_cast<int>(argv2.size()), argv2.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the usage error
        return code == 0 ? 0 : 1;
    }

    if (pre_cmd->parsed()) {
        const sessrec::DatasetStats stats = sessrec::cmd_preprocess(pre);
        std::cout << "# of clicks\t" << stats.clicks << '\n'
                  << "# of train sessions\t" << stats.train_examples << '\n'
                  << "# of test sessions\t" << stats.test_examples << '\n'
                  << "# of items\t" << stats.items << '\n'
                  << "Average length\t" << std::fixed << std::setprecision(2)
                  << stats.average_length << '\n';
    } else if (pt_cmd->parsed()) {
        sessrec::cmd_pretrain(pt);
        std::cout << "wrote " << pt.out_dir << "/embeddings.txt\n";
    } else if (tr_cmd->parsed()) {
        const sessrec::TrainResult result = sessrec::cmd_train(tr);
        std::cout << std::setprecision(6) << std::fixed;
        for (std::size_t e = 0; e < result.history.size(); ++e) {
            std::cout << "epoch " << e << "\tloss " << result.history[e].train_loss
                      << "\tval P@20 " << result.history[e].val_precision << "\tval MRR@20 "
                      << result.history[e].val_mrr << '\n';
        }
        std::cout << "best epoch " << result.best_epoch << " (val P@20 "
                  << result.best_val_precision << ")\n";
    } else if (ev_cmd->parsed()) {
        const sessrec::EvaluationReports reports = sessrec::cmd_evaluate(ev);
        sessrec::print_report_table(std::cout, reports);
    } else if (rc_cmd->parsed()) {
        const auto top = sessrec::cmd_recommend(rc);
        std::cout << std::setprecision(6) << std::fixed;
        for (const auto& [item, score] : top) std::cout << item << '\t' << score << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const sessrec::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const sessrec::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const sessrec::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const sessrec::LookupError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
