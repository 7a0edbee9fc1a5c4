#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <thread>
#include <utility>
#include <vector>

#include "sessrec/eval.hpp"
#include "sessrec/model.hpp"

namespace sessrec {

/// Which table absorbs the init-state gradient: the task bias on top of a
/// frozen embedding (default), or the embedding itself when no bias is used.
enum class BiasMode { FrozenPhiWithBias, FineTunePhiNoBias };

struct TrainConfig {
    int max_epochs = 30;
    int batch_size = 100;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int patience = 3;  // epochs without validation improvement before stopping
    std::uint64_t seed = 42;
    int threads = 1;
    int validation_k = 20;
    BiasMode bias_mode = BiasMode::FrozenPhiWithBias;
};

struct EpochLog {
    double train_loss = 0.0;
    double val_precision = 0.0;
    double val_mrr = 0.0;
};

struct TrainResult {
    ModelParams params;  // best-validation snapshot
    Matrix phi;          // matches the input unless fine-tuning
    std::vector<EpochLog> history;
    int best_epoch = -1;
    double best_val_precision = 0.0;
    std::uint64_t optimizer_steps = 0;
};

namespace detail {

/// Adam over a fixed list of tensor views; slots are matched by position.
class Adam {
  public:
    Adam(double lr, double beta1, double beta2, double eps)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<std::span<double>>& params,
              const std::vector<std::span<const double>>& grads) {
        if (slots_.empty()) {
            slots_.resize(params.size());
            for (std::size_t i = 0; i < params.size(); ++i) {
                slots_[i].first.assign(params[i].size(), 0.0);
                slots_[i].second.assign(params[i].size(), 0.0);
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& [m, v] = slots_[i];
            const auto g = grads[i];
            auto p = params[i];
            for (std::size_t j = 0; j < p.size(); ++j) {
                m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
                v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
                p[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
            }
        }
    }

    std::uint64_t steps() const { return t_; }

  private:
    double lr_, beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
    std::vector<std::pair<std::vector<double>, std::vector<double>>> slots_;
};

inline std::vector<std::span<double>> trainable_views(ModelParams& params, Matrix& phi,
                                                      BiasMode mode) {
    std::vector<std::span<double>> views;
    if (mode == BiasMode::FineTunePhiNoBias) {
        views.emplace_back(phi.data());
    } else {
        views.emplace_back(params.beta.data());
    }
    views.emplace_back(params.update_msg.data());
    views.emplace_back(params.reset_msg.data());
    views.emplace_back(params.cand_msg.data());
    views.emplace_back(params.update_state.data());
    views.emplace_back(params.reset_state.data());
    views.emplace_back(params.cand_state.data());
    views.emplace_back(params.msg_bias);
    if (params.readout.kind == ReadoutKind::Sum) {
        views.emplace_back(params.sum_proj.data());
    } else if (params.readout.kind == ReadoutKind::Attention) {
        views.emplace_back(params.attn_last.data());
        views.emplace_back(params.attn_pos.data());
        views.emplace_back(params.attn_bias);
        views.emplace_back(params.attn_score);
        views.emplace_back(params.attn_out.data());
    }
    return views;
}

inline std::vector<std::span<double>> gradient_views(ModelGrads& grads,
                                                     const ModelParams& params) {
    std::vector<std::span<double>> views;
    views.emplace_back(grads.beta.data());
    views.emplace_back(grads.update_msg.data());
    views.emplace_back(grads.reset_msg.data());
    views.emplace_back(grads.cand_msg.data());
    views.emplace_back(grads.update_state.data());
    views.emplace_back(grads.reset_state.data());
    views.emplace_back(grads.cand_state.data());
    views.emplace_back(grads.msg_bias);
    if (params.readout.kind == ReadoutKind::Sum) {
        views.emplace_back(grads.sum_proj.data());
    } else if (params.readout.kind == ReadoutKind::Attention) {
        views.emplace_back(grads.attn_last.data());
        views.emplace_back(grads.attn_pos.data());
        views.emplace_back(grads.attn_bias);
        views.emplace_back(grads.attn_score);
        views.emplace_back(grads.attn_out.data());
    }
    return views;
}

struct ValidationScore {
    double precision = 0.0;
    double mrr = 0.0;
};

inline ValidationScore validate(const std::vector<Example>& examples, const Matrix& phi,
                                const ModelParams& params, int k, int threads) {
    if (examples.empty()) return {};
    std::vector<std::size_t> ranks(examples.size());
    const auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const SessionGraph sg = build_session_graph(examples[i].prefix);
            const ForwardTrace trace = forward(sg, phi, params);
            ranks[i] = rank_of_label(trace.logits, examples[i].label);
        }
    };
    if (threads <= 1) {
        worker(0, examples.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk =
            (examples.size() + static_cast<std::size_t>(threads) - 1) /
            static_cast<std::size_t>(threads);
        for (int t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(examples.size(), t * chunk);
            const std::size_t end = std::min(examples.size(), begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (std::thread& t : pool) t.join();
    }
    const MetricReport report = metrics_at_k(ranks, k);
    return {report.precision, report.mrr};
}

}  // namespace detail

/// Mini-batch Adam over the augmented training examples. The epoch order is
/// reshuffled per seed, gradients within a batch are reduced in a fixed
/// order, and the best-validation parameters are returned (early stop after
/// `patience` stale epochs).
inline TrainResult train(const SessionDataset& dataset, const Matrix& phi_in,
                         const ModelConfig& model_cfg, const TrainConfig& cfg) {
    if (dataset.train.empty()) throw DataError("training split is empty");

    ModelParams params = init_params(dataset.item_count(), model_cfg, cfg.seed);
    Matrix phi = phi_in;
    if (cfg.bias_mode == BiasMode::FineTunePhiNoBias) params.beta.fill(0.0);

    detail::Adam adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    const auto param_views = detail::trainable_views(params, phi, cfg.bias_mode);

    std::vector<std::size_t> order(dataset.train.size());
    std::iota(order.begin(), order.end(), 0);

    const int threads = std::max(1, cfg.threads);
    std::vector<ModelGrads> shard_grads;
    for (int t = 0; t < threads; ++t) shard_grads.push_back(ModelGrads::zeros_like(params));
    std::vector<double> shard_loss(static_cast<std::size_t>(threads), 0.0);

    TrainResult result;
    ModelParams best_params = params;
    Matrix best_phi = phi;
    int stale_epochs = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const std::size_t batch = stop - start;

            const auto worker = [&](int shard, std::size_t lo, std::size_t hi) {
                shard_grads[static_cast<std::size_t>(shard)].zero();
                shard_loss[static_cast<std::size_t>(shard)] = 0.0;
                for (std::size_t i = lo; i < hi; ++i) {
                    const Example& ex = dataset.train[order[i]];
                    const SessionGraph sg = build_session_graph(ex.prefix);
                    const ForwardTrace trace = forward(sg, phi, params);
                    shard_loss[static_cast<std::size_t>(shard)] +=
                        loss_from_probs(trace.probs, ex.label, model_cfg.loss);
                    accumulate_gradients(trace, ex.label, params, phi,
                                         shard_grads[static_cast<std::size_t>(shard)],
                                         model_cfg.loss);
                }
            };
            if (threads == 1) {
                worker(0, start, stop);
            } else {
                std::vector<std::thread> pool;
                const std::size_t chunk =
                    (batch + static_cast<std::size_t>(threads) - 1) /
                    static_cast<std::size_t>(threads);
                for (int t = 0; t < threads; ++t) {
                    const std::size_t lo = std::min(stop, start + t * chunk);
                    const std::size_t hi = std::min(stop, lo + chunk);
                    if (lo < hi) {
                        pool.emplace_back(worker, t, lo, hi);
                    } else {
                        shard_grads[static_cast<std::size_t>(t)].zero();
                        shard_loss[static_cast<std::size_t>(t)] = 0.0;
                    }
                }
                for (std::thread& t : pool) t.join();
                // Deterministic reduction in shard order.
                const auto dst = detail::gradient_views(shard_grads[0], params);
                for (int t = 1; t < threads; ++t) {
                    const auto src = detail::gradient_views(
                        shard_grads[static_cast<std::size_t>(t)], params);
                    for (std::size_t s = 0; s < src.size(); ++s) {
                        for (std::size_t j = 0; j < src[s].size(); ++j) dst[s][j] += src[s][j];
                    }
                    shard_loss[0] += shard_loss[static_cast<std::size_t>(t)];
                }
            }
            epoch_loss += shard_loss[0];

            const double scale = 1.0 / static_cast<double>(batch);
            const auto grad_views = detail::gradient_views(shard_grads[0], params);
            std::vector<std::span<const double>> grad_reads;
            for (const auto view : grad_views) {
                for (double& g : view) g *= scale;
                grad_reads.emplace_back(view);
            }
            adam.step(param_views, grad_reads);
        }

        const auto val = detail::validate(dataset.validation, phi, params, cfg.validation_k,
                                          threads);
        result.history.push_back(EpochLog{
            epoch_loss / static_cast<double>(dataset.train.size()), val.precision, val.mrr});

        if (dataset.validation.empty()) {
            // Nothing to select on: keep the latest parameters, no early stop.
            result.best_epoch = epoch;
            best_params = params;
            best_phi = phi;
            continue;
        }
        if (result.best_epoch < 0 || val.precision > result.best_val_precision) {
            result.best_val_precision = val.precision;
            result.best_epoch = epoch;
            best_params = params;
            best_phi = phi;
            stale_epochs = 0;
        } else if (++stale_epochs >= cfg.patience) {
            break;
        }
    }

    result.optimizer_steps = adam.steps();
    result.params = std::move(best_params);
    result.phi = std::move(best_phi);
    return result;
}

/// Top-k items by logit for a prefix; equal logits rank the lower index first.
inline std::vector<std::pair<ItemId, double>> recommend(const std::vector<ItemId>& prefix,
                                                        std::size_t k, const Matrix& phi,
                                                        const ModelParams& params) {
    const SessionGraph sg = build_session_graph(prefix);
    const ForwardTrace trace = forward(sg, phi, params);
    std::vector<ItemId> order(trace.logits.size());
    std::iota(order.begin(), order.end(), 0);
    k = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](ItemId a, ItemId b) {
                          const double la = trace.logits[static_cast<std::size_t>(a)];
                          const double lb = trace.logits[static_cast<std::size_t>(b)];
                          return la != lb ? la > lb : a < b;
                      });
    std::vector<std::pair<ItemId, double>> top;
    top.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        top.emplace_back(order[i], trace.logits[static_cast<std::size_t>(order[i])]);
    }
    return top;
}

}  // namespace sessrec
