#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sessrec/dataio.hpp"
#include "sessrec/eval.hpp"
#include "sessrec/linalg.hpp"
#include "sessrec/rng.hpp"
#include "sessrec/session_graph.hpp"

namespace sessrec {

enum class ReadoutKind { ExpDecay, Last, Mean, Sum, Attention };

inline const char* readout_name(ReadoutKind k) {
    switch (k) {
        case ReadoutKind::ExpDecay: return "exp_decay";
        case ReadoutKind::Last: return "last";
        case ReadoutKind::Mean: return "mean";
        case ReadoutKind::Sum: return "sum";
        case ReadoutKind::Attention: return "attention";
    }
    return "?";
}

inline std::optional<ReadoutKind> readout_from_name(const std::string& name) {
    for (const ReadoutKind k : {ReadoutKind::ExpDecay, ReadoutKind::Last, ReadoutKind::Mean,
                                ReadoutKind::Sum, ReadoutKind::Attention}) {
        if (name == readout_name(k)) return k;
    }
    return std::nullopt;
}

struct ReadoutConfig {
    ReadoutKind kind = ReadoutKind::ExpDecay;
    double tau = 1.0;  // decay temperature; only ExpDecay reads it
};

/// Training objective. SoftmaxNll is the standard -log p[label]; BinaryPerItem
/// treats the softmax outputs as independent per-item binary targets summed
/// over the catalog (kept selectable for comparison).
enum class LossKind { SoftmaxNll, BinaryPerItem };

struct ModelConfig {
    int dim = 100;
    int steps = 1;  // message-passing rounds (T)
    ReadoutConfig readout;
    LossKind loss = LossKind::SoftmaxNll;
};

/// Learnable tensors. The per-item table `beta` biases the frozen pre-trained
/// embedding toward the next-item task; the six gate maps drive the gated
/// message-passing update; readout extras exist only for the kinds that
/// learn parameters.
struct ModelParams {
    int dim = 0;
    int steps = 1;
    ReadoutConfig readout;

    Matrix beta;  // item_count x dim

    Matrix update_msg, reset_msg, cand_msg;        // dim x 2*dim
    Matrix update_state, reset_state, cand_state;  // dim x dim
    Vector msg_bias;                               // 2*dim

    Matrix sum_proj;              // dim x dim       (Sum readout)
    Matrix attn_last, attn_pos;   // dim x dim       (Attention readout)
    Vector attn_bias, attn_score; // dim
    Matrix attn_out;              // dim x 2*dim
};

inline ModelParams init_params(ItemId item_count, const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "init"));
    const auto d = static_cast<std::size_t>(cfg.dim);
    const auto gaussian = [&](std::size_t r, std::size_t c) {
        return Matrix::gaussian(r, c, 0.0, 0.1, rng);
    };

    ModelParams p;
    p.dim = cfg.dim;
    p.steps = cfg.steps;
    p.readout = cfg.readout;
    p.beta = gaussian(static_cast<std::size_t>(item_count), d);
    p.update_msg = gaussian(d, 2 * d);
    p.reset_msg = gaussian(d, 2 * d);
    p.cand_msg = gaussian(d, 2 * d);
    p.update_state = gaussian(d, d);
    p.reset_state = gaussian(d, d);
    p.cand_state = gaussian(d, d);
    p.msg_bias.assign(2 * d, 0.0);
    for (double& x : p.msg_bias) x = rng.gaussian(0.0, 0.1);

    if (cfg.readout.kind == ReadoutKind::Sum) {
        p.sum_proj = gaussian(d, d);
    } else if (cfg.readout.kind == ReadoutKind::Attention) {
        p.attn_last = gaussian(d, d);
        p.attn_pos = gaussian(d, d);
        p.attn_bias.assign(d, 0.0);
        for (double& x : p.attn_bias) x = rng.gaussian(0.0, 0.1);
        p.attn_score.assign(d, 0.0);
        for (double& x : p.attn_score) x = rng.gaussian(0.0, 0.1);
        p.attn_out = gaussian(d, 2 * d);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

/// Node states start as the frozen embedding plus the learnable bias.
inline Matrix init_node_states(const SessionGraph& sg, const Matrix& phi, const Matrix& beta) {
    const std::size_t d = phi.cols();
    Matrix states(sg.node_count(), d);
    for (std::size_t v = 0; v < sg.node_count(); ++v) {
        const auto item = static_cast<std::size_t>(sg.nodes[v]);
        for (std::size_t j = 0; j < d; ++j) states(v, j) = phi(item, j) + beta(item, j);
    }
    return states;
}

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// One gated update; fills the per-node message/gate/candidate records.
inline void message_pass_step_traced(const SessionGraph& sg, const Matrix& h_prev,
                                     const ModelParams& params, Matrix& msg, Matrix& update,
                                     Matrix& reset, Matrix& cand, Matrix& h_next) {
    const std::size_t n = sg.node_count();
    const std::size_t d = static_cast<std::size_t>(params.dim);
    Vector gated(d);
    Vector acc(d);

    for (std::size_t v = 0; v < n; ++v) {
        auto msg_row = msg.row(v);
        // Aggregate neighbor states along outgoing then incoming edges.
        std::fill(msg_row.begin(), msg_row.end(), 0.0);
        for (std::size_t u = 0; u < n; ++u) {
            const double wo = sg.weights_out(v, u);
            if (wo != 0.0) axpy(wo, h_prev.row(u), msg_row.subspan(0, d));
            const double wi = sg.weights_in(v, u);
            if (wi != 0.0) axpy(wi, h_prev.row(u), msg_row.subspan(d, d));
        }
        for (std::size_t j = 0; j < 2 * d; ++j) msg_row[j] += params.msg_bias[j];

        const auto h_v = h_prev.row(v);
        auto z = update.row(v);
        auto r = reset.row(v);
        auto c = cand.row(v);

        matvec(params.update_msg, msg_row, z);
        matvec(params.update_state, h_v, acc);
        for (std::size_t j = 0; j < d; ++j) z[j] = sigmoid(z[j] + acc[j]);

        matvec(params.reset_msg, msg_row, r);
        matvec(params.reset_state, h_v, acc);
        for (std::size_t j = 0; j < d; ++j) r[j] = sigmoid(r[j] + acc[j]);

        for (std::size_t j = 0; j < d; ++j) gated[j] = r[j] * h_v[j];
        matvec(params.cand_msg, msg_row, c);
        matvec(params.cand_state, gated, acc);
        for (std::size_t j = 0; j < d; ++j) c[j] = std::tanh(c[j] + acc[j]);

        auto out = h_next.row(v);
        for (std::size_t j = 0; j < d; ++j) out[j] = (1.0 - z[j]) * h_v[j] + z[j] * c[j];
    }
}

}  // namespace detail

/// One round of gated message passing over the session graph.
inline Matrix message_pass_step(const SessionGraph& sg, const Matrix& h_prev,
                                const ModelParams& params) {
    const std::size_t n = sg.node_count();
    const auto d = static_cast<std::size_t>(params.dim);
    Matrix msg(n, 2 * d), update(n, d), reset(n, d), cand(n, d), h_next(n, d);
    detail::message_pass_step_traced(sg, h_prev, params, msg, update, reset, cand, h_next);
    return h_next;
}

/// Position weights of the decay readout: softmax over sequence positions of
/// -(L - pos)/tau, so later clicks dominate and the weights never decrease
/// with position.
inline Vector exp_decay_weights(std::size_t seq_len, double tau) {
    Vector w(seq_len);
    double total = 0.0;
    for (std::size_t pos = 0; pos < seq_len; ++pos) {
        w[pos] = std::exp(-static_cast<double>(seq_len - 1 - pos) / tau);
        total += w[pos];
    }
    for (double& x : w) x /= total;
    return w;
}

/// Collapses per-node states into one session vector.
inline Vector readout(const SessionGraph& sg, const Matrix& h_final, const ReadoutConfig& cfg,
                      const ModelParams& params) {
    const std::size_t d = h_final.cols();
    const std::size_t len = sg.seq_len;
    Vector session(d, 0.0);

    switch (cfg.kind) {
        case ReadoutKind::ExpDecay: {
            const Vector w = exp_decay_weights(len, cfg.tau);
            for (std::size_t pos = 0; pos < len; ++pos) {
                axpy(w[pos], h_final.row(sg.alias[pos]), std::span<double>(session));
            }
            return session;
        }
        case ReadoutKind::Last: {
            const auto row = h_final.row(sg.alias[len - 1]);
            session.assign(row.begin(), row.end());
            return session;
        }
        case ReadoutKind::Mean: {
            for (std::size_t pos = 0; pos < len; ++pos) {
                axpy(1.0 / static_cast<double>(len), h_final.row(sg.alias[pos]),
                     std::span<double>(session));
            }
            return session;
        }
        case ReadoutKind::Sum: {
            Vector pooled(d, 0.0);
            for (std::size_t pos = 0; pos < len; ++pos) {
                axpy(1.0, h_final.row(sg.alias[pos]), std::span<double>(pooled));
            }
            matvec(params.sum_proj, pooled, session);
            return session;
        }
        case ReadoutKind::Attention: {
            // Soft attention against the last click; the per-position scores
            // are used unnormalized and the pooled vector is fused with the
            // last state through a linear map.
            const auto h_last = h_final.row(sg.alias[len - 1]);
            Vector pooled(d, 0.0);
            Vector gate(d), proj_last(d), proj_pos(d);
            matvec(params.attn_last, h_last, proj_last);
            for (std::size_t pos = 0; pos < len; ++pos) {
                const auto h_pos = h_final.row(sg.alias[pos]);
                matvec(params.attn_pos, h_pos, proj_pos);
                for (std::size_t j = 0; j < d; ++j) {
                    gate[j] = detail::sigmoid(proj_last[j] + proj_pos[j] + params.attn_bias[j]);
                }
                const double alpha = dot(params.attn_score, gate);
                axpy(alpha, h_pos, std::span<double>(pooled));
            }
            Vector cat(2 * d);
            std::copy(h_last.begin(), h_last.end(), cat.begin());
            std::copy(pooled.begin(), pooled.end(), cat.begin() + static_cast<std::ptrdiff_t>(d));
            matvec(params.attn_out, cat, session);
            return session;
        }
    }
    return session;
}

/// Full-catalog logits, reusing the initial item representations:
/// logit(i) = session . (phi(i) + beta(i)).
inline Vector score(const Vector& session, const Matrix& phi, const Matrix& beta) {
    const std::size_t m = phi.rows();
    const std::size_t d = phi.cols();
    Vector logits(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto p = phi.row(i);
        const auto b = beta.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += session[j] * (p[j] + b[j]);
        logits[i] = s;
    }
    return logits;
}

inline Vector softmax(const Vector& logits) {
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    Vector probs(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - max_logit);
        total += probs[i];
    }
    for (double& p : probs) p /= total;
    return probs;
}

inline double loss_from_probs(const Vector& probs, ItemId label,
                              LossKind kind = LossKind::SoftmaxNll) {
    constexpr double kFloor = 1e-12;
    const auto y = static_cast<std::size_t>(label);
    if (kind == LossKind::SoftmaxNll) {
        return -std::log(std::max(probs[y], kFloor));
    }
    double total = -std::log(std::max(probs[y], kFloor));
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (i == y) continue;
        total -= std::log(std::max(1.0 - probs[i], kFloor));
    }
    return total;
}

/// Everything the backward pass needs from one forward evaluation.
struct ForwardTrace {
    const SessionGraph* graph = nullptr;
    std::vector<Matrix> states;    // steps+1 entries: h^0 .. h^T
    std::vector<Matrix> messages;  // per step, node x 2d
    std::vector<Matrix> update_gate, reset_gate, candidate;
    Vector session_vec;
    Vector logits;
    Vector probs;
};

inline ForwardTrace forward(const SessionGraph& sg, const Matrix& phi, const ModelParams& params) {
    const std::size_t n = sg.node_count();
    const auto d = static_cast<std::size_t>(params.dim);

    ForwardTrace trace;
    trace.graph = &sg;
    trace.states.reserve(static_cast<std::size_t>(params.steps) + 1);
    trace.states.push_back(init_node_states(sg, phi, params.beta));
    for (int t = 0; t < params.steps; ++t) {
        trace.messages.emplace_back(n, 2 * d);
        trace.update_gate.emplace_back(n, d);
        trace.reset_gate.emplace_back(n, d);
        trace.candidate.emplace_back(n, d);
        Matrix h_next(n, d);
        detail::message_pass_step_traced(sg, trace.states.back(), params, trace.messages.back(),
                                         trace.update_gate.back(), trace.reset_gate.back(),
                                         trace.candidate.back(), h_next);
        trace.states.push_back(std::move(h_next));
    }
    trace.session_vec = readout(sg, trace.states.back(), params.readout, params);
    trace.logits = score(trace.session_vec, phi, params.beta);
    trace.probs = softmax(trace.logits);
    return trace;
}

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

/// Gradients for every learnable tensor. `beta` is the gradient of the
/// additive per-item table; in fine-tuning mode the trainer applies it to the
/// embedding table instead. The frozen embedding itself never receives one.
struct ModelGrads {
    Matrix beta;
    Matrix update_msg, reset_msg, cand_msg;
    Matrix update_state, reset_state, cand_state;
    Vector msg_bias;
    Matrix sum_proj;
    Matrix attn_last, attn_pos;
    Vector attn_bias, attn_score;
    Matrix attn_out;

    static ModelGrads zeros_like(const ModelParams& p) {
        ModelGrads g;
        g.beta = Matrix(p.beta.rows(), p.beta.cols());
        g.update_msg = Matrix(p.update_msg.rows(), p.update_msg.cols());
        g.reset_msg = Matrix(p.reset_msg.rows(), p.reset_msg.cols());
        g.cand_msg = Matrix(p.cand_msg.rows(), p.cand_msg.cols());
        g.update_state = Matrix(p.update_state.rows(), p.update_state.cols());
        g.reset_state = Matrix(p.reset_state.rows(), p.reset_state.cols());
        g.cand_state = Matrix(p.cand_state.rows(), p.cand_state.cols());
        g.msg_bias.assign(p.msg_bias.size(), 0.0);
        g.sum_proj = Matrix(p.sum_proj.rows(), p.sum_proj.cols());
        g.attn_last = Matrix(p.attn_last.rows(), p.attn_last.cols());
        g.attn_pos = Matrix(p.attn_pos.rows(), p.attn_pos.cols());
        g.attn_bias.assign(p.attn_bias.size(), 0.0);
        g.attn_score.assign(p.attn_score.size(), 0.0);
        g.attn_out = Matrix(p.attn_out.rows(), p.attn_out.cols());
        return g;
    }

    void zero() {
        beta.fill(0.0);
        update_msg.fill(0.0);
        reset_msg.fill(0.0);
        cand_msg.fill(0.0);
        update_state.fill(0.0);
        reset_state.fill(0.0);
        cand_state.fill(0.0);
        std::fill(msg_bias.begin(), msg_bias.end(), 0.0);
        sum_proj.fill(0.0);
        attn_last.fill(0.0);
        attn_pos.fill(0.0);
        std::fill(attn_bias.begin(), attn_bias.end(), 0.0);
        std::fill(attn_score.begin(), attn_score.end(), 0.0);
        attn_out.fill(0.0);
    }
};

namespace detail {

/// Distributes the session-vector gradient back onto final node states and
/// the readout parameters. Attention intermediates are recomputed from the
/// final states rather than cached.
inline void readout_backward(const SessionGraph& sg, const Matrix& h_final,
                             const ModelParams& params, const Vector& dsession,
                             Matrix& dh_final, ModelGrads& grads) {
    const std::size_t d = h_final.cols();
    const std::size_t len = sg.seq_len;

    switch (params.readout.kind) {
        case ReadoutKind::ExpDecay: {
            const Vector w = exp_decay_weights(len, params.readout.tau);
            for (std::size_t pos = 0; pos < len; ++pos) {
                axpy(w[pos], dsession, dh_final.row(sg.alias[pos]));
            }
            return;
        }
        case ReadoutKind::Last: {
            axpy(1.0, dsession, dh_final.row(sg.alias[len - 1]));
            return;
        }
        case ReadoutKind::Mean: {
            for (std::size_t pos = 0; pos < len; ++pos) {
                axpy(1.0 / static_cast<double>(len), dsession, dh_final.row(sg.alias[pos]));
            }
            return;
        }
        case ReadoutKind::Sum: {
            Vector pooled(d, 0.0);
            for (std::size_t pos = 0; pos < len; ++pos) {
                axpy(1.0, h_final.row(sg.alias[pos]), std::span<double>(pooled));
            }
            outer_add(grads.sum_proj, dsession, pooled);
            Vector dpooled(d, 0.0);
            matvec_transposed_add(params.sum_proj, dsession, dpooled);
            for (std::size_t pos = 0; pos < len; ++pos) {
                axpy(1.0, dpooled, dh_final.row(sg.alias[pos]));
            }
            return;
        }
        case ReadoutKind::Attention: {
            const auto h_last = h_final.row(sg.alias[len - 1]);
            Vector proj_last(d), proj_pos(d);
            matvec(params.attn_last, h_last, proj_last);

            // Recompute per-position gates and the pooled vector.
            std::vector<Vector> gates(len, Vector(d));
            Vector alphas(len);
            Vector pooled(d, 0.0);
            for (std::size_t pos = 0; pos < len; ++pos) {
                const auto h_pos = h_final.row(sg.alias[pos]);
                matvec(params.attn_pos, h_pos, proj_pos);
                for (std::size_t j = 0; j < d; ++j) {
                    gates[pos][j] =
                        sigmoid(proj_last[j] + proj_pos[j] + params.attn_bias[j]);
                }
                alphas[pos] = dot(params.attn_score, gates[pos]);
                axpy(alphas[pos], h_pos, std::span<double>(pooled));
            }

            Vector cat(2 * d);
            std::copy(h_last.begin(), h_last.end(), cat.begin());
            std::copy(pooled.begin(), pooled.end(), cat.begin() + static_cast<std::ptrdiff_t>(d));
            outer_add(grads.attn_out, dsession, cat);

            Vector dcat(2 * d, 0.0);
            matvec_transposed_add(params.attn_out, dsession, dcat);
            Vector dh_last(dcat.begin(), dcat.begin() + static_cast<std::ptrdiff_t>(d));
            const std::span<const double> dpooled(dcat.data() + d, d);

            Vector dgate(d), dact(d);
            for (std::size_t pos = 0; pos < len; ++pos) {
                const auto h_pos = h_final.row(sg.alias[pos]);
                const double dalpha = dot(dpooled, h_pos);
                axpy(alphas[pos], dpooled, dh_final.row(sg.alias[pos]));

                axpy(dalpha, gates[pos], std::span<double>(grads.attn_score));
                for (std::size_t j = 0; j < d; ++j) {
                    dgate[j] = dalpha * params.attn_score[j];
                    dact[j] = dgate[j] * gates[pos][j] * (1.0 - gates[pos][j]);
                    grads.attn_bias[j] += dact[j];
                }
                outer_add(grads.attn_last, dact, h_last);
                outer_add(grads.attn_pos, dact, h_pos);
                matvec_transposed_add(params.attn_last, dact, dh_last);
                matvec_transposed_add(params.attn_pos, dact, dh_final.row(sg.alias[pos]));
            }
            axpy(1.0, dh_last, dh_final.row(sg.alias[len - 1]));
            return;
        }
    }
}

}  // namespace detail

/// Gradient of the loss at the logits for the configured objective.
inline Vector loss_logit_grad(const Vector& probs, ItemId label, LossKind kind) {
    const auto y = static_cast<std::size_t>(label);
    Vector dlogits(probs.size());
    if (kind == LossKind::SoftmaxNll) {
        for (std::size_t i = 0; i < probs.size(); ++i) dlogits[i] = probs[i];
        dlogits[y] -= 1.0;
        return dlogits;
    }
    // Per-item binary objective through the softmax Jacobian:
    // dL/dlogit_j = p_j * (dL/dp_j - sum_i p_i dL/dp_i).
    constexpr double kFloor = 1e-12;
    Vector dprob(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        dprob[i] = i == y ? -1.0 / std::max(probs[i], kFloor)
                          : 1.0 / std::max(1.0 - probs[i], kFloor);
    }
    double weighted = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) weighted += probs[i] * dprob[i];
    for (std::size_t i = 0; i < probs.size(); ++i) {
        dlogits[i] = probs[i] * (dprob[i] - weighted);
    }
    return dlogits;
}

/// Accumulates exact gradients of the loss at `label` into `grads`.
inline void accumulate_gradients(const ForwardTrace& trace, ItemId label, const ModelParams& params,
                                 const Matrix& phi, ModelGrads& grads,
                                 LossKind loss_kind = LossKind::SoftmaxNll) {
    const SessionGraph& sg = *trace.graph;
    const std::size_t n = sg.node_count();
    const auto d = static_cast<std::size_t>(params.dim);

    const Vector dlogits = loss_logit_grad(trace.probs, label, loss_kind);

    // Score layer: logits_i = session . (phi_i + beta_i).
    Vector dsession(d, 0.0);
    for (std::size_t i = 0; i < phi.rows(); ++i) {
        const double g = dlogits[i];
        if (g == 0.0) continue;
        const auto p = phi.row(i);
        const auto b = params.beta.row(i);
        auto db = grads.beta.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            dsession[j] += g * (p[j] + b[j]);
            db[j] += g * trace.session_vec[j];
        }
    }

    Matrix dh(n, d);
    detail::readout_backward(sg, trace.states.back(), params, dsession, dh, grads);

    // Walk the message-passing steps backwards.
    Vector dz(d), dr(d), dc(d), da(d), dgated(d), dmsg(2 * d);
    for (int t = params.steps - 1; t >= 0; --t) {
        const Matrix& h_prev = trace.states[static_cast<std::size_t>(t)];
        const Matrix& msg = trace.messages[static_cast<std::size_t>(t)];
        const Matrix& update = trace.update_gate[static_cast<std::size_t>(t)];
        const Matrix& reset = trace.reset_gate[static_cast<std::size_t>(t)];
        const Matrix& cand = trace.candidate[static_cast<std::size_t>(t)];
        Matrix dh_prev(n, d);

        for (std::size_t v = 0; v < n; ++v) {
            const auto dh_v = dh.row(v);
            const auto h_v = h_prev.row(v);
            const auto z = update.row(v);
            const auto r = reset.row(v);
            const auto c = cand.row(v);
            const auto m_v = msg.row(v);
            auto dh_prev_v = dh_prev.row(v);
            std::fill(dmsg.begin(), dmsg.end(), 0.0);

            for (std::size_t j = 0; j < d; ++j) {
                dz[j] = dh_v[j] * (c[j] - h_v[j]);
                dc[j] = dh_v[j] * z[j];
                dh_prev_v[j] += dh_v[j] * (1.0 - z[j]);
            }

            // Candidate branch: c = tanh(cand_msg m + cand_state (r .* h)).
            for (std::size_t j = 0; j < d; ++j) da[j] = dc[j] * (1.0 - c[j] * c[j]);
            outer_add(grads.cand_msg, da, m_v);
            matvec_transposed_add(params.cand_msg, da, dmsg);
            for (std::size_t j = 0; j < d; ++j) dgated[j] = r[j] * h_v[j];
            outer_add(grads.cand_state, da, dgated);
            std::fill(dgated.begin(), dgated.end(), 0.0);
            matvec_transposed_add(params.cand_state, da, dgated);
            for (std::size_t j = 0; j < d; ++j) {
                dr[j] = dgated[j] * h_v[j];
                dh_prev_v[j] += dgated[j] * r[j];
            }

            // Update gate.
            for (std::size_t j = 0; j < d; ++j) da[j] = dz[j] * z[j] * (1.0 - z[j]);
            outer_add(grads.update_msg, da, m_v);
            matvec_transposed_add(params.update_msg, da, dmsg);
            outer_add(grads.update_state, da, h_v);
            matvec_transposed_add(params.update_state, da, dh_prev_v);

            // Reset gate.
            for (std::size_t j = 0; j < d; ++j) da[j] = dr[j] * r[j] * (1.0 - r[j]);
            outer_add(grads.reset_msg, da, m_v);
            matvec_transposed_add(params.reset_msg, da, dmsg);
            outer_add(grads.reset_state, da, h_v);
            matvec_transposed_add(params.reset_state, da, dh_prev_v);

            // Message: msg = [W_out_v H ; W_in_v H] + bias.
            axpy(1.0, dmsg, std::span<double>(grads.msg_bias));
            const std::span<const double> dout(dmsg.data(), d);
            const std::span<const double> din(dmsg.data() + d, d);
            for (std::size_t u = 0; u < n; ++u) {
                const double wo = sg.weights_out(v, u);
                if (wo != 0.0) axpy(wo, dout, dh_prev.row(u));
                const double wi = sg.weights_in(v, u);
                if (wi != 0.0) axpy(wi, din, dh_prev.row(u));
            }
        }
        dh = std::move(dh_prev);
    }

    // Initial states: h^0(v) = phi(v) + beta(v); only the bias table learns.
    for (std::size_t v = 0; v < n; ++v) {
        axpy(1.0, dh.row(v), grads.beta.row(static_cast<std::size_t>(sg.nodes[v])));
    }
}

/// Fresh gradients for one example.
inline ModelGrads backward(const ForwardTrace& trace, ItemId label, const ModelParams& params,
                           const Matrix& phi, LossKind loss_kind = LossKind::SoftmaxNll) {
    ModelGrads grads = ModelGrads::zeros_like(params);
    accumulate_gradients(trace, label, params, phi, grads, loss_kind);
    return grads;
}

}  // namespace sessrec
