#include "barembed/model.hpp"

#include <cmath>
#include <limits>

#include "barembed/errors.hpp"
#include "barembed/rng.hpp"

namespace barembed::model {

namespace {

constexpr double kLnEps = 1e-9;
constexpr double kInitStd = 0.02;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

// out = gamma .* xhat + beta, xhat = (x - mu) / sqrt(var + eps), biased var.
void layer_norm(const MatrixXd& x, const MatrixXd& gamma, const MatrixXd& beta,
                MatrixXd& out, MatrixXd& xhat, VectorXd& inv_std) {
    const auto T = x.rows();
    const auto H = x.cols();
    out.resize(T, H);
    xhat.resize(T, H);
    inv_std.resize(T);
    for (Eigen::Index t = 0; t < T; ++t) {
        const double mu = x.row(t).mean();
        const double var = (x.row(t).array() - mu).square().mean();
        const double is = 1.0 / std::sqrt(var + kLnEps);
        inv_std(t) = is;
        xhat.row(t) = (x.row(t).array() - mu) * is;
        out.row(t) = xhat.row(t).cwiseProduct(gamma.row(0)) + beta.row(0);
    }
}

// Returns dx and accumulates dgamma / dbeta.
MatrixXd layer_norm_backward(const MatrixXd& dout, const MatrixXd& xhat, const VectorXd& inv_std,
                             const MatrixXd& gamma, MatrixXd& dgamma, MatrixXd& dbeta) {
    const auto T = dout.rows();
    const auto H = dout.cols();
    MatrixXd dx(T, H);
    for (Eigen::Index t = 0; t < T; ++t) {
        dgamma.row(0) += dout.row(t).cwiseProduct(xhat.row(t));
        dbeta.row(0) += dout.row(t);
        const Eigen::RowVectorXd dxhat = dout.row(t).cwiseProduct(gamma.row(0));
        const double m1 = dxhat.mean();
        const double m2 = dxhat.cwiseProduct(xhat.row(t)).mean();
        dx.row(t) = (dxhat.array() - m1 - xhat.row(t).array() * m2) * inv_std(t);
    }
    return dx;
}

MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
    const double keep = 1.0 - rate;
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = rng.next_double() < rate ? 0.0 : 1.0 / keep;
    return m;
}

} // namespace

void ModelConfig::validate() const {
    if (num_layers <= 0 || hidden_size <= 0 || num_heads <= 0 || ffn_size <= 0 || max_seq_len <= 0)
        throw InternalError("model dimensions must be positive");
    if (hidden_size % num_heads != 0)
        throw InternalError("hidden_size must be divisible by num_heads");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw InternalError("dropout_rate must be in [0, 1)");
    if (vocab_size != remi::kVocabSize)
        throw InternalError("vocab_size must match the token vocabulary");
}

bool ModelConfig::same_shape(const ModelConfig& other) const {
    return num_layers == other.num_layers && hidden_size == other.hidden_size &&
           num_heads == other.num_heads && ffn_size == other.ffn_size &&
           max_seq_len == other.max_seq_len && vocab_size == other.vocab_size;
}

Parameters Parameters::init(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    const int H = config.hidden_size;
    const int F = config.ffn_size;
    Parameters p;
    p.tok_emb.resize(config.vocab_size, H);
    p.pos_emb.resize(config.max_seq_len, H);
    p.emb_ln_g.resize(1, H);
    p.emb_ln_b.resize(1, H);
    p.layers.resize(config.num_layers);
    for (auto& l : p.layers) {
        l.wq.resize(H, H); l.wk.resize(H, H); l.wv.resize(H, H); l.wo.resize(H, H);
        l.bq.resize(1, H); l.bk.resize(1, H); l.bv.resize(1, H); l.bo.resize(1, H);
        l.ln1_g.resize(1, H); l.ln1_b.resize(1, H);
        l.w1.resize(H, F); l.b1.resize(1, F);
        l.w2.resize(F, H); l.b2.resize(1, H);
        l.ln2_g.resize(1, H); l.ln2_b.resize(1, H);
    }
    p.mlm_bias.resize(1, remi::kMusicalVocabSize);

    Rng rng(seed);
    for_each_tensor(p, [&rng](const std::string& name, MatrixXd& m) {
        const bool is_gain = name.find("ln") != std::string::npos && name.back() == 'g';
        const bool is_zero = name.back() == 'b' || name.find("bias") != std::string::npos ||
                             name.find(".b") != std::string::npos;
        if (is_gain) {
            m.setOnes();
        } else if (is_zero) {
            m.setZero();
        } else {
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index j = 0; j < m.cols(); ++j)
                    m(i, j) = rng.next_gaussian(0.0, kInitStd);
        }
    });
    return p;
}

Parameters Parameters::zeros_like(const Parameters& shape) {
    Parameters p = shape;
    for_each_tensor(p, [](const std::string&, MatrixXd& m) { m.setZero(); });
    return p;
}

bool Parameters::all_finite() const {
    bool ok = true;
    for_each_tensor(*this, [&ok](const std::string&, const MatrixXd& m) {
        if (!m.allFinite()) ok = false;
    });
    return ok;
}

void for_each_tensor(Parameters& params, const TensorVisitor& fn) {
    fn("tok_emb", params.tok_emb);
    fn("pos_emb", params.pos_emb);
    fn("emb_ln_g", params.emb_ln_g);
    fn("emb_ln_b", params.emb_ln_b);
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        auto& l = params.layers[i];
        const std::string prefix = "layer" + std::to_string(i) + ".";
        fn(prefix + "wq", l.wq); fn(prefix + "bq", l.bq);
        fn(prefix + "wk", l.wk); fn(prefix + "bk", l.bk);
        fn(prefix + "wv", l.wv); fn(prefix + "bv", l.bv);
        fn(prefix + "wo", l.wo); fn(prefix + "bo", l.bo);
        fn(prefix + "ln1_g", l.ln1_g); fn(prefix + "ln1_b", l.ln1_b);
        fn(prefix + "w1", l.w1); fn(prefix + "b1", l.b1);
        fn(prefix + "w2", l.w2); fn(prefix + "b2", l.b2);
        fn(prefix + "ln2_g", l.ln2_g); fn(prefix + "ln2_b", l.ln2_b);
    }
    fn("mlm_bias", params.mlm_bias);
}

void for_each_tensor(const Parameters& params, const ConstTensorVisitor& fn) {
    for_each_tensor(const_cast<Parameters&>(params),
                    [&fn](const std::string& name, MatrixXd& m) { fn(name, m); });
}

ForwardResult forward(const ModelConfig& config, const Parameters& params,
                      const std::vector<std::vector<int>>& batch,
                      bool dropout_on, std::uint64_t dropout_seed,
                      bool want_logits, bool allow_truncate) {
    config.validate();
    const int H = config.hidden_size;
    const int nh = config.num_heads;
    const int dh = config.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const int pad = remi::vocab().pad_id();

    ForwardResult result;
    result.seqs.resize(batch.size());

    for (std::size_t s = 0; s < batch.size(); ++s) {
        SeqCache& sc = result.seqs[s];
        sc.ids = batch[s];
        if (static_cast<int>(sc.ids.size()) > config.max_seq_len) {
            if (!allow_truncate) throw SequenceTooLong("sequence exceeds max_seq_len");
            sc.ids.resize(config.max_seq_len);
        }
        const int T = static_cast<int>(sc.ids.size());
        if (T == 0) throw InternalError("empty sequence in forward batch");
        sc.real.resize(T);
        for (int t = 0; t < T; ++t) {
            const int id = sc.ids[t];
            if (id < 0 || id >= config.vocab_size) throw InternalError("token id outside vocabulary");
            sc.real[t] = id != pad ? 1 : 0;
            if (sc.real[t]) ++sc.n_real;
        }

        Rng drop_rng(mix_seed(dropout_seed, s));
        const bool drop = dropout_on && config.dropout_rate > 0.0;

        // embeddings
        MatrixXd e(T, H);
        for (int t = 0; t < T; ++t)
            e.row(t) = params.tok_emb.row(sc.ids[t]) + params.pos_emb.row(t);
        sc.hidden.resize(config.num_layers + 1);
        layer_norm(e, params.emb_ln_g, params.emb_ln_b, sc.hidden[0], sc.emb_xhat, sc.emb_inv_std);

        sc.layers.resize(config.num_layers);
        for (int li = 0; li < config.num_layers; ++li) {
            const LayerParams& lp = params.layers[li];
            LayerCache& lc = sc.layers[li];
            lc.x_in = sc.hidden[li];

            lc.q = (lc.x_in * lp.wq).rowwise() + lp.bq.row(0);
            lc.k = (lc.x_in * lp.wk).rowwise() + lp.bk.row(0);
            lc.v = (lc.x_in * lp.wv).rowwise() + lp.bv.row(0);

            lc.ctx.resize(T, H);
            lc.probs.resize(nh);
            if (drop) lc.attn_drop.resize(nh);
            for (int h = 0; h < nh; ++h) {
                const auto qh = lc.q.middleCols(h * dh, dh);
                const auto kh = lc.k.middleCols(h * dh, dh);
                const auto vh = lc.v.middleCols(h * dh, dh);
                MatrixXd scores = qh * kh.transpose() * scale; // [T, T]
                MatrixXd& p = lc.probs[h];
                p.resize(T, T);
                for (int i = 0; i < T; ++i) {
                    double mx = -std::numeric_limits<double>::infinity();
                    for (int j = 0; j < T; ++j)
                        if (sc.real[j] && scores(i, j) > mx) mx = scores(i, j);
                    double total = 0.0;
                    for (int j = 0; j < T; ++j) {
                        const double w = sc.real[j] ? std::exp(scores(i, j) - mx) : 0.0;
                        p(i, j) = w;
                        total += w;
                    }
                    if (total > 0.0) p.row(i) /= total; // all-PAD rows stay zero
                }
                if (drop) {
                    lc.attn_drop[h] = dropout_mask(T, T, config.dropout_rate, drop_rng);
                    lc.ctx.middleCols(h * dh, dh) = p.cwiseProduct(lc.attn_drop[h]) * vh;
                } else {
                    lc.ctx.middleCols(h * dh, dh) = p * vh;
                }
            }

            const MatrixXd attn_out = (lc.ctx * lp.wo).rowwise() + lp.bo.row(0);
            const MatrixXd s1 = lc.x_in + attn_out;
            layer_norm(s1, lp.ln1_g, lp.ln1_b, lc.h1, lc.ln1_xhat, lc.ln1_inv_std);

            lc.u = (lc.h1 * lp.w1).rowwise() + lp.b1.row(0);
            lc.g = lc.u.unaryExpr([](double x) { return gelu(x); });
            MatrixXd g_used = lc.g;
            if (drop) {
                lc.ffn_drop = dropout_mask(T, config.ffn_size, config.dropout_rate, drop_rng);
                g_used = lc.g.cwiseProduct(lc.ffn_drop);
            }
            const MatrixXd f = (g_used * lp.w2).rowwise() + lp.b2.row(0);
            const MatrixXd s2 = lc.h1 + f;
            layer_norm(s2, lp.ln2_g, lp.ln2_b, sc.hidden[li + 1], lc.ln2_xhat, lc.ln2_inv_std);
        }

        if (want_logits) {
            const auto decoder = params.tok_emb.topRows(remi::kMusicalVocabSize);
            sc.logits = (sc.hidden[config.num_layers] * decoder.transpose()).rowwise() +
                        params.mlm_bias.row(0);
        }
    }
    return result;
}

VectorXd pool(const SeqCache& seq, int layer, Pooling mode) {
    const MatrixXd& h = seq.hidden.at(layer);
    if (mode == Pooling::cls) return h.row(0).transpose();
    VectorXd z = VectorXd::Zero(h.cols());
    if (seq.n_real == 0) return z;
    for (Eigen::Index t = 0; t < h.rows(); ++t)
        if (seq.real[t]) z += h.row(t).transpose();
    return z / seq.n_real;
}

MatrixXd pool_backward(const SeqCache& seq, const VectorXd& dpooled, Pooling mode) {
    const int T = static_cast<int>(seq.ids.size());
    MatrixXd dh = MatrixXd::Zero(T, dpooled.size());
    if (mode == Pooling::cls) {
        dh.row(0) = dpooled.transpose();
        return dh;
    }
    if (seq.n_real == 0) return dh;
    const Eigen::RowVectorXd g = dpooled.transpose() / seq.n_real;
    for (int t = 0; t < T; ++t)
        if (seq.real[t]) dh.row(t) = g;
    return dh;
}

void backward(const ModelConfig& config, const Parameters& params,
              const ForwardResult& fwd,
              const std::vector<MatrixXd>& dlogits,
              const std::vector<MatrixXd>& dhidden_last,
              Parameters& grads) {
    const int H = config.hidden_size;
    const int nh = config.num_heads;
    const int dh = config.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    for (std::size_t s = 0; s < fwd.seqs.size(); ++s) {
        const SeqCache& sc = fwd.seqs[s];
        const int T = static_cast<int>(sc.ids.size());

        MatrixXd dhid = MatrixXd::Zero(T, H);
        if (s < dhidden_last.size() && dhidden_last[s].size() > 0) dhid = dhidden_last[s];
        if (s < dlogits.size() && dlogits[s].size() > 0) {
            const MatrixXd& dl = dlogits[s];
            const auto decoder = params.tok_emb.topRows(remi::kMusicalVocabSize);
            dhid += dl * decoder;
            grads.tok_emb.topRows(remi::kMusicalVocabSize) +=
                dl.transpose() * sc.hidden[config.num_layers];
            grads.mlm_bias.row(0) += dl.colwise().sum();
        }

        for (int li = config.num_layers - 1; li >= 0; --li) {
            const LayerParams& lp = params.layers[li];
            const LayerCache& lc = sc.layers[li];
            LayerParams& lg = grads.layers[li];

            // LN2
            MatrixXd ds2 = layer_norm_backward(dhid, lc.ln2_xhat, lc.ln2_inv_std,
                                               lp.ln2_g, lg.ln2_g, lg.ln2_b);
            MatrixXd dh1 = ds2; // residual branch
            // FFN
            MatrixXd g_used = lc.g;
            if (lc.ffn_drop.size() > 0) g_used = lc.g.cwiseProduct(lc.ffn_drop);
            lg.w2 += g_used.transpose() * ds2;
            lg.b2.row(0) += ds2.colwise().sum();
            MatrixXd dg = ds2 * lp.w2.transpose();
            if (lc.ffn_drop.size() > 0) dg = dg.cwiseProduct(lc.ffn_drop);
            const MatrixXd du = dg.cwiseProduct(lc.u.unaryExpr([](double x) { return gelu_grad(x); }));
            lg.w1 += lc.h1.transpose() * du;
            lg.b1.row(0) += du.colwise().sum();
            dh1 += du * lp.w1.transpose();

            // LN1
            MatrixXd ds1 = layer_norm_backward(dh1, lc.ln1_xhat, lc.ln1_inv_std,
                                               lp.ln1_g, lg.ln1_g, lg.ln1_b);
            MatrixXd dx = ds1; // residual branch
            // output projection
            lg.wo += lc.ctx.transpose() * ds1;
            lg.bo.row(0) += ds1.colwise().sum();
            const MatrixXd dctx = ds1 * lp.wo.transpose();

            MatrixXd dq(T, H), dk(T, H), dv(T, H);
            for (int h = 0; h < nh; ++h) {
                const auto qh = lc.q.middleCols(h * dh, dh);
                const auto kh = lc.k.middleCols(h * dh, dh);
                const auto vh = lc.v.middleCols(h * dh, dh);
                const auto dch = dctx.middleCols(h * dh, dh);
                const MatrixXd& p = lc.probs[h];

                MatrixXd p_used = p;
                if (!lc.attn_drop.empty()) p_used = p.cwiseProduct(lc.attn_drop[h]);
                dv.middleCols(h * dh, dh) = p_used.transpose() * dch;
                MatrixXd dp = dch * vh.transpose(); // [T, T]
                if (!lc.attn_drop.empty()) dp = dp.cwiseProduct(lc.attn_drop[h]);
                // softmax backward, row-wise; masked columns have p == 0
                MatrixXd dscore(T, T);
                for (int i = 0; i < T; ++i) {
                    const double dot = dp.row(i).cwiseProduct(p.row(i)).sum();
                    dscore.row(i) = p.row(i).array() * (dp.row(i).array() - dot);
                }
                dscore *= scale;
                dq.middleCols(h * dh, dh) = dscore * kh;
                dk.middleCols(h * dh, dh) = dscore.transpose() * qh;
            }
            lg.wq += lc.x_in.transpose() * dq;
            lg.bq.row(0) += dq.colwise().sum();
            lg.wk += lc.x_in.transpose() * dk;
            lg.bk.row(0) += dk.colwise().sum();
            lg.wv += lc.x_in.transpose() * dv;
            lg.bv.row(0) += dv.colwise().sum();
            dx += dq * lp.wq.transpose() + dk * lp.wk.transpose() + dv * lp.wv.transpose();
            dhid = std::move(dx);
        }

        // embedding layer norm, then scatter to the embedding tables
        const MatrixXd de = layer_norm_backward(dhid, sc.emb_xhat, sc.emb_inv_std,
                                                params.emb_ln_g, grads.emb_ln_g, grads.emb_ln_b);
        for (int t = 0; t < T; ++t) {
            grads.tok_emb.row(sc.ids[t]) += de.row(t);
            grads.pos_emb.row(t) += de.row(t);
        }
    }
}

} // namespace barembed::model
