#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "barembed/vocab.hpp"

namespace barembed::model {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Pooling { mean, cls };

struct ModelConfig {
    int num_layers = 4;
    int hidden_size = 128;
    int num_heads = 4;
    int ffn_size = 512;
    int max_seq_len = 256;
    double dropout_rate = 0.1;
    int vocab_size = remi::kVocabSize;
    Pooling pooling = Pooling::mean;

    int head_dim() const { return hidden_size / num_heads; }
    void validate() const;
    bool same_shape(const ModelConfig& other) const;
};

// Bias vectors are stored as 1 x n matrices so every tensor is a MatrixXd and
// the optimizer / checkpoint / gradient-check code can treat them uniformly.
struct LayerParams {
    MatrixXd wq, wk, wv, wo; // [H, H]
    MatrixXd bq, bk, bv, bo; // [1, H]
    MatrixXd ln1_g, ln1_b;   // [1, H]
    MatrixXd w1;             // [H, F]
    MatrixXd b1;             // [1, F]
    MatrixXd w2;             // [F, H]
    MatrixXd b2;             // [1, H]
    MatrixXd ln2_g, ln2_b;   // [1, H]
};

struct Parameters {
    MatrixXd tok_emb;  // [V, H]; rows 0..555 double as the tied MLM decoder
    MatrixXd pos_emb;  // [max_seq_len, H]
    MatrixXd emb_ln_g, emb_ln_b; // [1, H]
    std::vector<LayerParams> layers;
    MatrixXd mlm_bias; // [1, 556]

    static Parameters init(const ModelConfig& config, std::uint64_t seed);
    static Parameters zeros_like(const Parameters& shape);
    bool all_finite() const;
};

using TensorVisitor = std::function<void(const std::string&, MatrixXd&)>;
using ConstTensorVisitor = std::function<void(const std::string&, const MatrixXd&)>;

// Visits every tensor in a fixed order (init, Adam, checkpoints and gradient
// checks all rely on the same order).
void for_each_tensor(Parameters& params, const TensorVisitor& fn);
void for_each_tensor(const Parameters& params, const ConstTensorVisitor& fn);

struct LayerCache {
    MatrixXd x_in;                    // layer input [T, H]
    MatrixXd q, k, v;                 // [T, H]
    std::vector<MatrixXd> probs;      // per head [T, T], post-softmax
    std::vector<MatrixXd> attn_drop;  // per head dropout factors (0 or 1/keep)
    MatrixXd ctx;                     // heads concatenated [T, H]
    MatrixXd ln1_xhat; VectorXd ln1_inv_std;
    MatrixXd h1;                      // post-LN1 [T, H]
    MatrixXd u;                       // pre-activation [T, F]
    MatrixXd g;                       // gelu(u), pre-dropout
    MatrixXd ffn_drop;                // [T, F] dropout factors
    MatrixXd ln2_xhat; VectorXd ln2_inv_std;
};

struct SeqCache {
    std::vector<int> ids;             // after truncation
    std::vector<std::uint8_t> real;   // 1 where id != PAD
    int n_real = 0;
    MatrixXd emb_xhat; VectorXd emb_inv_std;
    std::vector<MatrixXd> hidden;     // layers 0..L, each [T, H]
    std::vector<LayerCache> layers;
    MatrixXd logits;                  // [T, 556] when requested
};

struct ForwardResult {
    std::vector<SeqCache> seqs;
};

// Bidirectional encoder pass. Sequences longer than max_seq_len are truncated
// (or rejected when allow_truncate is false). Dropout is applied on attention
// maps and FFN activations only; draws derive from (dropout_seed, seq index)
// so results do not depend on evaluation order.
ForwardResult forward(const ModelConfig& config, const Parameters& params,
                      const std::vector<std::vector<int>>& batch,
                      bool dropout_on, std::uint64_t dropout_seed,
                      bool want_logits, bool allow_truncate = true);

// Mean over non-PAD positions (zero vector if none), or the position-0 vector
// in cls mode.
VectorXd pool(const SeqCache& seq, int layer, Pooling mode);

// Spreads a pooled-embedding gradient back over the positions that fed it.
MatrixXd pool_backward(const SeqCache& seq, const VectorXd& dpooled, Pooling mode);

// Accumulates parameter gradients. dlogits may be empty (no MLM term) or one
// [T, 556] matrix per sequence; dhidden_last likewise for gradients entering
// at the final hidden layer. Empty matrices are treated as zero.
void backward(const ModelConfig& config, const Parameters& params,
              const ForwardResult& fwd,
              const std::vector<MatrixXd>& dlogits,
              const std::vector<MatrixXd>& dhidden_last,
              Parameters& grads);

} // namespace barembed::model
