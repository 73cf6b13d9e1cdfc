#pragma once

#include <vector>

#include <Eigen/Core>

#include "barembed/views.hpp"

namespace barembed::objectives {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct LossReport {
    double mlm_loss = 0.0;
    double ntxent_loss = 0.0;
    double total = 0.0;
    double mlm_accuracy = 0.0;
    double ntxent_accuracy = 0.0;
};

struct MlmResult {
    double loss = 0.0;
    double accuracy = 0.0;
    std::vector<MatrixXd> dlogits; // per sequence, same shape as logits
};

// Mean cross-entropy over the selected positions of the whole batch; accuracy
// is argmax agreement at those positions. Unselected positions contribute
// nothing to either. Throws NoMaskedPositions when no position is selected.
MlmResult mlm_loss(const std::vector<MatrixXd>& logits,
                   const std::vector<std::vector<int>>& targets,
                   bool want_grad);

struct NtXentResult {
    double loss = 0.0;
    double accuracy = 0.0;
    MatrixXd dz; // [2N, H]
};

// Z holds 2N embeddings ordered [a_1..a_N, b_1..b_N]; a_i pairs with b_i.
// For each anchor the denominator runs over the other 2N-1 samples (self
// excluded by index); similarity is cosine; the mean is over all 2N anchors.
// Accuracy is top-1 retrieval of the positive among the 2N-1 candidates.
NtXentResult nt_xent(const MatrixXd& z, double temperature, bool want_grad);

inline double total_loss(double mlm, double ntxent, double alpha) {
    return mlm + alpha * ntxent;
}

} // namespace barembed::objectives
