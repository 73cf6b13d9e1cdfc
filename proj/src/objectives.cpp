#include "barembed/objectives.hpp"

#include <cmath>
#include <limits>

#include "barembed/errors.hpp"

namespace barembed::objectives {

MlmResult mlm_loss(const std::vector<MatrixXd>& logits,
                   const std::vector<std::vector<int>>& targets,
                   bool want_grad) {
    if (logits.size() != targets.size()) throw InternalError("mlm_loss: batch size mismatch");
    long n_selected = 0;
    for (const auto& t : targets)
        for (int v : t)
            if (v != views::kIgnoreTarget) ++n_selected;
    if (n_selected == 0) throw NoMaskedPositions("no masked positions in batch");

    MlmResult res;
    if (want_grad) res.dlogits.resize(logits.size());
    long n_correct = 0;
    double loss_sum = 0.0;

    for (std::size_t s = 0; s < logits.size(); ++s) {
        const MatrixXd& lg = logits[s];
        const auto& tg = targets[s];
        if (static_cast<std::size_t>(lg.rows()) < tg.size())
            throw InternalError("mlm_loss: targets longer than logits");
        if (want_grad) res.dlogits[s] = MatrixXd::Zero(lg.rows(), lg.cols());
        for (std::size_t t = 0; t < tg.size(); ++t) {
            const int target = tg[t];
            if (target == views::kIgnoreTarget) continue;
            const auto row = lg.row(static_cast<Eigen::Index>(t));
            const double mx = row.maxCoeff();
            const double lse = mx + std::log((row.array() - mx).exp().sum());
            loss_sum += lse - row(target);
            Eigen::Index argmax;
            row.maxCoeff(&argmax);
            if (static_cast<int>(argmax) == target) ++n_correct;
            if (want_grad) {
                auto drow = res.dlogits[s].row(static_cast<Eigen::Index>(t));
                drow = (row.array() - lse).exp() / static_cast<double>(n_selected);
                drow(target) -= 1.0 / static_cast<double>(n_selected);
            }
        }
    }
    res.loss = loss_sum / static_cast<double>(n_selected);
    res.accuracy = static_cast<double>(n_correct) / static_cast<double>(n_selected);
    return res;
}

NtXentResult nt_xent(const MatrixXd& z, double temperature, bool want_grad) {
    const Eigen::Index m = z.rows(); // 2N
    if (m == 0 || m % 2 != 0) throw DegenerateBatch("contrastive batch must hold 2N embeddings, N >= 1");
    const Eigen::Index n = m / 2;
    if (temperature <= 0.0) throw InternalError("temperature must be positive");

    VectorXd norms(m);
    MatrixXd zhat(m, z.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        const double nm = z.row(i).norm();
        if (!(nm > 0.0) || !std::isfinite(nm))
            throw ZeroNormEmbedding("zero-norm embedding in contrastive batch");
        norms(i) = nm;
        zhat.row(i) = z.row(i) / nm;
    }
    const MatrixXd sim = zhat * zhat.transpose();

    auto positive_of = [n](Eigen::Index i) { return i < n ? i + n : i - n; };

    double loss_sum = 0.0;
    long correct = 0;
    MatrixXd dsim;
    if (want_grad) dsim = MatrixXd::Zero(m, m);

    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index p = positive_of(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < m; ++k)
            if (k != i && sim(i, k) > mx) mx = sim(i, k);
        double denom = 0.0;
        for (Eigen::Index k = 0; k < m; ++k)
            if (k != i) denom += std::exp((sim(i, k) - mx) / temperature);
        const double lse = mx + temperature * std::log(denom);
        loss_sum += (lse - sim(i, p)) / temperature;
        if (sim(i, p) >= mx) ++correct;

        if (want_grad) {
            for (Eigen::Index k = 0; k < m; ++k) {
                if (k == i) continue;
                const double soft = std::exp((sim(i, k) - mx) / temperature) / denom;
                dsim(i, k) += soft / temperature;
            }
            dsim(i, p) -= 1.0 / temperature;
        }
    }

    NtXentResult res;
    res.loss = loss_sum / static_cast<double>(m);
    res.accuracy = static_cast<double>(correct) / static_cast<double>(m);

    if (want_grad) {
        dsim /= static_cast<double>(m);
        // sim(i, k) = zhat_i . zhat_k for i != k; each ordered entry was used
        // independently, so both orientations contribute.
        MatrixXd dzhat = (dsim + dsim.transpose()) * zhat;
        res.dz.resize(m, z.cols());
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto zh = zhat.row(i);
            const double along = dzhat.row(i).dot(zh);
            res.dz.row(i) = (dzhat.row(i) - along * zh) / norms(i);
        }
    }
    return res;
}

} // namespace barembed::objectives
