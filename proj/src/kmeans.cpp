#include "barembed/kmeans.hpp"

#include <cmath>
#include <map>

#include "barembed/errors.hpp"
#include "barembed/rng.hpp"

namespace barembed::probe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// squared distances from every row to every center: ||x||^2 + ||c||^2 - 2 x.c
MatrixXd squared_distances(const MatrixXd& rows, const MatrixXd& centers) {
    const VectorXd row_sq = rows.rowwise().squaredNorm();
    const VectorXd center_sq = centers.rowwise().squaredNorm();
    MatrixXd d = -2.0 * rows * centers.transpose();
    d.colwise() += row_sq;
    d.rowwise() += center_sq.transpose();
    return d.cwiseMax(0.0);
}

} // namespace

KMeansResult kmeans(const MatrixXd& rows, int k, std::uint64_t seed, int max_iter, double tol) {
    const Eigen::Index n = rows.rows();
    if (k <= 0) throw KTooLarge("k must be positive");
    if (static_cast<Eigen::Index>(k) > n) throw KTooLarge("k exceeds the number of rows");

    Rng rng(mix_seed(seed, 0x37ea));
    KMeansResult res;
    res.centers.resize(k, rows.cols());

    // k-means++ seeding
    res.centers.row(0) = rows.row(static_cast<Eigen::Index>(rng.next_below(n)));
    VectorXd d2 = (rows.rowwise() - res.centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            const double r = rng.next_double() * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (r < acc) { pick = i; break; }
                pick = i;
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.next_below(n));
        }
        res.centers.row(c) = rows.row(pick);
        d2 = d2.cwiseMin((rows.rowwise() - res.centers.row(c)).rowwise().squaredNorm());
    }

    res.assignments.assign(n, 0);
    for (int iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter + 1;
        const MatrixXd dist = squared_distances(rows, res.centers);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index best;
            dist.row(i).minCoeff(&best);
            res.assignments[i] = static_cast<int>(best);
        }
        MatrixXd new_centers = MatrixXd::Zero(k, rows.cols());
        std::vector<int> counts(k, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            new_centers.row(res.assignments[i]) += rows.row(i);
            ++counts[res.assignments[i]];
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0)
                new_centers.row(c) /= counts[c];
            else
                new_centers.row(c) = res.centers.row(c); // empty cluster keeps its center
            shift = std::max(shift, (new_centers.row(c) - res.centers.row(c)).squaredNorm());
        }
        res.centers = new_centers;
        if (shift <= tol) break;
    }
    return res;
}

double assignment_entropy(const std::vector<int>& assignments,
                          const std::vector<std::string>& song_ids, int k) {
    if (assignments.size() != song_ids.size())
        throw InternalError("entropy: assignment/song id length mismatch");
    if (k < 1) throw KTooLarge("k must be positive");
    std::map<std::string, std::map<int, int>> hist;
    std::map<std::string, int> totals;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        ++hist[song_ids[i]][assignments[i]];
        ++totals[song_ids[i]];
    }
    const double log_k = std::log(static_cast<double>(k));
    double sum = 0.0;
    int n_songs = 0;
    for (const auto& [song, clusters] : hist) {
        const int total = totals[song];
        if (total < 2) continue; // singleton songs carry no clustering signal
        double h = 0.0;
        for (const auto& [cluster, count] : clusters) {
            const double p = static_cast<double>(count) / total;
            h -= p * std::log(p);
        }
        sum += log_k > 0.0 ? h / log_k : 0.0;
        ++n_songs;
    }
    return n_songs > 0 ? sum / n_songs : 0.0;
}

double song_clustering_entropy(const MatrixXd& embeddings,
                               const std::vector<std::string>& song_ids, int k,
                               std::uint64_t seed) {
    const auto result = kmeans(embeddings, k, seed);
    return assignment_entropy(result.assignments, song_ids, k);
}

} // namespace barembed::probe
