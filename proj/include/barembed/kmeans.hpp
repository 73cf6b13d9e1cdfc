#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace barembed::probe {

struct KMeansResult {
    Eigen::MatrixXd centers;      // [K, d]
    std::vector<int> assignments; // one per row
    int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding; deterministic under the seed.
// Stops when no center moves more than tol (squared shift) or after max_iter.
KMeansResult kmeans(const Eigen::MatrixXd& rows, int k, std::uint64_t seed,
                    int max_iter = 300, double tol = 1e-6);

// Mean over songs (>= 2 bars) of the Shannon entropy of the song's cluster
// assignment histogram, normalized by ln K.
double assignment_entropy(const std::vector<int>& assignments,
                          const std::vector<std::string>& song_ids, int k);

double song_clustering_entropy(const Eigen::MatrixXd& embeddings,
                               const std::vector<std::string>& song_ids, int k,
                               std::uint64_t seed);

} // namespace barembed::probe
