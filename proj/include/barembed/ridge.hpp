#pragma once

#include <Eigen/Core>

namespace barembed::probe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Closed-form ridge solution of min ||XW - Y||^2 + lambda ||W||^2 via the
// normal equations (SPD solve). When with_bias is set, X is augmented with a
// constant-1 column whose weight row is left unregularized; the returned W is
// then (d+1) x m with the bias row last.
MatrixXd ridge_fit(const MatrixXd& x, const MatrixXd& y, double lambda, bool with_bias = true);

// Applies weights from ridge_fit (handles the bias row automatically).
MatrixXd ridge_predict(const MatrixXd& x, const MatrixXd& w);

} // namespace barembed::probe
