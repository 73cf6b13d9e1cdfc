#include "barembed/ridge.hpp"

#include <Eigen/Cholesky>

#include "barembed/errors.hpp"

namespace barembed::probe {

MatrixXd ridge_fit(const MatrixXd& x, const MatrixXd& y, double lambda, bool with_bias) {
    if (x.rows() == 0 || x.rows() != y.rows()) throw NonFiniteInput("ridge: empty or mismatched rows");
    if (!(lambda > 0.0)) throw NonFiniteInput("ridge: lambda must be positive");
    if (!x.allFinite() || !y.allFinite()) throw NonFiniteInput("ridge: non-finite input");

    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols() + (with_bias ? 1 : 0);
    MatrixXd xa(n, d);
    xa.leftCols(x.cols()) = x;
    if (with_bias) xa.col(d - 1).setOnes();

    MatrixXd gram = xa.transpose() * xa;
    for (Eigen::Index i = 0; i < x.cols(); ++i) gram(i, i) += lambda; // bias row unregularized
    if (with_bias) gram(d - 1, d - 1) += 1e-12; // keep the solve nonsingular for degenerate X

    const Eigen::LDLT<MatrixXd> solver(gram);
    return solver.solve(xa.transpose() * y);
}

MatrixXd ridge_predict(const MatrixXd& x, const MatrixXd& w) {
    if (w.rows() == x.cols()) return x * w;
    if (w.rows() == x.cols() + 1)
        return (x * w.topRows(x.cols())).rowwise() + w.row(w.rows() - 1);
    throw NonFiniteInput("ridge: weight shape does not match features");
}

} // namespace barembed::probe
