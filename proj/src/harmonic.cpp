#include "crystalwalk/harmonic.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace cryst {

OneForm difference(const QuotientGraph& graph, const std::vector<double>& f) {
    OneForm df;
    df.value.resize(graph.dart_count());
    for (const Dart& d : graph.darts) df.value[d.id] = f[d.terminus] - f[d.origin];
    return df;
}

double line_integral(const QuotientGraph& graph, const OneForm& omega,
                     const std::vector<int>& path) {
    double total = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i > 0 && graph.darts[path[i]].origin != graph.darts[path[i - 1]].terminus)
            throw ValidationError("line_integral: path is not connected");
        total += omega.value[path[i]];
    }
    return total;
}

double energy_inner(const QuotientGraph& graph, const std::vector<double>& mtilde,
                    const OneForm& omega, const OneForm& eta) {
    double dot = 0.0, go = 0.0, ge = 0.0;
    for (int e = 0; e < graph.dart_count(); ++e) {
        dot += mtilde[e] * omega.value[e] * eta.value[e];
        go += mtilde[e] * omega.value[e];
        ge += mtilde[e] * eta.value[e];
    }
    return dot - go * ge;
}

Realization modified_harmonic_realization(const CrystalLattice& lattice,
                                          const TransitionKernel& kernel,
                                          const StationaryMeasure& m, int base) {
    const QuotientGraph& graph = lattice.quotient;
    const int nv = graph.vertex_count();
    const int d = lattice.rank;
    if (base < 0 || base >= nv) throw ValidationError("base vertex out of range");

    Eigen::VectorXd rho = asymptotic_direction(lattice, kernel, m);

    // Row x of the system: sum_e p(e) position(t(e)) - position(x)
    //                      = rho - sum_e p(e) voltage(e).
    Eigen::MatrixXd A = -Eigen::MatrixXd::Identity(nv, nv);
    Eigen::MatrixXd rhs(nv, d);
    for (int x = 0; x < nv; ++x) rhs.row(x) = rho.transpose();
    for (const Dart& dart : graph.darts) {
        A(dart.origin, dart.terminus) += kernel.prob[dart.id];
        for (int k = 0; k < d; ++k)
            rhs(dart.origin, k) -= kernel.prob[dart.id] * lattice.voltage[dart.id][k];
    }
    Eigen::MatrixXd Apinned = A;
    Eigen::MatrixXd rhs_pinned = rhs;
    Apinned.row(base).setZero();
    Apinned(base, base) = 1.0;
    rhs_pinned.row(base).setZero();

    Realization real;
    real.base = base;
    real.position = Apinned.partialPivLu().solve(rhs_pinned);
    if (!real.position.allFinite())
        throw NumericalError("harmonic realization solve produced non-finite values");

    real.increment.resize(graph.dart_count(), d);
    for (const Dart& dart : graph.darts) {
        for (int k = 0; k < d; ++k)
            real.increment(dart.id, k) = real.position(dart.terminus, k) -
                                         real.position(dart.origin, k) +
                                         lattice.voltage[dart.id][k];
    }

    // The pinned-out row is redundant exactly when m is stationary; a large
    // residual signals inconsistent inputs rather than a solver problem.
    double residual = (A * real.position - rhs).row(base).norm();
    if (residual > 1e-10)
        throw NumericalError("harmonic realization residual above tolerance (non-stationary m?)");
    return real;
}

AlbaneseMetric albanese(const CrystalLattice& lattice, const TransitionKernel& kernel,
                        const StationaryMeasure& m, const Realization& realization) {
    const QuotientGraph& graph = lattice.quotient;
    const int d = lattice.rank;
    std::vector<double> mtilde = dart_weights(graph, kernel, m);

    AlbaneseMetric alb;
    alb.gram.resize(d, d);
    std::vector<OneForm> coord(d);
    for (int i = 0; i < d; ++i) {
        coord[i].value.resize(graph.dart_count());
        for (int e = 0; e < graph.dart_count(); ++e) coord[i].value[e] = realization.increment(e, i);
    }
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            alb.gram(i, j) = alb.gram(j, i) = energy_inner(graph, mtilde, coord[i], coord[j]);

    Eigen::LLT<Eigen::MatrixXd> llt(alb.gram);
    if (llt.info() != Eigen::Success)
        throw NumericalError("Albanese Gram matrix is not positive definite");
    alb.metric = llt.solve(Eigen::MatrixXd::Identity(d, d));
    // T = L^{-1} is the Gram-Schmidt transform of the generator-dual forms in
    // index order with positive diagonal.
    Eigen::MatrixXd L = llt.matrixL();
    alb.to_orthonormal =
        L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));

    if ((alb.metric * alb.gram - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
        throw NumericalError("Albanese metric inversion residual above tolerance");
    return alb;
}

Eigen::VectorXd to_orthonormal_coords(const AlbaneseMetric& metric, const Eigen::VectorXd& w) {
    if (w.size() != metric.to_orthonormal.cols())
        throw ValidationError("to_orthonormal_coords: dimension mismatch");
    return metric.to_orthonormal * w;
}

}  // namespace cryst
