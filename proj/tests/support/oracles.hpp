#pragma once

// Reference computations written independently of the library internals.
// They operate on the raw GraphSpec and use only Eigen decompositions.

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <vector>

#include "gbpse/graph.hpp"

namespace oracle {

using gbpse::GraphSpec;
using gbpse::Matrix;
using gbpse::NodeId;
using gbpse::Vector;

struct Layout {
    std::vector<NodeId> ids;
    std::map<NodeId, int> offset;
    std::map<NodeId, int> dim;
    int total = 0;
};

inline Layout layout(const GraphSpec& g) {
    Layout l;
    for (const auto& n : g.nodes) l.ids.push_back(n.id);
    std::sort(l.ids.begin(), l.ids.end());
    for (NodeId id : l.ids) {
        const auto it = std::find_if(g.nodes.begin(), g.nodes.end(), [&](const auto& n) { return n.id == id; });
        l.offset[id] = l.total;
        l.dim[id] = it->dim;
        l.total += it->dim;
    }
    return l;
}

struct Marginals {
    std::map<NodeId, Vector> x;
    std::map<NodeId, Matrix> Sigma;
};

/// Whitened stacked regression min ||R^{-1/2}(z - Hx)||, solved by QR.
inline Marginals stacked_regression(const GraphSpec& g) {
    const Layout l = layout(g);
    std::vector<Matrix> rows_h;
    std::vector<Vector> rows_z;
    auto add = [&](const Matrix& h, const Matrix& r, const Vector& z) {
        const Matrix L = r.llt().matrixL();
        rows_h.push_back(L.triangularView<Eigen::Lower>().solve(h));
        rows_z.push_back(L.triangularView<Eigen::Lower>().solve(z));
    };
    for (const auto& n : g.nodes) {
        if (!n.self) continue;
        Matrix h = Matrix::Zero(n.self->C.rows(), l.total);
        h.block(0, l.offset.at(n.id), h.rows(), n.dim) = n.self->C;
        add(h, n.self->R, n.self->z);
    }
    for (const auto& e : g.edges) {
        Matrix h = Matrix::Zero(e.C_ij.rows(), l.total);
        h.block(0, l.offset.at(e.i), h.rows(), l.dim.at(e.i)) = e.C_ij;
        h.block(0, l.offset.at(e.j), h.rows(), l.dim.at(e.j)) = e.C_ji;
        add(h, e.R_ij, e.z_ij);
    }
    Eigen::Index m = 0;
    for (const auto& h : rows_h) m += h.rows();
    Matrix H(m, l.total);
    Vector z(m);
    Eigen::Index r = 0;
    for (std::size_t k = 0; k < rows_h.size(); ++k) {
        H.middleRows(r, rows_h[k].rows()) = rows_h[k];
        z.segment(r, rows_z[k].size()) = rows_z[k];
        r += rows_h[k].rows();
    }
    const Vector x = H.colPivHouseholderQr().solve(z);
    const Matrix cov = (H.transpose() * H).fullPivLu().inverse();
    Marginals out;
    for (NodeId id : l.ids) {
        out.x[id] = x.segment(l.offset.at(id), l.dim.at(id));
        out.Sigma[id] = cov.block(l.offset.at(id), l.offset.at(id), l.dim.at(id), l.dim.at(id));
    }
    return out;
}

/// Pairwise form: J = sum of H^T R^{-1} H, h = sum of H^T R^{-1} z, by block.
struct Pairwise {
    Layout l;
    std::map<NodeId, Matrix> Jii;
    std::map<NodeId, Vector> hi;
    std::map<std::pair<NodeId, NodeId>, Matrix> Jij;  // both orientations
    std::map<NodeId, std::vector<NodeId>> nbr;
};

inline Pairwise pairwise(const GraphSpec& g) {
    Pairwise p;
    p.l = layout(g);
    for (NodeId id : p.l.ids) {
        p.Jii[id] = Matrix::Zero(p.l.dim[id], p.l.dim[id]);
        p.hi[id] = Vector::Zero(p.l.dim[id]);
    }
    for (const auto& n : g.nodes) {
        if (!n.self) continue;
        const Matrix Ri = n.self->R.inverse();
        p.Jii[n.id] += n.self->C.transpose() * Ri * n.self->C;
        p.hi[n.id] += n.self->C.transpose() * Ri * n.self->z;
    }
    for (const auto& e : g.edges) {
        const Matrix Ri = e.R_ij.inverse();
        p.Jii[e.i] += e.C_ij.transpose() * Ri * e.C_ij;
        p.Jii[e.j] += e.C_ji.transpose() * Ri * e.C_ji;
        p.hi[e.i] += e.C_ij.transpose() * Ri * e.z_ij;
        p.hi[e.j] += e.C_ji.transpose() * Ri * e.z_ij;
        p.Jij[{e.i, e.j}] = e.C_ij.transpose() * Ri * e.C_ji;
        p.Jij[{e.j, e.i}] = e.C_ji.transpose() * Ri * e.C_ij;
        p.nbr[e.i].push_back(e.j);
        p.nbr[e.j].push_back(e.i);
    }
    return p;
}

struct PairwiseBelief {
    std::map<NodeId, Matrix> P;
    std::map<NodeId, Vector> x;
};

/// Synchronous block Gaussian BP on the pairwise model with zero initial
/// messages. Entry k-1 holds the beliefs after k-1 message rounds.
inline std::vector<PairwiseBelief> pairwise_gabp(const GraphSpec& g, int iterations) {
    const Pairwise p = pairwise(g);
    std::map<std::pair<NodeId, NodeId>, Matrix> Pm;
    std::map<std::pair<NodeId, NodeId>, Vector> hm;
    for (const auto& [key, J] : p.Jij) {
        Pm[key] = Matrix::Zero(J.cols(), J.cols());
        hm[key] = Vector::Zero(J.cols());
    }
    std::vector<PairwiseBelief> out;
    for (int k = 1; k <= iterations; ++k) {
        PairwiseBelief b;
        for (NodeId i : p.l.ids) {
            Matrix P = p.Jii.at(i);
            Vector h = p.hi.at(i);
            if (p.nbr.count(i)) {
                for (NodeId w : p.nbr.at(i)) {
                    P += Pm.at({w, i});
                    h += hm.at({w, i});
                }
            }
            b.P[i] = P;
            b.x[i] = P.ldlt().solve(h);
        }
        out.push_back(b);
        auto nextP = Pm;
        auto nexth = hm;
        for (const auto& [key, Jij] : p.Jij) {
            const auto [i, j] = key;
            const Matrix Pc = b.P.at(i) - Pm.at({j, i});
            const Vector hc = [&] {
                Vector h = p.hi.at(i);
                for (NodeId w : p.nbr.at(i)) h += hm.at({w, i});
                return Vector(h - hm.at({j, i}));
            }();
            const Matrix Jji = p.Jij.at({j, i});
            nextP[key] = -Jji * Pc.ldlt().solve(Jij);
            nexth[key] = -Jji * Pc.ldlt().solve(hc);
        }
        Pm = std::move(nextP);
        hm = std::move(nexth);
    }
    return out;
}

/// Largest lambda with (N - lambda D) singular, D SPD.
inline double max_gen_eig(const Matrix& N, const Matrix& D) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(0.5 * (N + N.transpose()), 0.5 * (D + D.transpose()));
    return es.eigenvalues().maxCoeff();
}

inline double min_eig(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    return es.eigenvalues().minCoeff();
}

/// a <= b in the Loewner order with absolute eigenvalue slack scaled by size.
inline bool psd_leq(const Matrix& a, const Matrix& b, double slack) {
    const double scale = std::max({1.0, a.norm(), b.norm()});
    return min_eig(b - a) >= -slack * scale;
}

inline double relative_error(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

/// Least-squares slope of y against x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sy += y[k];
        sxx += x[k] * x[k];
        sxy += x[k] * y[k];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
