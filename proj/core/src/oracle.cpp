#include "gbpse/oracle.hpp"

namespace gbpse {

namespace {

// C^T R^{-1} C and C^T R^{-1} z, tolerating measurement blocks with no rows.
void add_information(Matrix& J, Vector& b, const Matrix& C, const Matrix& R, const Vector& z) {
    if (C.rows() == 0) return;
    const auto llt = linalg::factor_spd(R);
    J += C.transpose() * llt.solve(C);
    b += C.transpose() * llt.solve(z);
}

// Stacks per-block measurement matrices into one row of the global system.
Matrix spread(const Matrix& c, int col, int total) {
    Matrix out = Matrix::Zero(c.rows(), total);
    out.middleCols(col, c.cols()) = c;
    return out;
}

}  // namespace

GlobalSystem assemble_global_system(const MeasurementGraph& g) {
    GlobalSystem sys;
    sys.offsets.push_back(0);
    for (std::size_t k = 0; k < g.size(); ++k) sys.offsets.push_back(sys.offsets.back() + g.dim(k));
    const int n = sys.offsets.back();
    sys.J = Matrix::Zero(n, n);
    sys.b = Vector::Zero(n);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const auto& node = g.node(k);
        if (!node.self) continue;
        add_information(sys.J, sys.b, spread(node.self->C, sys.offsets[k], n), node.self->R, node.self->z);
    }
    for (const auto& e : g.edges()) {
        const auto a = g.index(e.i);
        const auto c = g.index(e.j);
        const Matrix H = spread(e.C_ij, sys.offsets[a], n) + spread(e.C_ji, sys.offsets[c], n);
        add_information(sys.J, sys.b, H, e.R_ij, e.z_ij);
    }
    sys.J = linalg::symmetrize(sys.J);
    return sys;
}

GlobalSystem assemble_global_system(const LineGraph& line) {
    GlobalSystem sys;
    sys.offsets.push_back(0);
    for (const auto& layer : line.layers) sys.offsets.push_back(sys.offsets.back() + layer.dim);
    const int n = sys.offsets.back();
    sys.J = Matrix::Zero(n, n);
    sys.b = Vector::Zero(n);
    for (std::size_t t = 0; t < line.layers.size(); ++t) {
        const auto& layer = line.layers[t];
        add_information(sys.J, sys.b, spread(layer.C, sys.offsets[t], n), layer.R, layer.z);
    }
    for (std::size_t t = 0; t < line.links.size(); ++t) {
        const auto& link = line.links[t];
        const Matrix H = spread(link.C_lo, sys.offsets[t], n) + spread(link.C_hi, sys.offsets[t + 1], n);
        add_information(sys.J, sys.b, H, link.R, link.z);
    }
    sys.J = linalg::symmetrize(sys.J);
    return sys;
}

MlSolution solve_ml(const MeasurementGraph& g, const OracleOptions& options) {
    const GlobalSystem sys = assemble_global_system(g);
    if (!linalg::is_spd(sys.J)) throw UnobservableError("unobservable system: global information matrix is not SPD");
    const auto llt = linalg::try_factor_spd(sys.J);
    if (!llt) throw UnobservableError("unobservable system: global information matrix is singular");

    MlSolution out;
    out.x = llt->solve(sys.b);
    out.nodes.resize(g.size());
    Matrix full;
    const bool materialize = g.size() <= options.full_covariance_cap;
    if (materialize) full = llt->solve(Matrix::Identity(sys.J.rows(), sys.J.cols()));
    for (std::size_t k = 0; k < g.size(); ++k) {
        const int off = sys.offsets[k];
        const int dim = g.dim(k);
        auto& m = out.nodes[k];
        m.x = out.x.segment(off, dim);
        if (materialize) {
            m.Sigma = linalg::symmetrize(full.block(off, off, dim, dim));
        } else {
            Matrix cols = Matrix::Zero(sys.J.rows(), dim);
            cols.middleRows(off, dim).setIdentity();
            m.Sigma = linalg::symmetrize(llt->solve(cols).middleRows(off, dim));
        }
        m.Q = linalg::inverse_spd(m.Sigma);
    }
    return out;
}

Matrix TriDiagonalSystem::assemble_matrix() const {
    std::vector<Eigen::Index> off{0};
    for (const auto& d : diag) off.push_back(off.back() + d.rows());
    Matrix A = Matrix::Zero(off.back(), off.back());
    for (std::size_t t = 0; t < diag.size(); ++t) {
        A.block(off[t], off[t], diag[t].rows(), diag[t].cols()) = diag[t];
        if (t + 1 < diag.size()) {
            A.block(off[t], off[t + 1], upper[t].rows(), upper[t].cols()) = upper[t];
            A.block(off[t + 1], off[t], upper[t].cols(), upper[t].rows()) = upper[t].transpose();
        }
    }
    return A;
}

Vector TriDiagonalSystem::assemble_rhs() const {
    Eigen::Index n = 0;
    for (const auto& r : rhs) n += r.size();
    Vector out(n);
    Eigen::Index pos = 0;
    for (const auto& r : rhs) {
        out.segment(pos, r.size()) = r;
        pos += r.size();
    }
    return out;
}

TriDiagonalSystem assemble_tridiagonal(const LineGraph& line) {
    TriDiagonalSystem sys;
    const std::size_t n = line.layers.size();
    for (const auto& layer : line.layers) {
        sys.diag.push_back(Matrix::Zero(layer.dim, layer.dim));
        sys.rhs.push_back(Vector::Zero(layer.dim));
        add_information(sys.diag.back(), sys.rhs.back(), layer.C, layer.R, layer.z);
    }
    for (std::size_t t = 0; t + 1 < n; ++t) {
        const auto& link = line.links[t];
        add_information(sys.diag[t], sys.rhs[t], link.C_lo, link.R, link.z);
        add_information(sys.diag[t + 1], sys.rhs[t + 1], link.C_hi, link.R, link.z);
        if (link.R.rows() == 0) {
            sys.upper.push_back(Matrix::Zero(line.layers[t].dim, line.layers[t + 1].dim));
        } else {
            sys.upper.push_back(link.C_lo.transpose() * linalg::solve_spd(link.R, link.C_hi));
        }
    }
    for (auto& d : sys.diag) d = linalg::symmetrize(d);
    return sys;
}

std::vector<Matrix> schur_complements(const TriDiagonalSystem& sys) {
    std::vector<Matrix> out;
    out.reserve(sys.size());
    for (std::size_t t = 0; t < sys.size(); ++t) {
        if (t == 0) {
            out.push_back(sys.diag[0]);
        } else {
            const Matrix& u = sys.upper[t - 1];
            out.push_back(linalg::symmetrize(sys.diag[t] - u.transpose() * linalg::solve_spd(out[t - 1], u)));
        }
    }
    return out;
}

std::vector<Vector> solve_tridiagonal(const TriDiagonalSystem& sys) {
    const std::size_t n = sys.size();
    if (n == 0) return {};
    const auto pivots = schur_complements(sys);
    std::vector<Vector> y(n);
    for (std::size_t t = 0; t < n; ++t) {
        y[t] = sys.rhs[t];
        if (t > 0) y[t] -= sys.upper[t - 1].transpose() * linalg::solve_spd(pivots[t - 1], y[t - 1]);
    }
    std::vector<Vector> x(n);
    for (std::size_t t = n; t-- > 0;) {
        Vector r = y[t];
        if (t + 1 < n) r -= sys.upper[t] * x[t + 1];
        x[t] = linalg::solve_spd(pivots[t], r);
    }
    return x;
}

Vector solve_truncated(const TriDiagonalSystem& sys) {
    if (sys.size() < 2) throw Error("truncated solve needs at least two layers");
    TriDiagonalSystem head;
    head.diag.assign(sys.diag.begin(), sys.diag.end() - 1);
    head.upper.assign(sys.upper.begin(), sys.upper.end() - 1);
    head.rhs.assign(sys.rhs.begin(), sys.rhs.end() - 1);
    return solve_tridiagonal(head).front();
}

Vector solve_truncated(const LineGraph& line) {
    return solve_truncated(assemble_tridiagonal(line));
}

Vector error_product_formula(const TriDiagonalSystem& sys, const Vector& x_n) {
    const std::size_t n = sys.size();
    if (n < 2) throw Error("product formula needs at least two layers");
    const auto pivots = schur_complements(sys);
    Vector v = x_n;
    for (std::size_t t = n - 1; t-- > 0;) v = -linalg::solve_spd(pivots[t], Vector(sys.upper[t] * v));
    return -v;
}

}  // namespace gbpse
