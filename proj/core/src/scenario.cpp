#include "gbpse/scenario.hpp"

#include <algorithm>
#include <cmath>

namespace gbpse {

std::uint64_t CounterRng::mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t CounterRng::bits_at(std::uint64_t counter) const {
    return mix(seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL);
}

double CounterRng::next_uniform() {
    return (static_cast<double>(next_bits() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::next_normal() { return inverse_normal_cdf(next_uniform()); }

Vector CounterRng::next_normals(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = next_normal();
    return v;
}

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error("inverse_normal_cdf: probability outside (0, 1)");
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                    45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                    21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double x;
    if (r <= 5.0) {
        r -= 1.6;
        x = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                 1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734) /
            (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                 0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        x = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                 0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772) /
            (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                 7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -x : x;
}

void check_generator(const GraphSpec& graph, const GeneratorParams& params) {
    if (params.x_true_scale && !(*params.x_true_scale >= 0.0 && std::isfinite(*params.x_true_scale))) {
        throw Error("generator x_true_scale must be finite and nonnegative");
    }
    for (const auto& n : graph.nodes) {
        const auto it = params.x_true.find(n.id);
        if (it == params.x_true.end()) {
            if (!params.x_true_scale) {
                throw Error("missing generator parameters: node " + std::to_string(n.id) +
                            " has no x_true and no x_true_scale is set");
            }
        } else if (it->second.size() != n.dim) {
            throw Error("generator x_true for node " + std::to_string(n.id) + " has wrong length");
        }
    }
    for (const auto& [id, v] : params.x_true) {
        (void)v;
        const bool known = std::any_of(graph.nodes.begin(), graph.nodes.end(), [&](const NodeSpec& n) { return n.id == id; });
        if (!known) throw Error("generator x_true names unknown node " + std::to_string(id));
    }
}

Scenario generate_scenario(const GraphSpec& graph, const GeneratorParams& params, std::uint64_t seed) {
    const MeasurementGraph g(graph);  // validates, including covariance definiteness
    check_generator(graph, params);
    CounterRng rng(seed);
    Scenario sc;
    sc.seed = seed;
    sc.graph = g.spec();

    for (std::size_t k = 0; k < g.size(); ++k) {
        const NodeId id = g.id(k);
        const auto it = params.x_true.find(id);
        if (it != params.x_true.end()) {
            sc.x_true[id] = it->second;
        } else {
            sc.x_true[id] = *params.x_true_scale * rng.next_normals(g.dim(k));
        }
    }
    auto noise = [&](const Matrix& R) -> Vector {
        if (!params.noise) return Vector::Zero(R.rows());
        const Eigen::LLT<Matrix> llt(linalg::symmetrize(R));
        return llt.matrixL() * rng.next_normals(R.rows());
    };
    for (auto& n : sc.graph.nodes) {
        if (!n.self) continue;
        n.self->z = n.self->C * sc.x_true[n.id] + noise(n.self->R);
    }
    for (auto& e : sc.graph.edges) {
        e.z_ij = e.C_ij * sc.x_true[e.i] + e.C_ji * sc.x_true[e.j] + noise(e.R_ij);
    }
    return sc;
}

}  // namespace gbpse
