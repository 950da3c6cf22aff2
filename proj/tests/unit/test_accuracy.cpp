#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "gbpse/accuracy.hpp"
#include "gbpse/corpus.hpp"
#include "oracles.hpp"

using namespace gbpse;

namespace {

/// Engine trace, oracle and fixed point for one graph, kept alive together.
struct Bundle {
    MeasurementGraph g;
    MlSolution ml;
    RunResult run;
    FixedPointMessages fp;
    Constants c;
    AccuracyInputs in;

    explicit Bundle(const GraphSpec& spec, int iters = 300) : g(spec), ml(solve_ml(g)) {
        RunOptions o;
        o.max_iters = iters;
        o.min_iters = 20;
        o.tol = 1e-14;
        run = gbpse::run(g, o);
        FixedPointOptions fo;
        fo.require_assumption = false;
        fp = fixed_point(g, fo);
        c = constants(g, fp);
        in.graph = &g;
        in.ml = &ml;
        in.trace = &run.trace;
        in.fixed_point = &fp;
        in.limit = &run.trace.back();
        in.constants = c;
        in.beta = assemble_B_infinity(fp, assemble_A_infinity(g, fp)).beta;
    }
};

}  // namespace

TEST(ReducedConstants, AcyclicGraphUsesOwnConstants) {
    GraphSpec s = corpus::random_tree(9, 4);
    for (auto& n : s.nodes) n.self->R = fixtures::m1(0.2);
    const MeasurementGraph g(s);
    const auto c = constants(g, fixed_point(g));
    const auto r = reduced_constants(g, 3);
    EXPECT_FALSE(r.from_reduced_graph);
    EXPECT_EQ(r.alpha, c.alpha);
    EXPECT_EQ(r.rho, c.rho);
}

TEST(ReducedConstants, RingUsesSplitPath) {
    const MeasurementGraph g(corpus::ring(8));
    const auto r = reduced_constants(g, 1);
    EXPECT_TRUE(r.from_reduced_graph);
    const auto reduced = build_reduced_graph(g, 1);
    FixedPointOptions fo;
    fo.require_assumption = false;
    const auto fp = fixed_point(reduced.graph, fo);
    EXPECT_LE(fp.iterations, reduced.graph.diameter() + 2);
    const auto c = constants(reduced.graph, fp);
    EXPECT_DOUBLE_EQ(r.alpha, c.alpha);
    EXPECT_DOUBLE_EQ(r.rho, c.rho);
    EXPECT_LT(r.rho, 1.0);
}

TEST(ReducedConstants, MeasurementFreeChildIsReported) {
    GraphSpec s = corpus::ring(8);
    s.nodes[4].self.reset();  // node 5, the antipode of node 1
    Bundle b(s, 30);
    EXPECT_THROW(reduced_constants(b.g, 1), AssumptionError);
    const auto q = q_accuracy(b.in, 1);
    EXPECT_FALSE(q.applicable);
    EXPECT_FALSE(q.note.empty());
}

TEST(QAccuracy, AcyclicGraphIsExact) {
    Bundle b(fixtures::noisy(corpus::random_tree(12, 2), 2));
    const int D = b.g.diameter();
    for (std::size_t i = 0; i < b.g.size(); ++i) {
        EXPECT_LT((b.run.trace[D].nodes[i].Q - b.ml.nodes[i].Q).norm(), 1e-10);
        EXPECT_FALSE(q_accuracy(b.in, b.g.id(i)).applicable);
    }
}

TEST(QAccuracy, RingOfEightHoldsStrictly) {
    Bundle b(corpus::ring(8));
    for (NodeId id : b.g.ids()) {
        const auto q = q_accuracy(b.in, id);
        ASSERT_TRUE(q.applicable);
        EXPECT_TRUE(q.sandwich_holds);
        EXPECT_TRUE(q.limit_holds);
        EXPECT_GE(q.gap_at_d_min, -1e-12);
        EXPECT_LT(q.gap_at_d_max, q.bound_at_d);
        // Independent evaluation of the sandwich.
        const Matrix& qml = b.ml.nodes[b.g.index(id)].Q;
        const Matrix& qd = b.run.trace[*q.depth - 1].nodes[b.g.index(id)].Q;
        EXPECT_NEAR(q.gap_at_d_max, oracle::max_gen_eig(qd - qml, qml), 1e-12);
    }
}

TEST(QAccuracy, LimitGapShrinksWithRingSize) {
    std::vector<double> gaps;
    for (int n : {6, 8, 10, 12}) {
        Bundle b(corpus::ring(n));
        const auto q = q_accuracy(b.in, 1);
        ASSERT_TRUE(q.limit_checked);
        EXPECT_TRUE(q.limit_holds);
        gaps.push_back(q.gap_inf_norm);
    }
    for (std::size_t k = 1; k < gaps.size(); ++k) EXPECT_LT(gaps[k], gaps[k - 1]);
    // Geometric: successive ratios stay bounded away from one.
    for (std::size_t k = 1; k < gaps.size(); ++k) EXPECT_LT(gaps[k] / gaps[k - 1], 0.9);
}

TEST(QAccuracy, SandwichOnCyclicCorpusGraphs) {
    for (const auto& spec : {corpus::ring_with_pendants(6, 3), corpus::vector_ring(8), corpus::ring(5)}) {
        Bundle b(spec);
        for (NodeId id : b.g.ids()) {
            const auto q = q_accuracy(b.in, id);
            if (!q.applicable) continue;
            EXPECT_TRUE(q.sandwich_holds) << id;
            EXPECT_TRUE(q.limit_holds) << id;
        }
    }
}

TEST(Kappa, Examples) {
    const GraphSpec tree = fixtures::noisy(corpus::random_tree(8, 1), 1);
    const MeasurementGraph tg(tree);
    EXPECT_EQ(kappa(tg, 1, solve_ml(tg)), 0.0);

    const MeasurementGraph ring(fixtures::noisy(corpus::ring(8), 5));
    const auto ml = solve_ml(ring);
    const double x5 = ml.nodes[ring.index(5)].x(0);
    EXPECT_NEAR(kappa(ring, 1, ml), 2.0 * x5 * x5, 1e-14);

    const MeasurementGraph quiet(corpus::ring(8));
    EXPECT_EQ(kappa(quiet, 1, solve_ml(quiet)), 0.0);
}

TEST(XAccuracy, TheoremSixOnRingOfEight) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Bundle b(fixtures::noisy(corpus::ring(8), seed));
        for (NodeId id : b.g.ids()) {
            const auto x = x_accuracy(b.in, id);
            ASSERT_TRUE(x.applicable);
            EXPECT_TRUE(x.holds) << "seed " << seed << " node " << id;
            const std::size_t idx = b.g.index(id);
            const Vector dx = *b.run.trace[*x.depth].nodes[idx].x_hat - b.ml.nodes[idx].x;
            EXPECT_NEAR(x.weighted, dx.dot(b.run.trace[0].nodes[idx].Q * dx), 1e-14);
        }
    }
}

TEST(XAccuracy, AcyclicGraphNotApplicable) {
    Bundle b(fixtures::noisy(corpus::path(5), 3));
    for (NodeId id : b.g.ids()) {
        const auto x = x_accuracy(b.in, id);
        EXPECT_FALSE(x.applicable);
        EXPECT_TRUE(x.holds);
    }
}

TEST(XAccuracy, ErrorDecaysWithDepth) {
    // Averaged over seeds the weighted error falls at least as fast as eta^d.
    std::vector<double> ds, logs;
    double eta = 0.0;
    for (int n : {6, 8, 10, 12}) {
        double sum = 0.0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            Bundle b(fixtures::noisy(corpus::ring(n), seed), 40);
            const auto x = x_accuracy(b.in, 1);
            sum += x.weighted;
            eta = x.eta;
            if (seed == 1) ds.push_back(*x.depth);
        }
        logs.push_back(std::log(sum / 20.0));
    }
    EXPECT_LE(oracle::slope(ds, logs), std::log(eta) + 0.05);
}

TEST(Layered, ThreeWayAgreement) {
    for (const auto& spec : {corpus::ring(8), corpus::vector_ring(8), corpus::dense7(), corpus::ring_with_pendants(6, 3)}) {
        Bundle b(fixtures::noisy(spec, 12), 40);
        for (NodeId id : b.g.ids()) {
            const auto l = layered_validation(b.in, id);
            ASSERT_TRUE(l.applicable);
            EXPECT_TRUE(l.agrees) << id << " " << l.max_disagreement;
            EXPECT_GT(l.engine_minus_oracle.norm(), 0.0);
        }
    }
}

TEST(Layered, PathNotApplicable) {
    Bundle b(fixtures::noisy(corpus::path(4), 1));
    EXPECT_FALSE(layered_validation(b.in, 1).applicable);
}

TEST(AccuracyReport, CsvAndSummary) {
    Bundle b(fixtures::noisy(corpus::ring(8), 1));
    const auto report = analyze_accuracy(b.in);
    EXPECT_TRUE(report.all_bounds_hold());
    std::ostringstream csv, txt;
    write_accuracy_csv(csv, report);
    write_accuracy_summary(txt, report);
    int lines = 0;
    for (char ch : csv.str()) lines += ch == '\n';
    EXPECT_EQ(lines, 9);
    EXPECT_NE(txt.str().find("all bounds hold"), std::string::npos);
}
