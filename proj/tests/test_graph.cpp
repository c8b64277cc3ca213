#include "s2c/gradcheck.hpp"
#include "s2c/graph.hpp"
#include "s2c/ops.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace s2c;
using namespace s2c::test;

namespace {

M random_centers(Index n, Rng& rng) {
    M c(n, 2);
    for (Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform();
    return c;
}

M direct_adjacency(const M& ma, const M& mp) {
    M a(ma.rows(), ma.cols());
    for (Index i = 0; i < ma.rows(); ++i) {
        double den = 0;
        for (Index j = 0; j < ma.cols(); ++j) den += ma(i, j) * std::exp(mp(i, j));
        for (Index j = 0; j < ma.cols(); ++j) a(i, j) = ma(i, j) * std::exp(mp(i, j)) / den;
    }
    return a;
}

} // namespace

TEST(SemanticEdges, ZeroProjectionsGiveZeroMatrix) {
    ParameterSet<double> params;
    Rng rng(41);
    auto phi = make_dense(params, "phi", 4, 4, rng), varphi = make_dense(params, "varphi", 4, 4, rng);
    for (auto* p : {phi.weight, phi.bias, varphi.weight, varphi.bias}) p->value.setZero();
    Tape<double> t(false);
    auto ma = semantic_edges(t, t.constant(rand_matrix(3, 4, rng)), phi, varphi, 3);
    EXPECT_EQ(ma.value().cwiseAbs().maxCoeff(), 0.0);
}

TEST(SemanticEdges, OrthogonalUnitRows) {
    ParameterSet<double> params;
    Rng rng(42);
    const Index d = 4;
    auto phi = make_dense(params, "phi", d, d, rng), varphi = make_dense(params, "varphi", d, d, rng);
    phi.weight->value = M::Identity(d, d);
    varphi.weight->value = M::Identity(d, d);
    phi.bias->value.setZero();
    varphi.bias->value.setZero();
    Tape<double> t(false);
    auto ma = semantic_edges(t, t.constant(M::Identity(3, d)), phi, varphi, 3);
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j) EXPECT_NEAR(ma.value()(i, j), i == j ? 0.5 : 0.0, 1e-15);  // 1/sqrt(4)
}

TEST(SemanticEdges, MatchesDirectFormula) {
    ParameterSet<double> params;
    Rng rng(43);
    const Index d = 6;
    auto phi = make_dense(params, "phi", d, d, rng), varphi = make_dense(params, "varphi", d, d, rng);
    const M x = rand_matrix(6, d, rng);  // two groups of 3
    Tape<double> t(false);
    auto ma = semantic_edges(t, t.constant(x), phi, varphi, 3);
    ASSERT_EQ(ma.rows(), 6);
    ASSERT_EQ(ma.cols(), 3);
    for (Index g = 0; g < 2; ++g)
        for (Index i = 0; i < 3; ++i)
            for (Index j = 0; j < 3; ++j) {
                const Eigen::RowVectorXd a = x.row(g * 3 + i) * phi.weight->value + phi.bias->value;
                const Eigen::RowVectorXd b = x.row(g * 3 + j) * varphi.weight->value + varphi.bias->value;
                EXPECT_NEAR(ma.value()(g * 3 + i, j), a.dot(b) / std::sqrt(double(d)), 1e-12);
            }
}

TEST(DisDrop, CoincidentNodesKeepPsiOfZero) {
    ParameterSet<double> params;
    Rng rng(44);
    auto sp = make_spatial_params(params, SpatialVariant::disdrop, 0.2, 8, rng);
    M c(2, 2);
    c << 0.4, 0.4, 0.4, 0.4;
    Tape<double> t(false);
    auto mp = spatial_edges(t, c, 2, sp);
    auto psi0 = mlp_forward(t, t.constant(M::Zero(1, 1)), sp.psi);
    for (Index i = 0; i < mp.value().size(); ++i) EXPECT_NEAR(mp.value().data()[i], psi0.value()(0, 0), 1e-15);
}

TEST(DisDrop, OppositeCornersAreDropped) {
    ParameterSet<double> params;
    Rng rng(45);
    auto sp = make_spatial_params(params, SpatialVariant::disdrop, 0.1, 8, rng);
    M c(2, 2);
    c << 0.0, 0.0, 1.0, 1.0;
    Tape<double> t(false);
    auto mp = spatial_edges(t, c, 2, sp);
    EXPECT_EQ(mp.value()(0, 1), 0.0);
    EXPECT_EQ(mp.value()(1, 0), 0.0);
}

TEST(DisDrop, ZeroBeyondEpsilonAndMonotoneInEpsilon) {
    ParameterSet<double> params;
    Rng rng(46);
    auto sp = make_spatial_params(params, SpatialVariant::disdrop, 0.3, 8, rng);
    const M c = random_centers(8, rng);
    const M dist = center_distances(c, 8);
    std::vector<M> outs;
    for (double eps : {0.3, 0.2, 0.1}) {
        Tape<double> t(false);
        outs.push_back(spatial_edges_disdrop(t, c, 8, eps, sp.psi).value());
        for (Index i = 0; i < 8; ++i)
            for (Index j = 0; j < 8; ++j)
                if (dist(i, j) > eps) EXPECT_EQ(outs.back()(i, j), 0.0);
    }
    for (std::size_t k = 1; k < outs.size(); ++k)
        for (Index i = 0; i < outs[k].size(); ++i)
            if (outs[k - 1].data()[i] == 0.0) EXPECT_EQ(outs[k].data()[i], 0.0);
}

TEST(DisEmb, TiedParametersAtSamePointGiveZero) {
    ParameterSet<double> params;
    Rng rng(47);
    auto sp = make_spatial_params(params, SpatialVariant::disemb, 0.2, 4, rng);
    sp.embed_n.weight->value = sp.embed_m.weight->value;
    sp.embed_n.bias->value = sp.embed_m.bias->value;
    M c(2, 2);
    c << 0.3, 0.6, 0.3, 0.6;
    Tape<double> t(false);
    EXPECT_LT(spatial_edges(t, c, 2, sp).value().cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DisEmb, OneDimensionalHandExample) {
    ParameterSet<double> params;
    Rng rng(48);
    auto m = make_dense(params, "m", 2, 1, rng), n = make_dense(params, "n", 2, 1, rng);
    m.weight->value << 1, 0;
    n.weight->value << 1, 0;
    m.bias->value.setZero();
    n.bias->value.setZero();
    M c(2, 2);
    c << 0.2, 0.9, 0.5, 0.1;
    Tape<double> t(false);
    auto mp = spatial_edges_disemb(t, c, 2, m, n);
    EXPECT_NEAR(mp.value()(0, 1), 0.09, 1e-15);
    EXPECT_NEAR(mp.value()(1, 0), 0.09, 1e-15);
}

TEST(DisEmb, SymmetricUnderTying) {
    ParameterSet<double> params;
    Rng rng(49);
    auto sp = make_spatial_params(params, SpatialVariant::disemb, 0.2, 6, rng);
    sp.embed_n.weight->value = sp.embed_m.weight->value;
    sp.embed_n.bias->value = sp.embed_m.bias->value;
    const M c = random_centers(5, rng);
    Tape<double> t(false);
    const M mp = spatial_edges(t, c, 5, sp).value();
    EXPECT_LT(max_abs_diff(mp, mp.transpose()), 1e-14);
}

TEST(DisEmb, GradientWrtEmbeddingWeights) {
    ParameterSet<double> params;
    Rng rng(50);
    auto sp = make_spatial_params(params, SpatialVariant::disemb, 0.2, 4, rng);
    const M c = random_centers(6, rng);
    const M w = rand_matrix(6, 3, rng);
    auto r = grad_check_params(
        [&](Tape<double>& t) { return sum(mul(spatial_edges(t, c, 3, sp), t.constant(w))); },
        params);
    EXPECT_TRUE(r.passed) << r.max_rel_error;
}

TEST(Adjacency, OnesAndZerosGiveUniformRows) {
    Tape<double> t(false);
    auto a = correlation_adjacency(t.constant(M::Ones(4, 4)), t.constant(M::Zero(4, 4)));
    EXPECT_LT((a.value().array() - 0.25).abs().maxCoeff(), 1e-15);
}

TEST(Adjacency, SingleNodeGraph) {
    Rng rng(51);
    Tape<double> t(false);
    auto a = correlation_adjacency(t.constant(M::Constant(1, 1, 0.37)), t.constant(M::Constant(1, 1, -2.0)));
    EXPECT_NEAR(a.value()(0, 0), 1.0, 1e-15);
}

TEST(Adjacency, MatchesDirectFormulaOnPositiveInputs) {
    Rng rng(52);
    for (int trial = 0; trial < 50; ++trial) {
        const M ma = (rand_matrix(3, 3, rng).array() + 1.5).matrix();
        const M mp = rand_matrix(3, 3, rng, 3.0);
        Tape<double> t(false);
        auto a = correlation_adjacency(t.constant(ma), t.constant(mp));
        EXPECT_LT(max_abs_diff(a.value(), direct_adjacency(ma, mp)), 1e-9);
    }
}

TEST(Adjacency, RowsSumToOne) {
    Rng rng(53);
    for (int trial = 0; trial < 500; ++trial) {
        const M ma = (rand_matrix(11, 11, rng).array() + 1.01).matrix();
        const M mp = rand_matrix(11, 11, rng, 5.0);
        Tape<double> t(false);
        auto a = correlation_adjacency(t.constant(ma), t.constant(mp));
        for (Index i = 0; i < 11; ++i) EXPECT_NEAR(a.value().row(i).sum(), 1.0, 1e-6);
    }
}

TEST(Adjacency, RowShiftOfSpatialBiasIsInvariant) {
    Rng rng(54);
    const M ma = (rand_matrix(4, 4, rng).array() + 2.0).matrix();
    M mp = rand_matrix(4, 4, rng);
    Tape<double> t(false);
    const M a0 = correlation_adjacency(t.constant(ma), t.constant(mp)).value();
    mp.row(2).array() += 1.7;
    const M a1 = correlation_adjacency(t.constant(ma), t.constant(mp)).value();
    EXPECT_LT(max_abs_diff(a0, a1), 1e-12);
}

TEST(Adjacency, VanishingDenominatorFallsBackToUniform) {
    M ma(2, 2);
    ma << 1, -1, 0.5, 0.5;
    AdjacencyStats stats;
    Tape<double> t(false);
    auto a = correlation_adjacency(t.constant(ma), t.constant(M::Zero(2, 2)), AdjacencyMode::literal, &stats);
    EXPECT_EQ(stats.fallback_rows, 1u);
    EXPECT_DOUBLE_EQ(a.value()(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(a.value()(0, 1), 0.5);
    EXPECT_TRUE(a.value().allFinite());
}

TEST(Adjacency, ExponentIsClamped) {
    M mp(2, 2);
    mp << 1e6, 0, 0, 0;
    Tape<double> t(false);
    auto a = correlation_adjacency(t.constant(M::Ones(2, 2)), t.constant(mp));
    EXPECT_TRUE(a.value().allFinite());
    EXPECT_NEAR(a.value()(0, 0), std::exp(30.0) / (std::exp(30.0) + 1.0), 1e-12);
}

TEST(Adjacency, SoftmaxModeIsRowSoftmaxOfSum) {
    Rng rng(55);
    const M ma = rand_matrix(3, 3, rng), mp = rand_matrix(3, 3, rng);
    Tape<double> t(false);
    auto a = correlation_adjacency(t.constant(ma), t.constant(mp), AdjacencyMode::softmax);
    const M s = (ma + mp).array().exp().matrix();
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j) EXPECT_NEAR(a.value()(i, j), s(i, j) / s.row(i).sum(), 1e-12);
}

TEST(Adjacency, GradientBothInputs) {
    Rng rng(56);
    auto r = grad_check(
        [](Tape<double>& t, const std::vector<Var<double>>& in) {
            auto a = correlation_adjacency(in[0], in[1]);
            return sum(mul(a, t.constant(from_rows({{1, -2, 0.5}, {0.3, 0.7, -1}, {2, 0.1, -0.4}}))));
        },
        {(rand_matrix(3, 3, rng).array() * 0.4 + 0.6).matrix(), rand_matrix(3, 3, rng)});
    EXPECT_TRUE(r.passed) << r.max_rel_error;
}
