#include "s2c/gradcheck.hpp"
#include "s2c/ops.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace s2c;
using namespace s2c::test;

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
    Rng rng(1);
    Tape<double> tape;
    const M m = rand_matrix(3, 3, rng);
    auto out = matmul(tape.constant(M::Identity(3, 3)), tape.constant(m));
    EXPECT_EQ(out.value(), m);
}

TEST(Matmul, HandExample) {
    Tape<double> tape;
    auto out = matmul(tape.constant(from_rows({{1, 2}, {3, 4}})), tape.constant(from_rows({{0}, {1}})));
    EXPECT_EQ(out.value(), from_rows({{2}, {4}}));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
    Tape<double> tape;
    try {
        matmul(tape.constant(M::Zero(2, 3)), tape.constant(M::Zero(4, 5)));
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("[2 x 3]"), std::string::npos) << what;
        EXPECT_NE(what.find("[4 x 5]"), std::string::npos) << what;
    }
}

TEST(Matmul, GradientOfSumIsOtherOperandTransposedBroadcast) {
    Rng rng(2);
    Tape<double> tape;
    auto a = tape.variable(rand_matrix(2, 3, rng));
    auto b = tape.variable(rand_matrix(3, 4, rng));
    tape.backward(sum(matmul(a, b)));
    const M expected = M::Ones(2, 4) * b.value().transpose();
    EXPECT_LT(max_abs_diff(tape.gradient(a), expected), 1e-12);
}

TEST(Softmax, EqualRowIsUniform) {
    Tape<double> tape;
    auto out = softmax_rows(tape.constant(M::Constant(1, 4, 2.5)));
    for (Index j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(out.value()(0, j), 0.25);
}

TEST(Softmax, ClosedFormLn3) {
    Tape<double> tape;
    auto out = softmax_rows(tape.constant(from_rows({{0.0, std::log(3.0)}})));
    EXPECT_NEAR(out.value()(0, 0), 0.25, 1e-15);
    EXPECT_NEAR(out.value()(0, 1), 0.75, 1e-15);
}

TEST(Softmax, LargeEntryStaysFinite) {
    Tape<double> tape;
    auto out = softmax_rows(tape.constant(from_rows({{1e4, 0.0, -3.0}})));
    EXPECT_TRUE(out.value().allFinite());
    EXPECT_NEAR(out.value().sum(), 1.0, 1e-12);
}

TEST(Softmax, RowsSumToOneAndStayInUnitInterval) {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        Tape<double> tape;
        auto out = softmax_rows(tape.constant(rand_matrix(5, 7, rng, 20.0)));
        for (Index i = 0; i < 5; ++i) EXPECT_NEAR(out.value().row(i).sum(), 1.0, 1e-9);
        EXPECT_GE(out.value().minCoeff(), 0.0);
        EXPECT_LE(out.value().maxCoeff(), 1.0);
    }
}

TEST(LayerNorm, ConstantRowBecomesZero) {
    Tape<double> tape;
    auto out = layer_norm(tape.constant(M::Constant(1, 5, 3.0)), tape.constant(M::Ones(1, 5)), tape.constant(M::Zero(1, 5)));
    EXPECT_LT(out.value().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LayerNorm, HandExample) {
    Tape<double> tape;
    auto out = layer_norm(tape.constant(from_rows({{1, 3}})), tape.constant(M::Ones(1, 2)), tape.constant(M::Zero(1, 2)));
    // variance 1, epsilon 1e-5
    const double s = 1.0 / std::sqrt(1.0 + 1e-5);
    EXPECT_NEAR(out.value()(0, 0), -s, 1e-12);
    EXPECT_NEAR(out.value()(0, 1), s, 1e-12);
    EXPECT_NEAR(out.value()(0, 1), 1.0, 1e-5);
}

TEST(LayerNorm, GradientMatchesFiniteDifferences) {
    Rng rng(4);
    auto r = grad_check(
        [](Tape<double>& t, const std::vector<Var<double>>& in) {
            auto w = t.constant(from_rows({{0.3, -1.2, 0.7, 2.0}, {1.1, 0.4, -0.5, 0.9}}));
            return sum(mul(layer_norm(in[0], in[1], in[2]), w));
        },
        {rand_matrix(2, 4, rng), rand_matrix(1, 4, rng), rand_matrix(1, 4, rng)});
    EXPECT_TRUE(r.passed) << r.max_rel_error;
}

TEST(Mlp, ZeroWeightsGiveBias) {
    ParameterSet<double> params;
    Rng rng(5);
    auto layer = make_dense(params, "fc", 4, 3, rng);
    layer.weight->value.setZero();
    layer.bias->value = from_rows({{1, -2, 0.5}});
    Tape<double> tape;
    auto out = mlp_forward(tape, tape.constant(rand_matrix(6, 4, rng)), {layer});
    for (Index i = 0; i < 6; ++i) EXPECT_EQ(out.value().row(i), layer.bias->value.row(0));
}

TEST(Mlp, SingleAffineUnit) {
    ParameterSet<double> params;
    Rng rng(6);
    auto layer = make_dense(params, "fc", 1, 1, rng);
    layer.weight->value(0, 0) = 2;
    layer.bias->value(0, 0) = 1;
    Tape<double> tape;
    auto out = mlp_forward(tape, tape.constant(from_rows({{3}})), {layer});
    EXPECT_DOUBLE_EQ(out.value()(0, 0), 7.0);
}

TEST(Mlp, BrokenChainIsConfigError) {
    ParameterSet<double> params;
    Rng rng(7);
    auto a = make_dense(params, "a", 4, 3, rng);
    auto b = make_dense(params, "b", 5, 1, rng);
    Tape<double> tape;
    EXPECT_THROW(mlp_forward(tape, tape.constant(M::Zero(1, 4)), {a, b}), ConfigError);
}

TEST(Mlp, TwoLayerGradientCheck) {
    ParameterSet<double> params;
    Rng rng(8);
    auto l1 = make_dense(params, "l1", 8, 16, rng);
    auto l2 = make_dense(params, "l2", 16, 1, rng);
    const M x = rand_matrix(5, 8, rng);
    auto r = grad_check_params(
        [&](Tape<double>& t) { return sum(mlp_forward(t, t.constant(x), {l1, l2})); }, params);
    EXPECT_TRUE(r.passed) << r.max_rel_error;
}

TEST(Mlp, InitializationBound) {
    ParameterSet<double> params;
    Rng rng(9);
    auto l = make_dense(params, "l", 25, 40, rng);
    EXPECT_LE(l.weight->value.cwiseAbs().maxCoeff(), 1.0 / 5.0);
    EXPECT_LE(l.bias->value.cwiseAbs().maxCoeff(), 1.0 / 5.0);
}

TEST(GradCheck, MatmulSumSelfTestIsTight) {
    Rng rng(10);
    auto r = grad_check([](Tape<double>&, const std::vector<Var<double>>& in) { return sum(matmul(in[0], in[1])); },
                        {rand_matrix(3, 4, rng), rand_matrix(4, 2, rng)});
    EXPECT_TRUE(r.passed);
    EXPECT_LT(r.max_rel_error, 1e-7);
}

TEST(GradCheck, CorruptedGradientIsReported) {
    Rng rng(11);
    GradCheckOptions opt;
    opt.corrupt = true;
    auto r = grad_check([](Tape<double>&, const std::vector<Var<double>>& in) { return sum(square(in[0])); },
                        {rand_matrix(3, 3, rng)}, opt);
    EXPECT_FALSE(r.passed);
}

TEST(GradCheck, NonScalarOutputIsUsageError) {
    EXPECT_THROW(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) { return in[0]; }, {M::Zero(2, 2)}),
                 UsageError);
}

TEST(Tape, ParameterUsedTwiceAccumulatesExactly) {
    Rng rng(12);
    ParameterSet<double> params;
    auto& p = params.add("w", rand_matrix(3, 2, rng));
    const M x1 = rand_matrix(4, 3, rng), x2 = rand_matrix(5, 3, rng);

    auto single = [&](const M& x) {
        p.zero_grad();
        Tape<double> t;
        t.backward(sum(matmul(t.constant(x), t.param(p))));
        return M(p.grad);
    };
    const M g1 = single(x1), g2 = single(x2);
    p.zero_grad();
    Tape<double> t;
    auto w = t.param(p);
    t.backward(add(sum(matmul(t.constant(x1), w)), sum(matmul(t.constant(x2), w))));
    EXPECT_EQ(p.grad, M(g1 + g2));
}

TEST(Tape, GradientShapeAlwaysMatchesValue) {
    Rng rng(13);
    ParameterSet<double> params;
    auto& p = params.add("w", rand_matrix(3, 2, rng));
    EXPECT_EQ(p.grad.rows(), 3);
    EXPECT_EQ(p.grad.cols(), 2);
    Tape<double> t;
    t.backward(sum(relu(t.param(p))));
    EXPECT_EQ(p.grad.rows(), 3);
    EXPECT_EQ(p.grad.cols(), 2);
}

TEST(Ops, ForwardOutputsFiniteOnFiniteInputs) {
    Rng rng(14);
    Tape<double> t;
    auto a = t.constant(rand_matrix(4, 4, rng, 50.0));
    for (const auto& v : {softmax_rows(a), layer_norm(a, t.constant(M::Ones(1, 4)), t.constant(M::Zero(1, 4))),
                          relu(a), exp(clamp(a, -30.0, 30.0)), square(a)})
        EXPECT_TRUE(v.value().allFinite());
}

TEST(Ops, GatherConcatReshapeRoundTrip) {
    Rng rng(15);
    Tape<double> t;
    const M m = rand_matrix(4, 6, rng);
    auto a = t.constant(m);
    EXPECT_EQ(concat_cols<double>({slice_cols(a, 0, 2), slice_cols(a, 2, 4)}).value(), m);
    EXPECT_EQ(reshape(reshape(a, 8, 3), 4, 6).value(), m);
    auto g = gather_rows(a, {3, 0});
    EXPECT_EQ(g.value().row(0), m.row(3));
    EXPECT_EQ(g.value().row(1), m.row(0));
}
