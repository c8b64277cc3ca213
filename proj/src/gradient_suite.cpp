#include "s2c/gradient_suite.hpp"

#include "s2c/model.hpp"
#include "s2c/ops.hpp"
#include "s2c/training.hpp"

#include <cmath>
#include <functional>

namespace s2c {

namespace {

using M = Matrix<double>;
using V = Var<double>;
using T = Tape<double>;

// Fixed non-uniform readout so symmetric errors cannot cancel.
V probe(T& tape, const V& out) {
    M w(out.rows(), out.cols());
    for (Index i = 0; i < w.rows(); ++i)
        for (Index j = 0; j < w.cols(); ++j) w(i, j) = std::sin(1.0 + 0.37 * static_cast<double>(i) + 0.71 * static_cast<double>(j));
    return sum(mul(out, tape.constant(std::move(w))));
}

M rand(Index r, Index c, Rng& rng) { return uniform_matrix<double>(r, c, 1.0, rng); }

// Pushes entries out of (-gap, gap) so kinks at zero are never straddled.
M away_from_zero(M m, double gap) {
    for (Index i = 0; i < m.size(); ++i) {
        double& v = m.data()[i];
        if (std::abs(v) < gap) v = v < 0 ? -gap - std::abs(v) : gap + std::abs(v);
    }
    return m;
}

M centers(Index rows, Rng& rng) {
    M c(rows, 2);
    for (Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(0.05, 0.95);
    return c;
}

struct Case {
    std::string name;
    std::function<GradCheckReport(const GradCheckOptions&, Rng&)> run;
};

AagConfig small_aag(Index layers) {
    AagConfig c;
    c.layers = layers;
    c.heads = 2;
    c.d = 8;
    c.ffn_hidden = 16;
    c.head_hidden = 8;
    return c;
}

std::vector<Case> suite() {
    std::vector<Case> cases;
    auto add_case = [&](std::string name, std::function<GradCheckReport(const GradCheckOptions&, Rng&)> fn) {
        cases.push_back({std::move(name), std::move(fn)});
    };

    add_case("matmul", [](const GradCheckOptions& o, Rng& rng) {
        return grad_check([](T& t, const std::vector<V>& x) { return probe(t, matmul(x[0], x[1])); },
                          {rand(3, 4, rng), rand(4, 2, rng)}, o);
    });
    add_case("matmul_nt", [](const GradCheckOptions& o, Rng& rng) {
        return grad_check([](T& t, const std::vector<V>& x) { return probe(t, matmul_nt(x[0], x[1])); },
                          {rand(3, 4, rng), rand(2, 4, rng)}, o);
    });
    add_case("elementwise", [](const GradCheckOptions& o, Rng& rng) {
        return grad_check(
            [](T& t, const std::vector<V>& x) {
                return probe(t, add(mul(x[0], x[1]), sub(scale(x[0], 0.5), transpose(x[2]))));
            },
            {rand(3, 4, rng), rand(3, 4, rng), rand(4, 3, rng)}, o);
    });
    add_case("add_row", [](const GradCheckOptions& o, Rng& rng) {
        return grad_check([](T& t, const std::vector<V>& x) { return probe(t, add_row(x[0], x[1])); },
                          {rand(4, 3, rng), rand(1, 3, rng)}, o);
    });
    add_case("relu", [](const GradCheckOptions& o, Rng& rng) {
        return grad_check([](T& t, const std::vector<V>& x) { return probe(t, relu(x[0])); },
                          {away_from_zero(rand(4, 5, rng), 0.05)}, o);
    });
    add_case("exp_square", [](const GradCheckOptions& o, Rng& rng) {
        return grad_check([](T& t, const std::vector<V>& x) { return probe(t, add(exp(x[0]), square(x[0]))); },
                          {rand(3, 3, rng)}, o);
    });
    add_case("clamp", [](const GradCheckOptions& o, Rng& rng) {
        M m = rand(4, 4, rng);
        for (Index i = 0; i < m.size(); ++i)
            if (std::abs(std::abs(m.data()[i]) - 0.5) < 0.05) m.data()[i] *= 0.8;
        return grad_check([](T& t, const std::vector<V>& x) { return probe(t, clamp(x[0], -0.5, 0.5)); }, {m}, o);
    });
    add_case("sum_mean", [](const GradCheckOptions& o, Rng& rng) {
        return grad_check(
            [](T&, const std::vector<V>& x) { return add(sum(square(x[0])), scale(mean(exp(x[0])), 3.0)); },
            {rand(3, 5, rng)}, o);
    });
    add_case("softmax_rows", [](const GradCheckOptions& o, Rng& rng) {
        return grad_check([](T& t, const std::vector<V>& x) { return probe(t, softmax_rows(x[0])); },
                          {rand(4, 6, rng)}, o);
    });
    add_case("layer_norm", [](const GradCheckOptions& o, Rng& rng) {
        return grad_check([](T& t, const std::vector<V>& x) { return probe(t, layer_norm(x[0], x[1], x[2])); },
                          {rand(4, 6, rng), rand(1, 6, rng), rand(1, 6, rng)}, o);
    });
    add_case("reshape_gather", [](const GradCheckOptions& o, Rng& rng) {
        return grad_check(
            [](T& t, const std::vector<V>& x) {
                auto a = concat_cols<double>({slice_cols(x[0], 1, 2), x[1]});
                auto b = concat_rows<double>({a, gather_rows(a, {2, 0, 0})});
                return probe(t, reshape(b, 3, 6));
            },
            {rand(3, 4, rng), rand(3, 1, rng)}, o);
    });
    add_case("group_ops", [](const GradCheckOptions& o, Rng& rng) {
        return grad_check(
            [](T& t, const std::vector<V>& x) {
                auto logits = group_matmul_nt(x[0], x[1], 3);
                auto mixed = group_matmul(softmax_rows(logits), x[2], 3);
                return add(probe(t, mixed), probe(t, group_sqdist(x[0], x[1], 3)));
            },
            {rand(6, 4, rng), rand(6, 4, rng), rand(6, 2, rng)}, o);
    });
    add_case("conv3x3_s2", [](const GradCheckOptions& o, Rng& rng) {
        return grad_check(
            [](T& t, const std::vector<V>& x) { return probe(t, conv3x3_s2(x[0], 6, 5, x[1], x[2])); },
            {rand(30, 2, rng), rand(18, 3, rng), rand(1, 3, rng)}, o);
    });
    add_case("mlp_forward", [](const GradCheckOptions& o, Rng& rng) {
        ParameterSet<double> ps;
        std::vector<Dense<double>> layers{make_dense(ps, "l1", 8, 16, rng), make_dense(ps, "l2", 16, 1, rng)};
        M x = rand(5, 8, rng);
        return grad_check_params([&](T& t) { return probe(t, mlp_forward(t, t.constant(x), layers)); }, ps, o);
    });
    add_case("toy_backbone", [](const GradCheckOptions& o, Rng& rng) {
        ParameterSet<double> ps;
        auto net = make_backbone(ps, 4, rng);
        Image img(32, 32);
        for (auto& v : img.rgb) v = static_cast<float>(rng.uniform());
        auto opts = o;
        opts.stride = 3;
        return grad_check_params(
            [&](T& t) {
                FeatureGeometry g;
                return probe(t, toy_backbone(t, net, img, &g));
            },
            ps, opts);
    });

    const FeatureGeometry geom{2, 3, 4, 8.0};
    const std::vector<RegionBox> boxes{make_box(2, 3, 21, 17), make_box(9.5, 0, 32, 24), make_box(0, 5, 13, 11)};
    add_case("roi_align", [geom, boxes](const GradCheckOptions& o, Rng& rng) {
        const auto plan = roi_align_plan(geom, boxes, 3);
        return grad_check([plan](T& t, const std::vector<V>& x) { return probe(t, sparse_pool(x[0], plan)); },
                          {rand(geom.positions(), geom.channels, rng)}, o);
    });
    add_case("rod_align", [geom, boxes](const GradCheckOptions& o, Rng& rng) {
        const auto plan = rod_align_plan(geom, boxes, 3);
        return grad_check([plan](T& t, const std::vector<V>& x) { return probe(t, sparse_pool(x[0], plan)); },
                          {rand(geom.positions(), geom.channels, rng)}, o);
    });
    add_case("build_nodes", [geom, boxes](const GradCheckOptions& o, Rng& rng) {
        ParameterSet<double> ps;
        auto proj = make_node_projection(ps, geom.channels, 2, 6, rng);
        M fm = rand(geom.positions(), geom.channels, rng);
        const auto props = prepare_proposals(std::span(boxes).subspan(1), 3, 32, 24);
        const std::vector<RegionBox> crops{boxes[0], boxes[2]};
        return grad_check_params(
            [&](T& t) { return probe(t, build_nodes(t, t.constant(fm), geom, 32, 24, crops, props, proj, 2).features); },
            ps, o);
    });

    add_case("semantic_edges", [](const GradCheckOptions& o, Rng& rng) {
        ParameterSet<double> ps;
        auto phi = make_dense(ps, "phi", 6, 5, rng);
        auto varphi = make_dense(ps, "varphi", 6, 5, rng);
        M x = rand(8, 6, rng);
        return grad_check_params([&](T& t) { return probe(t, semantic_edges(t, t.constant(x), phi, varphi, 4)); }, ps,
                                 o);
    });
    add_case("spatial_disdrop", [](const GradCheckOptions& o, Rng& rng) {
        ParameterSet<double> ps;
        auto sp = make_spatial_params(ps, SpatialVariant::disdrop, 0.5, 6, rng);
        M c = centers(8, rng);
        return grad_check_params([&](T& t) { return probe(t, spatial_edges(t, c, 4, sp)); }, ps, o);
    });
    add_case("spatial_disemb", [](const GradCheckOptions& o, Rng& rng) {
        ParameterSet<double> ps;
        auto sp = make_spatial_params(ps, SpatialVariant::disemb, 0.2, 6, rng);
        M c = centers(8, rng);
        return grad_check_params([&](T& t) { return probe(t, spatial_edges(t, c, 4, sp)); }, ps, o);
    });
    add_case("adjacency_literal", [](const GradCheckOptions& o, Rng& rng) {
        M ma = rand(8, 4, rng).array() * 0.4 + 0.6;  // positive rows keep the normalizer well away from zero
        return grad_check(
            [](T& t, const std::vector<V>& x) { return probe(t, correlation_adjacency(x[0], x[1], AdjacencyMode::literal)); },
            {ma, rand(8, 4, rng)}, o);
    });
    add_case("adjacency_softmax", [](const GradCheckOptions& o, Rng& rng) {
        return grad_check(
            [](T& t, const std::vector<V>& x) { return probe(t, correlation_adjacency(x[0], x[1], AdjacencyMode::softmax)); },
            {rand(8, 4, rng), rand(8, 4, rng)}, o);
    });
    add_case("feature_aggregation_gate", [](const GradCheckOptions& o, Rng& rng) {
        M adj = rand(8, 4, rng).array().abs();
        return grad_check(
            [](T& t, const std::vector<V>& x) { return probe(t, feature_aggregation_gate(x[0], x[1], x[2], 4)); },
            {rand(8, 5, rng), adj, rand(5, 5, rng)}, o);
    });
    add_case("s2o_self_attention", [](const GradCheckOptions& o, Rng& rng) {
        ParameterSet<double> ps;
        const auto cfg = small_aag(1);
        auto params = make_aag_params(ps, cfg, rng);
        return grad_check(
            [&](T& t, const std::vector<V>& x) {
                return probe(t, s2o_self_attention(t, x[0], x[1], x[2], x[3], params.layers[0], cfg, 4));
            },
            {rand(8, 8, rng), rand(8, 8, rng), rand(8, 4, rng), rand(8, 4, rng)}, o);
    });
    add_case("aag_layer", [](const GradCheckOptions& o, Rng& rng) {
        ParameterSet<double> ps;
        const auto cfg = small_aag(1);
        auto params = make_aag_params(ps, cfg, rng);
        M x = rand(8, 8, rng), mp = rand(8, 4, rng);
        return grad_check_params(
            [&](T& t) { return probe(t, aag_layer(t, t.constant(x), t.constant(mp), params.layers[0], cfg, 4)); }, ps,
            o);
    });
    add_case("aag_block_2_layers", [](const GradCheckOptions& o, Rng& rng) {
        ParameterSet<double> ps;
        const auto cfg = small_aag(2);
        auto params = make_aag_params(ps, cfg, rng);
        M x = rand(8, 8, rng), mp = rand(8, 4, rng);
        return grad_check_params(
            [&](T& t) { return probe(t, aag_block(t, t.constant(x), t.constant(mp), params, cfg, 4)); }, ps, o);
    });
    add_case("full_model", [](const GradCheckOptions& o, Rng& rng) {
        ModelConfig mc;
        mc.aag = small_aag(2);
        mc.proposals = 3;
        mc.roi_size = 2;
        mc.map_channels = 4;
        mc.spatial_hidden = 4;
        Model<double> model(mc, rng.next());
        Image img(48, 32);
        for (auto& v : img.rgb) v = static_cast<float>(rng.uniform());
        const std::vector<RegionBox> props{make_box(4, 4, 20, 20, BoxRole::object_proposal),
                                           make_box(24, 8, 44, 30, BoxRole::object_proposal)};
        const auto prepared = prepare_proposals(props, 3, 48, 32);
        const std::vector<RegionBox> crops{make_box(0, 0, 40, 30), make_box(8, 2, 48, 32)};
        auto opts = o;
        opts.stride = 3;
        return grad_check_params(
            [&](T& t) {
                SceneInput s{&img, nullptr, 48, 32};
                auto f = model.features(t, s);
                return probe(t, model.score(t, f, prepared, crops));
            },
            model.params(), opts);
    });
    add_case("loss_pred", [](const GradCheckOptions& o, Rng& rng) {
        // differences straddle both sides of the |t| = 1 breakpoint without touching it
        const std::vector<double> offsets{0.3, -0.7, 0.95, -1.05, 1.6, -2.2, 0.99, -0.999};
        std::vector<double> truth;
        M pred(static_cast<Index>(offsets.size()), 1);
        for (std::size_t i = 0; i < offsets.size(); ++i) {
            truth.push_back(rng.uniform(1, 5));
            pred(static_cast<Index>(i), 0) = truth.back() + offsets[i];
        }
        return grad_check([truth](T&, const std::vector<V>& x) { return loss_pred(x[0], truth); }, {pred}, o);
    });
    add_case("loss_pred_mos_weighted", [](const GradCheckOptions& o, Rng& rng) {
        std::vector<double> truth;
        for (int i = 0; i < 6; ++i) truth.push_back(rng.uniform(1, 5));
        return grad_check(
            [truth](T&, const std::vector<V>& x) { return loss_pred(x[0], truth, PredWeighting::mos); },
            {rand(6, 1, rng).array() * 2.0 + 3.0}, o);
    });
    add_case("loss_rank", [](const GradCheckOptions& o, Rng& rng) {
        std::vector<double> truth;
        for (int i = 0; i < 7; ++i) truth.push_back(rng.uniform(1, 5));
        return grad_check(
            [truth](T&, const std::vector<V>& x) { return loss_rank(x[0], truth, 0.3); }, {rand(7, 1, rng)}, o);
    });
    return cases;
}

} // namespace

std::vector<std::string> gradient_suite_names() {
    std::vector<std::string> names;
    for (const auto& c : suite()) names.push_back(c.name);
    return names;
}

std::vector<GradCheckReport> run_gradient_suite(std::uint64_t seed, const std::string& corrupt, double tolerance) {
    std::vector<GradCheckReport> reports;
    for (const auto& c : suite()) {
        Rng rng(seed);
        GradCheckOptions o;
        o.tolerance = tolerance;
        o.corrupt = c.name == corrupt;
        auto r = c.run(o, rng);
        r.name = c.name;
        reports.push_back(r);
    }
    return reports;
}

} // namespace s2c
