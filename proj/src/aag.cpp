#include "s2c/aag.hpp"

#include <cmath>

namespace s2c {

void AagConfig::validate() const {
    if (layers < 1) throw ConfigError("aag: layers must be >= 1");
    if (heads < 1 || d < 1 || d % heads != 0)
        throw ConfigError("aag: heads (" + std::to_string(heads) + ") must divide d (" + std::to_string(d) + ")");
}

template <typename S>
AagParams<S> make_aag_params(ParameterSet<S>& params, const AagConfig& config, Rng& rng) {
    config.validate();
    const Index d = config.d;
    AagParams<S> p;
    for (Index l = 0; l < config.layers; ++l) {
        const std::string pre = "aag.layer" + std::to_string(l) + ".";
        AagLayerParams<S> layer;
        if (config.use_semantic) {
            layer.phi = make_dense(params, pre + "phi", d, d, rng);
            layer.varphi = make_dense(params, pre + "varphi", d, d, rng);
        }
        if (config.use_gate)
            layer.gate = &params.add(pre + "gate", uniform_matrix<S>(d, d, 1.0 / std::sqrt(double(d)), rng));
        layer.norm1 = make_norm(params, pre + "norm1", d);
        layer.query = make_dense(params, pre + "query", d, d, rng);
        layer.key = make_dense(params, pre + "key", d, d, rng);
        layer.value = make_dense(params, pre + "value", d, d, rng);
        layer.output = make_dense(params, pre + "output", d, d, rng);
        layer.norm2 = make_norm(params, pre + "norm2", d);
        layer.ffn1 = make_dense(params, pre + "ffn1", d, config.ffn_width(), rng);
        layer.ffn2 = make_dense(params, pre + "ffn2", config.ffn_width(), d, rng);
        p.layers.push_back(layer);
    }
    p.head.push_back(make_dense(params, "head.fc1", d, config.head_width(), rng));
    p.head.push_back(make_dense(params, "head.fc2", config.head_width(), 1, rng));
    return p;
}

template <typename S>
Var<S> feature_aggregation_gate(const Var<S>& x, const Var<S>& adjacency, const Var<S>& w_z, Index group) {
    return relu(group_matmul(adjacency, matmul(x, w_z), group));
}

template <typename S>
Var<S> s2o_self_attention(Tape<S>& tape, const Var<S>& q_src, const Var<S>& kv_src, const Var<S>& semantic,
                          const Var<S>& spatial, const AagLayerParams<S>& layer, const AagConfig& config, Index group,
                          std::vector<Matrix<S>>* weights) {
    auto q = dense_forward(tape, layer.query, q_src);
    auto k = dense_forward(tape, layer.key, kv_src);
    auto v = dense_forward(tape, layer.value, kv_src);
    const Index hd = config.head_dim();
    const S inv = S(1) / std::sqrt(static_cast<S>(hd));
    Var<S> bias;
    if (semantic.valid()) bias = semantic;
    if (spatial.valid()) bias = bias.valid() ? add(bias, spatial) : spatial;
    std::vector<Var<S>> heads;
    for (Index h = 0; h < config.heads; ++h) {
        auto qh = slice_cols(q, h * hd, hd);
        auto kh = slice_cols(k, h * hd, hd);
        auto vh = slice_cols(v, h * hd, hd);
        auto logits = scale(group_matmul_nt(qh, kh, group), inv);
        if (bias.valid()) logits = add(logits, bias);
        auto attn = softmax_rows(logits);
        if (weights != nullptr) weights->push_back(attn.value());
        heads.push_back(group_matmul(attn, vh, group));
    }
    auto merged = heads.size() == 1 ? heads.front() : concat_cols(heads);
    return dense_forward(tape, layer.output, merged);
}

template <typename S>
Var<S> aag_layer(Tape<S>& tape, const Var<S>& x, const Var<S>& spatial, const AagLayerParams<S>& layer,
                 const AagConfig& config, Index group, AdjacencyStats* stats) {
    Var<S> semantic;
    if (config.use_semantic) semantic = semantic_edges(tape, x, layer.phi, layer.varphi, group);
    Var<S> spatial_bias = config.use_spatial ? spatial : Var<S>();

    Var<S> gated = x;
    if (config.use_gate) {
        auto ma = semantic.valid() ? semantic : tape.constant(Matrix<S>::Ones(x.rows(), group));
        auto mp = spatial_bias.valid() ? spatial_bias : tape.constant(Matrix<S>::Zero(x.rows(), group));
        auto adjacency = correlation_adjacency(ma, mp, config.adjacency, stats);
        gated = feature_aggregation_gate(x, adjacency, tape.param(*layer.gate), group);
    }
    auto q_src = norm_forward(tape, layer.norm1, gated);
    auto kv_src = config.use_gate ? norm_forward(tape, layer.norm1, x) : q_src;
    auto attended = add(s2o_self_attention(tape, q_src, kv_src, semantic, spatial_bias, layer, config, group), gated);
    auto ffn = mlp_forward(tape, norm_forward(tape, layer.norm2, attended), {layer.ffn1, layer.ffn2});
    return add(ffn, attended);
}

template <typename S>
Var<S> aag_block(Tape<S>& tape, const Var<S>& x, const Var<S>& spatial, const AagParams<S>& params,
                 const AagConfig& config, Index group, AdjacencyStats* stats) {
    Var<S> h = x;
    for (const auto& layer : params.layers) h = aag_layer(tape, h, spatial, layer, config, group, stats);
    return h;
}

template <typename S>
Var<S> score_head(Tape<S>& tape, const Var<S>& x, const std::vector<Dense<S>>& head, Index group) {
    if (group <= 0 || x.rows() % group != 0)
        throw DimensionError("score_head: " + shape_of(x.value()) + " not grouped by " + std::to_string(group));
    std::vector<Index> crop_rows;
    for (Index g = 0; g < x.rows() / group; ++g) crop_rows.push_back(g * group);
    return mlp_forward(tape, gather_rows(x, std::move(crop_rows)), head);
}

#define S2C_INSTANTIATE_AAG(S)                                                                                       \
    template AagParams<S> make_aag_params(ParameterSet<S>&, const AagConfig&, Rng&);                                 \
    template Var<S> feature_aggregation_gate(const Var<S>&, const Var<S>&, const Var<S>&, Index);                    \
    template Var<S> s2o_self_attention(Tape<S>&, const Var<S>&, const Var<S>&, const Var<S>&, const Var<S>&,         \
                                       const AagLayerParams<S>&, const AagConfig&, Index, std::vector<Matrix<S>>*);  \
    template Var<S> aag_layer(Tape<S>&, const Var<S>&, const Var<S>&, const AagLayerParams<S>&, const AagConfig&,    \
                              Index, AdjacencyStats*);                                                               \
    template Var<S> aag_block(Tape<S>&, const Var<S>&, const Var<S>&, const AagParams<S>&, const AagConfig&, Index,  \
                              AdjacencyStats*);                                                                      \
    template Var<S> score_head(Tape<S>&, const Var<S>&, const std::vector<Dense<S>>&, Index);

S2C_INSTANTIATE_AAG(float)
S2C_INSTANTIATE_AAG(double)

} // namespace s2c
