#ifndef S2C_AAG_HPP
#define S2C_AAG_HPP

#include "s2c/graph.hpp"

#include <vector>

namespace s2c {

struct AagConfig {
    Index layers = 2;
    Index heads = 4;
    Index d = 32;
    Index ffn_hidden = 0;   // 0 selects 4 * d
    Index head_hidden = 0;  // score MLP hidden width, 0 selects d

    // Ablation switches: the gate, the semantic bias, the spatial bias.
    bool use_gate = true;
    bool use_semantic = true;
    bool use_spatial = true;
    AdjacencyMode adjacency = AdjacencyMode::literal;

    Index head_dim() const { return d / heads; }
    Index ffn_width() const { return ffn_hidden > 0 ? ffn_hidden : 4 * d; }
    Index head_width() const { return head_hidden > 0 ? head_hidden : d; }
    void validate() const;
};

template <typename S>
struct AagLayerParams {
    Dense<S> phi;     // semantic edge projections
    Dense<S> varphi;
    Parameter<S>* gate = nullptr;  // d x d
    NormParams<S> norm1;
    Dense<S> query, key, value, output;
    NormParams<S> norm2;
    Dense<S> ffn1, ffn2;
};

template <typename S>
struct AagParams {
    std::vector<AagLayerParams<S>> layers;
    std::vector<Dense<S>> head;  // d -> head_width -> 1
};

template <typename S>
AagParams<S> make_aag_params(ParameterSet<S>& params, const AagConfig& config, Rng& rng);

/// ReLU(A (X W_z)), block-diagonal over groups.
template <typename S>
Var<S> feature_aggregation_gate(const Var<S>& x, const Var<S>& adjacency, const Var<S>& w_z, Index group);

/// Multi-head attention with queries from `q_src`, keys/values from `kv_src`,
/// and the same scalar biases added to every head's logits. Invalid bias
/// handles are skipped. When `weights` is given it receives each head's
/// attention matrix.
template <typename S>
Var<S> s2o_self_attention(Tape<S>& tape, const Var<S>& q_src, const Var<S>& kv_src, const Var<S>& semantic,
                          const Var<S>& spatial, const AagLayerParams<S>& layer, const AagConfig& config, Index group,
                          std::vector<Matrix<S>>* weights = nullptr);

/// One stacked layer. Semantic edges come from the layer input; the fixed
/// spatial matrix is shared by all layers.
template <typename S>
Var<S> aag_layer(Tape<S>& tape, const Var<S>& x, const Var<S>& spatial, const AagLayerParams<S>& layer,
                 const AagConfig& config, Index group, AdjacencyStats* stats = nullptr);

template <typename S>
Var<S> aag_block(Tape<S>& tape, const Var<S>& x, const Var<S>& spatial, const AagParams<S>& params,
                 const AagConfig& config, Index group, AdjacencyStats* stats = nullptr);

/// Scores the crop node (row 0 of each group): one value per group.
template <typename S>
Var<S> score_head(Tape<S>& tape, const Var<S>& x, const std::vector<Dense<S>>& head, Index group);

} // namespace s2c

#endif
