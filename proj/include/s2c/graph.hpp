#ifndef S2C_GRAPH_HPP
#define S2C_GRAPH_HPP

#include "s2c/nn.hpp"

#include <string>
#include <vector>

namespace s2c {

enum class SpatialVariant { disdrop, disemb };
enum class AdjacencyMode { literal, softmax };

SpatialVariant parse_spatial_variant(const std::string& name);
std::string to_string(SpatialVariant v);
AdjacencyMode parse_adjacency_mode(const std::string& name);
std::string to_string(AdjacencyMode m);

/// Learned maps behind the spatial edge. Only the members of the active
/// variant are populated.
template <typename S>
struct SpatialEdgeParams {
    SpatialVariant variant = SpatialVariant::disemb;
    double eps = 0.2;
    std::vector<Dense<S>> psi;  // distance perceptron 1 -> h -> 1
    Dense<S> embed_m;           // centre embeddings 2 -> e
    Dense<S> embed_n;
};

template <typename S>
SpatialEdgeParams<S> make_spatial_params(ParameterSet<S>& params, SpatialVariant variant, double eps, Index hidden,
                                         Rng& rng);

/// Per-group M_a(i, j) = phi(x_i) . varphi(x_j) / sqrt(d').
template <typename S>
Var<S> semantic_edges(Tape<S>& tape, const Var<S>& nodes, const Dense<S>& phi, const Dense<S>& varphi, Index group);

/// Pairwise Euclidean distances of normalized centres, per group.
template <typename S>
Matrix<S> center_distances(const Matrix<S>& centers, Index group);

/// psi(distance) where distance <= eps, zero elsewhere.
template <typename S>
Var<S> spatial_edges_disdrop(Tape<S>& tape, const Matrix<S>& centers, Index group, double eps,
                             const std::vector<Dense<S>>& psi);

/// ||(W_m p_i + b_m) - (W_n p_j + b_n)||^2 per group.
template <typename S>
Var<S> spatial_edges_disemb(Tape<S>& tape, const Matrix<S>& centers, Index group, const Dense<S>& embed_m,
                            const Dense<S>& embed_n);

template <typename S>
Var<S> spatial_edges(Tape<S>& tape, const Matrix<S>& centers, Index group, const SpatialEdgeParams<S>& params);

struct AdjacencyStats {
    std::size_t fallback_rows = 0;
};

inline constexpr double kAdjacencyExponentClamp = 30.0;
inline constexpr double kAdjacencyDenominatorFloor = 1e-8;

/// Literal mode: A(i,j) = M_a(i,j) e^{M_p(i,j)} / sum_j M_a(i,j) e^{M_p(i,j)}, exponent
/// clamped to +-30. Rows whose denominator magnitude falls below 1e-8 become
/// uniform and are counted in `stats`. Softmax mode: softmax_rows(M_a + M_p).
template <typename S>
Var<S> correlation_adjacency(const Var<S>& semantic, const Var<S>& spatial, AdjacencyMode mode = AdjacencyMode::literal,
                             AdjacencyStats* stats = nullptr);

template <typename S>
struct EdgeTensors {
    Var<S> semantic;
    Var<S> spatial;
    Var<S> adjacency;
    SpatialVariant variant = SpatialVariant::disemb;
};

} // namespace s2c

#endif
