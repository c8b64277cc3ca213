#include "s2c/graph.hpp"

#include <cmath>
#include <memory>

namespace s2c {

SpatialVariant parse_spatial_variant(const std::string& name) {
    if (name == "disemb") return SpatialVariant::disemb;
    if (name == "disdrop") return SpatialVariant::disdrop;
    throw ConfigError("unknown spatial edge variant '" + name + "' (expected disdrop or disemb)");
}

std::string to_string(SpatialVariant v) { return v == SpatialVariant::disemb ? "disemb" : "disdrop"; }

AdjacencyMode parse_adjacency_mode(const std::string& name) {
    if (name == "literal") return AdjacencyMode::literal;
    if (name == "softmax") return AdjacencyMode::softmax;
    throw ConfigError("unknown adjacency mode '" + name + "' (expected literal or softmax)");
}

std::string to_string(AdjacencyMode m) { return m == AdjacencyMode::literal ? "literal" : "softmax"; }

template <typename S>
SpatialEdgeParams<S> make_spatial_params(ParameterSet<S>& params, SpatialVariant variant, double eps, Index hidden,
                                         Rng& rng) {
    if (!(eps > 0)) throw ConfigError("DisDrop threshold must be positive");
    SpatialEdgeParams<S> p;
    p.variant = variant;
    p.eps = eps;
    if (variant == SpatialVariant::disdrop) {
        p.psi.push_back(make_dense(params, "spatial.psi1", 1, hidden, rng));
        p.psi.push_back(make_dense(params, "spatial.psi2", hidden, 1, rng));
    } else {
        p.embed_m = make_dense(params, "spatial.embed_m", 2, hidden, rng);
        p.embed_n = make_dense(params, "spatial.embed_n", 2, hidden, rng);
    }
    return p;
}

template <typename S>
Var<S> semantic_edges(Tape<S>& tape, const Var<S>& nodes, const Dense<S>& phi, const Dense<S>& varphi, Index group) {
    auto a = dense_forward(tape, phi, nodes);
    auto b = dense_forward(tape, varphi, nodes);
    const S inv = S(1) / std::sqrt(static_cast<S>(phi.out_dim()));
    return scale(group_matmul_nt(a, b, group), inv);
}

template <typename S>
Matrix<S> center_distances(const Matrix<S>& centers, Index group) {
    if (centers.cols() != 2 || group <= 0 || centers.rows() % group != 0)
        throw DimensionError("center_distances: centres " + shape_of(centers) + " not grouped by " +
                             std::to_string(group));
    Matrix<S> d(centers.rows(), group);
    for (Index g = 0; g < centers.rows() / group; ++g)
        for (Index i = 0; i < group; ++i)
            for (Index j = 0; j < group; ++j)
                d(g * group + i, j) = (centers.row(g * group + i) - centers.row(g * group + j)).norm();
    return d;
}

template <typename S>
Var<S> spatial_edges_disdrop(Tape<S>& tape, const Matrix<S>& centers, Index group, double eps,
                             const std::vector<Dense<S>>& psi) {
    if (!(eps > 0)) throw ConfigError("DisDrop threshold must be positive");
    const Matrix<S> dist = center_distances(centers, group);
    Matrix<S> keep = (dist.array() <= static_cast<S>(eps)).template cast<S>().matrix();
    auto flat = tape.constant(Eigen::Map<const Matrix<S>>(dist.data(), dist.size(), 1));
    auto value = reshape(mlp_forward(tape, flat, psi), dist.rows(), dist.cols());
    return mul(value, tape.constant(std::move(keep)));
}

template <typename S>
Var<S> spatial_edges_disemb(Tape<S>& tape, const Matrix<S>& centers, Index group, const Dense<S>& embed_m,
                            const Dense<S>& embed_n) {
    if (embed_m.out_dim() != embed_n.out_dim())
        throw DimensionError("spatial_edges_disemb: embeddings have different widths");
    auto p = tape.constant(centers);
    return group_sqdist(dense_forward(tape, embed_m, p), dense_forward(tape, embed_n, p), group);
}

template <typename S>
Var<S> spatial_edges(Tape<S>& tape, const Matrix<S>& centers, Index group, const SpatialEdgeParams<S>& params) {
    if (params.variant == SpatialVariant::disdrop)
        return spatial_edges_disdrop(tape, centers, group, params.eps, params.psi);
    return spatial_edges_disemb(tape, centers, group, params.embed_m, params.embed_n);
}

template <typename S>
Var<S> correlation_adjacency(const Var<S>& semantic, const Var<S>& spatial, AdjacencyMode mode, AdjacencyStats* stats) {
    if (semantic.tape() != spatial.tape()) throw UsageError("correlation_adjacency: operands on different tapes");
    if (semantic.rows() != spatial.rows() || semantic.cols() != spatial.cols())
        throw DimensionError("correlation_adjacency: " + shape_of(semantic.value()) + " vs " +
                             shape_of(spatial.value()));
    if (semantic.rows() % semantic.cols() != 0)
        throw DimensionError("correlation_adjacency: " + shape_of(semantic.value()) + " is not a stack of squares");
    if (mode == AdjacencyMode::softmax) return softmax_rows(add(semantic, spatial));

    const S clampv = static_cast<S>(kAdjacencyExponentClamp);
    const Matrix<S>& ma = semantic.value();
    const Matrix<S>& mp = spatial.value();
    const Index rows = ma.rows(), n = ma.cols();
    auto expo = std::make_shared<Matrix<S>>(mp.cwiseMax(-clampv).cwiseMin(clampv).array().exp().matrix());
    auto denom = std::make_shared<Eigen::Matrix<S, Eigen::Dynamic, 1>>(rows);
    Matrix<S> out(rows, n);
    for (Index r = 0; r < rows; ++r) {
        const S den = ma.row(r).dot(expo->row(r));
        if (!(std::abs(den) >= static_cast<S>(kAdjacencyDenominatorFloor))) {
            out.row(r).setConstant(S(1) / static_cast<S>(n));
            (*denom)(r) = S(0);
            if (stats != nullptr) ++stats->fallback_rows;
        } else {
            out.row(r) = ma.row(r).cwiseProduct(expo->row(r)) / den;
            (*denom)(r) = den;
        }
    }
    const auto ia = semantic.id(), ip = spatial.id();
    return semantic.tape()->record(
        std::move(out), {semantic, spatial}, [ia, ip, expo, denom, clampv](Tape<S>& tp, std::size_t self) {
            const Matrix<S>& g = tp.grad(self);
            const Matrix<S>& A = tp.value(self);
            const Matrix<S>& ma = tp.value(ia);
            const Matrix<S>& mp = tp.value(ip);
            const bool na = tp.needs_grad(ia), np = tp.needs_grad(ip);
            for (Index r = 0; r < g.rows(); ++r) {
                const S den = (*denom)(r);
                if (den == S(0)) continue;
                const S dot = g.row(r).dot(A.row(r));
                const auto dw = ((g.row(r).array() - dot) / den).eval();
                if (na) tp.grad(ia).row(r).array() += dw * expo->row(r).array();
                if (np) {
                    const auto inside = (mp.row(r).array() >= -clampv && mp.row(r).array() <= clampv);
                    tp.grad(ip).row(r).array() +=
                        inside.select(dw * ma.row(r).array() * expo->row(r).array(), S(0));
                }
            }
        });
}

#define S2C_INSTANTIATE_GRAPH(S)                                                                                   \
    template SpatialEdgeParams<S> make_spatial_params(ParameterSet<S>&, SpatialVariant, double, Index, Rng&);      \
    template Var<S> semantic_edges(Tape<S>&, const Var<S>&, const Dense<S>&, const Dense<S>&, Index);              \
    template Matrix<S> center_distances(const Matrix<S>&, Index);                                                  \
    template Var<S> spatial_edges_disdrop(Tape<S>&, const Matrix<S>&, Index, double, const std::vector<Dense<S>>&); \
    template Var<S> spatial_edges_disemb(Tape<S>&, const Matrix<S>&, Index, const Dense<S>&, const Dense<S>&);     \
    template Var<S> spatial_edges(Tape<S>&, const Matrix<S>&, Index, const SpatialEdgeParams<S>&);                 \
    template Var<S> correlation_adjacency(const Var<S>&, const Var<S>&, AdjacencyMode, AdjacencyStats*);

S2C_INSTANTIATE_GRAPH(float)
S2C_INSTANTIATE_GRAPH(double)

} // namespace s2c
