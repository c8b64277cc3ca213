#ifndef S2C_OPS_HPP
#define S2C_OPS_HPP

#include "s2c/autodiff.hpp"

#include <span>
#include <vector>

namespace s2c {

// Differentiable matrix operations. Every op records one node on the tape of
// its first argument and throws DimensionError on incompatible shapes.

template <typename S> Var<S> matmul(const Var<S>& a, const Var<S>& b);
/// a * b^T
template <typename S> Var<S> matmul_nt(const Var<S>& a, const Var<S>& b);
template <typename S> Var<S> transpose(const Var<S>& a);

template <typename S> Var<S> add(const Var<S>& a, const Var<S>& b);
template <typename S> Var<S> sub(const Var<S>& a, const Var<S>& b);
/// Elementwise product.
template <typename S> Var<S> mul(const Var<S>& a, const Var<S>& b);
template <typename S> Var<S> scale(const Var<S>& a, S factor);
/// Adds a 1 x cols row to every row of a.
template <typename S> Var<S> add_row(const Var<S>& a, const Var<S>& row);

template <typename S> Var<S> relu(const Var<S>& a);
template <typename S> Var<S> exp(const Var<S>& a);
template <typename S> Var<S> square(const Var<S>& a);
/// Clamp with zero gradient outside [lo, hi].
template <typename S> Var<S> clamp(const Var<S>& a, S lo, S hi);

/// Sum of all entries, as a 1 x 1 node.
template <typename S> Var<S> sum(const Var<S>& a);
template <typename S> Var<S> mean(const Var<S>& a);

/// Row-wise softmax with per-row max subtraction.
template <typename S> Var<S> softmax_rows(const Var<S>& a);

/// Normalizes each row to zero mean, unit variance, then applies gamma/beta (1 x cols).
template <typename S> Var<S> layer_norm(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta, S eps = S(1e-5));

template <typename S> Var<S> slice_cols(const Var<S>& a, Index start, Index count);
template <typename S> Var<S> concat_cols(const std::vector<Var<S>>& parts);
template <typename S> Var<S> concat_rows(const std::vector<Var<S>>& parts);
/// out.row(i) = a.row(index[i]); repeated indices accumulate in backward.
template <typename S> Var<S> gather_rows(const Var<S>& a, std::vector<Index> index);
/// Reinterprets the row-major storage with a new shape.
template <typename S> Var<S> reshape(const Var<S>& a, Index rows, Index cols);

// Block-diagonal ("grouped") products. Inputs stack G groups of `group` rows;
// each group is multiplied independently.

/// out block g = a_g * b_g^T, shape (G*group) x group.
template <typename S> Var<S> group_matmul_nt(const Var<S>& a, const Var<S>& b, Index group);
/// out block g = p_g * v_g, with p of shape (G*group) x group.
template <typename S> Var<S> group_matmul(const Var<S>& p, const Var<S>& v, Index group);
/// out(i, j) = ||a_i - b_j||^2 within each group, shape (G*group) x group.
template <typename S> Var<S> group_sqdist(const Var<S>& a, const Var<S>& b, Index group);

/// Sparse linear pooling: out(r, c) = sum over taps of weight * input(tap.row, c_in)
/// with a fixed tap list per output entry block; built by roi pooling plans.
struct PoolTap {
    Index source_row;
    double weight;
};

struct PoolPlan {
    Index out_rows = 0;
    Index cells = 0;                         // output cells per row
    std::vector<std::vector<PoolTap>> taps;  // size out_rows * cells
};

/// For input of shape positions x channels, output is out_rows x (cells * channels)
/// with output column cell * channels + channel.
template <typename S> Var<S> sparse_pool(const Var<S>& input, const PoolPlan& plan);

/// 3x3 convolution with stride 2 and zero padding 1 on a (height*width) x c_in
/// spatial-major map. weight is (9*c_in) x c_out ordered (ky, kx, c_in); bias 1 x c_out.
template <typename S>
Var<S> conv3x3_s2(const Var<S>& input, Index height, Index width, const Var<S>& weight, const Var<S>& bias);

inline Index conv_s2_extent(Index n) { return (n + 1) / 2; }

} // namespace s2c

#endif
