#ifndef S2C_NN_HPP
#define S2C_NN_HPP

#include "s2c/ops.hpp"

#include <string>
#include <vector>

namespace s2c {

/// Weight/bias pair of an affine map x -> x W + b, with W stored in x out.
template <typename S>
struct Dense {
    Parameter<S>* weight = nullptr;
    Parameter<S>* bias = nullptr;

    Index in_dim() const { return weight->value.rows(); }
    Index out_dim() const { return weight->value.cols(); }
};

enum class Activation { relu, identity };

Activation parse_activation(const std::string& name);

/// Registers `name`.weight / `name`.bias, both uniform in +-1/sqrt(in).
template <typename S>
Dense<S> make_dense(ParameterSet<S>& params, const std::string& name, Index in, Index out, Rng& rng);

/// Uniform in [-bound, bound].
template <typename S>
Matrix<S> uniform_matrix(Index rows, Index cols, double bound, Rng& rng);

template <typename S>
Var<S> dense_forward(Tape<S>& tape, const Dense<S>& layer, const Var<S>& x);

/// Affine-activation chain; the final layer is affine only.
template <typename S>
Var<S> mlp_forward(Tape<S>& tape, const Var<S>& x, const std::vector<Dense<S>>& layers,
                   Activation activation = Activation::relu);

/// LayerNorm gamma (ones) and beta (zeros), each 1 x dim.
template <typename S>
struct NormParams {
    Parameter<S>* gamma = nullptr;
    Parameter<S>* beta = nullptr;
};

template <typename S>
NormParams<S> make_norm(ParameterSet<S>& params, const std::string& name, Index dim);

template <typename S>
Var<S> norm_forward(Tape<S>& tape, const NormParams<S>& norm, const Var<S>& x);

} // namespace s2c

#endif
