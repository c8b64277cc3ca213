#include "s2c/nn.hpp"

#include <cmath>

namespace s2c {

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "identity" || name == "linear") return Activation::identity;
    throw ConfigError("unknown activation '" + name + "'");
}

template <typename S>
Matrix<S> uniform_matrix(Index rows, Index cols, double bound, Rng& rng) {
    Matrix<S> m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(rng.uniform(-bound, bound));
    return m;
}

template <typename S>
Dense<S> make_dense(ParameterSet<S>& params, const std::string& name, Index in, Index out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Dense<S> d;
    d.weight = &params.add(name + ".weight", uniform_matrix<S>(in, out, bound, rng));
    d.bias = &params.add(name + ".bias", uniform_matrix<S>(1, out, bound, rng));
    return d;
}

template <typename S>
Var<S> dense_forward(Tape<S>& tape, const Dense<S>& layer, const Var<S>& x) {
    return add_row(matmul(x, tape.param(*layer.weight)), tape.param(*layer.bias));
}

template <typename S>
Var<S> mlp_forward(Tape<S>& tape, const Var<S>& x, const std::vector<Dense<S>>& layers, Activation activation) {
    if (layers.empty()) throw ConfigError("mlp_forward: no layers");
    Index expect = x.cols();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].in_dim() != expect)
            throw ConfigError("mlp_forward: layer " + std::to_string(i) + " expects " +
                              std::to_string(layers[i].in_dim()) + " inputs but receives " + std::to_string(expect));
        if (layers[i].bias->value.cols() != layers[i].out_dim())
            throw ConfigError("mlp_forward: layer " + std::to_string(i) + " bias width mismatch");
        expect = layers[i].out_dim();
    }
    Var<S> h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = dense_forward(tape, layers[i], h);
        if (i + 1 < layers.size() && activation == Activation::relu) h = relu(h);
    }
    return h;
}

template <typename S>
NormParams<S> make_norm(ParameterSet<S>& params, const std::string& name, Index dim) {
    NormParams<S> n;
    n.gamma = &params.add(name + ".gamma", Matrix<S>::Ones(1, dim));
    n.beta = &params.add(name + ".beta", Matrix<S>::Zero(1, dim));
    return n;
}

template <typename S>
Var<S> norm_forward(Tape<S>& tape, const NormParams<S>& norm, const Var<S>& x) {
    return layer_norm(x, tape.param(*norm.gamma), tape.param(*norm.beta));
}

#define S2C_INSTANTIATE_NN(S)                                                                            \
    template Matrix<S> uniform_matrix<S>(Index, Index, double, Rng&);                                    \
    template Dense<S> make_dense(ParameterSet<S>&, const std::string&, Index, Index, Rng&);              \
    template Var<S> dense_forward(Tape<S>&, const Dense<S>&, const Var<S>&);                             \
    template Var<S> mlp_forward(Tape<S>&, const Var<S>&, const std::vector<Dense<S>>&, Activation);      \
    template NormParams<S> make_norm(ParameterSet<S>&, const std::string&, Index);                       \
    template Var<S> norm_forward(Tape<S>&, const NormParams<S>&, const Var<S>&);

S2C_INSTANTIATE_NN(float)
S2C_INSTANTIATE_NN(double)

} // namespace s2c
