#ifndef S2C_AUTODIFF_HPP
#define S2C_AUTODIFF_HPP

#include "s2c/common.hpp"

#include <deque>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace s2c {

/// A named learnable matrix with its accumulated gradient.
template <typename Scalar>
struct Parameter {
    std::string name;
    Matrix<Scalar> value;
    Matrix<Scalar> grad;

    Parameter() = default;
    Parameter(std::string n, Matrix<Scalar> v)
        : name(std::move(n)), value(std::move(v)), grad(Matrix<Scalar>::Zero(value.rows(), value.cols())) {}

    void zero_grad() { grad.setZero(); }
};

/// Owns parameters with stable addresses, in registration order.
template <typename Scalar>
class ParameterSet {
public:
    Parameter<Scalar>& add(std::string name, Matrix<Scalar> value);

    Parameter<Scalar>* find(const std::string& name);
    const Parameter<Scalar>* find(const std::string& name) const;
    Parameter<Scalar>& at(const std::string& name);

    std::size_t size() const { return params_.size(); }
    Parameter<Scalar>& operator[](std::size_t i) { return params_[i]; }
    const Parameter<Scalar>& operator[](std::size_t i) const { return params_[i]; }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    void zero_grad();
    Index scalar_count() const;

private:
    std::deque<Parameter<Scalar>> params_;
};

template <typename Scalar>
class Tape;

/// Handle to one node on a tape.
template <typename Scalar>
class Var {
public:
    Var() = default;
    Var(Tape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Matrix<Scalar>& value() const { return tape_->value(id_); }
    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }
    std::size_t id() const { return id_; }
    Tape<Scalar>* tape() const { return tape_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape<Scalar>* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode tape over matrix-valued nodes. Nodes are appended in
/// evaluation order; backward() walks them in reverse, and each node's
/// closure pushes its output gradient onto its inputs.
template <typename Scalar>
class Tape {
public:
    using Backward = std::function<void(Tape&, std::size_t)>;

    Tape() = default;
    explicit Tape(bool grad_enabled) : grad_enabled_(grad_enabled) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var<Scalar> constant(Matrix<Scalar> value) { return push(std::move(value), false, nullptr); }

    /// Leaf whose gradient is readable through gradient() after backward().
    Var<Scalar> variable(Matrix<Scalar> value) { return push(std::move(value), grad_enabled_, nullptr); }

    /// Leaf bound to a parameter; backward() adds into parameter.grad.
    Var<Scalar> param(Parameter<Scalar>& p) {
        auto v = push(p.value, grad_enabled_, nullptr);
        nodes_[v.id()].param = &p;
        return v;
    }

    /// Records an op result. The closure is kept only if some input needs a gradient.
    Var<Scalar> record(Matrix<Scalar> value, std::initializer_list<Var<Scalar>> inputs, Backward fn) {
        bool needs = false;
        if (grad_enabled_) {
            for (const auto& in : inputs) needs = needs || nodes_[in.id()].needs_grad;
        }
        return push(std::move(value), needs, needs ? std::move(fn) : nullptr);
    }

    Var<Scalar> record(Matrix<Scalar> value, const std::vector<Var<Scalar>>& inputs, Backward fn) {
        bool needs = false;
        if (grad_enabled_) {
            for (const auto& in : inputs) needs = needs || nodes_[in.id()].needs_grad;
        }
        return push(std::move(value), needs, needs ? std::move(fn) : nullptr);
    }

    const Matrix<Scalar>& value(std::size_t id) const { return nodes_[id].value; }
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    bool needs_grad(const Var<Scalar>& v) const { return nodes_[v.id()].needs_grad; }

    /// Mutable gradient accumulator, allocated as zeros on first touch.
    Matrix<Scalar>& grad(std::size_t id) {
        auto& n = nodes_[id];
        if (n.grad.size() != n.value.size()) n.grad = Matrix<Scalar>::Zero(n.value.rows(), n.value.cols());
        return n.grad;
    }

    /// Gradient of the last backward() root with respect to v (zeros if untouched).
    Matrix<Scalar> gradient(const Var<Scalar>& v) const {
        const auto& n = nodes_[v.id()];
        if (n.grad.size() != n.value.size()) return Matrix<Scalar>::Zero(n.value.rows(), n.value.cols());
        return n.grad;
    }

    /// Seeds d(root)/d(root) = 1 and propagates. root must be 1x1.
    void backward(const Var<Scalar>& root) {
        const auto& rv = value(root.id());
        if (rv.size() != 1) throw UsageError("backward() needs a scalar root, got " + shape_of(rv));
        for (auto& n : nodes_) n.grad.resize(0, 0);
        grad(root.id()).setOnes();
        for (std::size_t i = root.id() + 1; i-- > 0;) {
            auto& n = nodes_[i];
            if (!n.needs_grad || n.grad.size() == 0) continue;
            if (n.backward) n.backward(*this, i);
            if (n.param != nullptr) n.param->grad += n.grad;
        }
    }

    std::size_t size() const { return nodes_.size(); }
    bool grad_enabled() const { return grad_enabled_; }

private:
    struct Node {
        Matrix<Scalar> value;
        Matrix<Scalar> grad;
        Backward backward;
        Parameter<Scalar>* param = nullptr;
        bool needs_grad = false;
    };

    Var<Scalar> push(Matrix<Scalar> value, bool needs, Backward fn) {
        nodes_.push_back(Node{std::move(value), {}, std::move(fn), nullptr, needs});
        return Var<Scalar>(this, nodes_.size() - 1);
    }

    std::deque<Node> nodes_;
    bool grad_enabled_ = true;
};

template <typename Scalar>
Parameter<Scalar>& ParameterSet<Scalar>::add(std::string name, Matrix<Scalar> value) {
    if (find(name) != nullptr) throw ConfigError("duplicate parameter name '" + name + "'");
    params_.emplace_back(std::move(name), std::move(value));
    return params_.back();
}

template <typename Scalar>
Parameter<Scalar>* ParameterSet<Scalar>::find(const std::string& name) {
    for (auto& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

template <typename Scalar>
const Parameter<Scalar>* ParameterSet<Scalar>::find(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

template <typename Scalar>
Parameter<Scalar>& ParameterSet<Scalar>::at(const std::string& name) {
    auto* p = find(name);
    if (p == nullptr) throw ConfigError("unknown parameter '" + name + "'");
    return *p;
}

template <typename Scalar>
void ParameterSet<Scalar>::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

template <typename Scalar>
Index ParameterSet<Scalar>::scalar_count() const {
    Index n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

} // namespace s2c

#endif
