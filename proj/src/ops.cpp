#include "s2c/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace s2c {

std::string shape_string(Index rows, Index cols) {
    std::ostringstream os;
    os << "[" << rows << " x " << cols << "]";
    return os.str();
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

namespace {

template <typename S>
Tape<S>& tape_of(const Var<S>& a, const Var<S>& b) {
    if (a.tape() != b.tape()) throw UsageError("operands live on different tapes");
    return *a.tape();
}

template <typename S>
void require_same_shape(const char* op, const Var<S>& a, const Var<S>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_of(a.value()) + " vs " + shape_of(b.value()));
}

} // namespace

template <typename S>
Var<S> matmul(const Var<S>& a, const Var<S>& b) {
    auto& t = tape_of(a, b);
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions disagree " + shape_of(a.value()) + " x " + shape_of(b.value()));
    Matrix<S> out = a.value() * b.value();
    const auto ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape<S>& tp, std::size_t self) {
        const Matrix<S>& g = tp.grad(self);
        if (tp.needs_grad(ia)) tp.grad(ia).noalias() += g * tp.value(ib).transpose();
        if (tp.needs_grad(ib)) tp.grad(ib).noalias() += tp.value(ia).transpose() * g;
    });
}

template <typename S>
Var<S> matmul_nt(const Var<S>& a, const Var<S>& b) {
    auto& t = tape_of(a, b);
    if (a.cols() != b.cols())
        throw DimensionError("matmul_nt: inner dimensions disagree " + shape_of(a.value()) + " x " +
                             shape_of(b.value()) + "^T");
    Matrix<S> out = a.value() * b.value().transpose();
    const auto ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape<S>& tp, std::size_t self) {
        const Matrix<S>& g = tp.grad(self);
        if (tp.needs_grad(ia)) tp.grad(ia).noalias() += g * tp.value(ib);
        if (tp.needs_grad(ib)) tp.grad(ib).noalias() += g.transpose() * tp.value(ia);
    });
}

template <typename S>
Var<S> transpose(const Var<S>& a) {
    Matrix<S> out = a.value().transpose();
    const auto ia = a.id();
    return a.tape()->record(std::move(out), {a}, [ia](Tape<S>& tp, std::size_t self) {
        tp.grad(ia) += tp.grad(self).transpose();
    });
}

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
    auto& t = tape_of(a, b);
    require_same_shape("add", a, b);
    Matrix<S> out = a.value() + b.value();
    const auto ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape<S>& tp, std::size_t self) {
        const Matrix<S>& g = tp.grad(self);
        if (tp.needs_grad(ia)) tp.grad(ia) += g;
        if (tp.needs_grad(ib)) tp.grad(ib) += g;
    });
}

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
    auto& t = tape_of(a, b);
    require_same_shape("sub", a, b);
    Matrix<S> out = a.value() - b.value();
    const auto ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape<S>& tp, std::size_t self) {
        const Matrix<S>& g = tp.grad(self);
        if (tp.needs_grad(ia)) tp.grad(ia) += g;
        if (tp.needs_grad(ib)) tp.grad(ib) -= g;
    });
}

template <typename S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
    auto& t = tape_of(a, b);
    require_same_shape("mul", a, b);
    Matrix<S> out = a.value().cwiseProduct(b.value());
    const auto ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape<S>& tp, std::size_t self) {
        const Matrix<S>& g = tp.grad(self);
        if (tp.needs_grad(ia)) tp.grad(ia) += g.cwiseProduct(tp.value(ib));
        if (tp.needs_grad(ib)) tp.grad(ib) += g.cwiseProduct(tp.value(ia));
    });
}

template <typename S>
Var<S> scale(const Var<S>& a, S factor) {
    Matrix<S> out = a.value() * factor;
    const auto ia = a.id();
    return a.tape()->record(std::move(out), {a}, [ia, factor](Tape<S>& tp, std::size_t self) {
        tp.grad(ia) += tp.grad(self) * factor;
    });
}

template <typename S>
Var<S> add_row(const Var<S>& a, const Var<S>& row) {
    auto& t = tape_of(a, row);
    if (row.rows() != 1 || row.cols() != a.cols())
        throw DimensionError("add_row: row " + shape_of(row.value()) + " does not broadcast over " +
                             shape_of(a.value()));
    Matrix<S> out = a.value().rowwise() + row.value().row(0);
    const auto ia = a.id(), ir = row.id();
    return t.record(std::move(out), {a, row}, [ia, ir](Tape<S>& tp, std::size_t self) {
        const Matrix<S>& g = tp.grad(self);
        if (tp.needs_grad(ia)) tp.grad(ia) += g;
        if (tp.needs_grad(ir)) tp.grad(ir) += g.colwise().sum();
    });
}

template <typename S>
Var<S> relu(const Var<S>& a) {
    Matrix<S> out = a.value().cwiseMax(S(0));
    const auto ia = a.id();
    return a.tape()->record(std::move(out), {a}, [ia](Tape<S>& tp, std::size_t self) {
        const Matrix<S>& g = tp.grad(self);
        const Matrix<S>& x = tp.value(ia);
        tp.grad(ia) += (x.array() > S(0)).select(g, S(0)).matrix();
    });
}

template <typename S>
Var<S> exp(const Var<S>& a) {
    Matrix<S> out = a.value().array().exp().matrix();
    const auto ia = a.id();
    return a.tape()->record(std::move(out), {a}, [ia](Tape<S>& tp, std::size_t self) {
        tp.grad(ia) += tp.grad(self).cwiseProduct(tp.value(self));
    });
}

template <typename S>
Var<S> square(const Var<S>& a) {
    Matrix<S> out = a.value().array().square().matrix();
    const auto ia = a.id();
    return a.tape()->record(std::move(out), {a}, [ia](Tape<S>& tp, std::size_t self) {
        tp.grad(ia) += (S(2) * tp.grad(self).array() * tp.value(ia).array()).matrix();
    });
}

template <typename S>
Var<S> clamp(const Var<S>& a, S lo, S hi) {
    Matrix<S> out = a.value().cwiseMax(lo).cwiseMin(hi);
    const auto ia = a.id();
    return a.tape()->record(std::move(out), {a}, [ia, lo, hi](Tape<S>& tp, std::size_t self) {
        const auto x = tp.value(ia).array();
        tp.grad(ia) += ((x >= lo) && (x <= hi)).select(tp.grad(self).array(), S(0)).matrix();
    });
}

template <typename S>
Var<S> sum(const Var<S>& a) {
    Matrix<S> out(1, 1);
    out(0, 0) = a.value().sum();
    const auto ia = a.id();
    return a.tape()->record(std::move(out), {a}, [ia](Tape<S>& tp, std::size_t self) {
        tp.grad(ia).array() += tp.grad(self)(0, 0);
    });
}

template <typename S>
Var<S> mean(const Var<S>& a) {
    return scale(sum(a), S(1) / static_cast<S>(a.value().size()));
}

template <typename S>
Var<S> softmax_rows(const Var<S>& a) {
    const Matrix<S>& x = a.value();
    Matrix<S> out(x.rows(), x.cols());
    for (Index r = 0; r < x.rows(); ++r) {
        const S m = x.row(r).maxCoeff();
        out.row(r) = (x.row(r).array() - m).exp().matrix();
        out.row(r) /= out.row(r).sum();
    }
    const auto ia = a.id();
    return a.tape()->record(std::move(out), {a}, [ia](Tape<S>& tp, std::size_t self) {
        const Matrix<S>& y = tp.value(self);
        const Matrix<S>& g = tp.grad(self);
        Eigen::Matrix<S, Eigen::Dynamic, 1> dot = g.cwiseProduct(y).rowwise().sum();
        tp.grad(ia) += (y.array() * (g.colwise() - dot).array()).matrix();
    });
}

template <typename S>
Var<S> layer_norm(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta, S eps) {
    auto& t = tape_of(x, gamma);
    const Index n = x.cols();
    if (gamma.rows() != 1 || gamma.cols() != n || beta.rows() != 1 || beta.cols() != n)
        throw DimensionError("layer_norm: affine shapes " + shape_of(gamma.value()) + "/" + shape_of(beta.value()) +
                             " do not match features of " + shape_of(x.value()));
    const Matrix<S>& xv = x.value();
    auto xhat = std::make_shared<Matrix<S>>(xv.rows(), n);
    auto rstd = std::make_shared<Eigen::Matrix<S, Eigen::Dynamic, 1>>(xv.rows());
    for (Index r = 0; r < xv.rows(); ++r) {
        const S mu = xv.row(r).mean();
        const S var = (xv.row(r).array() - mu).square().mean();
        (*rstd)(r) = S(1) / std::sqrt(var + eps);
        xhat->row(r) = (xv.row(r).array() - mu) * (*rstd)(r);
    }
    Matrix<S> out = (xhat->array().rowwise() * gamma.value().row(0).array()).matrix();
    out.rowwise() += beta.value().row(0);
    const auto ix = x.id(), ig = gamma.id(), ib = beta.id();
    return t.record(std::move(out), {x, gamma, beta}, [ix, ig, ib, xhat, rstd, n](Tape<S>& tp, std::size_t self) {
        const Matrix<S>& g = tp.grad(self);
        if (tp.needs_grad(ig)) tp.grad(ig) += g.cwiseProduct(*xhat).colwise().sum();
        if (tp.needs_grad(ib)) tp.grad(ib) += g.colwise().sum();
        if (tp.needs_grad(ix)) {
            Matrix<S> dxhat = (g.array().rowwise() * tp.value(ig).row(0).array()).matrix();
            auto& gx = tp.grad(ix);
            const S inv_n = S(1) / static_cast<S>(n);
            for (Index r = 0; r < g.rows(); ++r) {
                const S s1 = dxhat.row(r).sum();
                const S s2 = dxhat.row(r).dot(xhat->row(r));
                gx.row(r).array() +=
                    (*rstd)(r)*inv_n * (static_cast<S>(n) * dxhat.row(r).array() - s1 - xhat->row(r).array() * s2);
            }
        }
    });
}

template <typename S>
Var<S> slice_cols(const Var<S>& a, Index start, Index count) {
    if (start < 0 || count < 0 || start + count > a.cols())
        throw DimensionError("slice_cols: range [" + std::to_string(start) + ", " + std::to_string(start + count) +
                             ") outside " + shape_of(a.value()));
    Matrix<S> out = a.value().middleCols(start, count);
    const auto ia = a.id();
    return a.tape()->record(std::move(out), {a}, [ia, start, count](Tape<S>& tp, std::size_t self) {
        tp.grad(ia).middleCols(start, count) += tp.grad(self);
    });
}

template <typename S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no inputs");
    const Index rows = parts.front().rows();
    Index cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows)
            throw DimensionError("concat_cols: row counts differ " + shape_of(parts.front().value()) + " vs " +
                                 shape_of(p.value()));
        cols += p.cols();
    }
    Matrix<S> out(rows, cols);
    std::vector<std::size_t> ids;
    std::vector<Index> widths;
    Index at = 0;
    for (const auto& p : parts) {
        out.middleCols(at, p.cols()) = p.value();
        at += p.cols();
        ids.push_back(p.id());
        widths.push_back(p.cols());
    }
    return parts.front().tape()->record(std::move(out), parts, [ids, widths](Tape<S>& tp, std::size_t self) {
        Index off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (tp.needs_grad(ids[k])) tp.grad(ids[k]) += tp.grad(self).middleCols(off, widths[k]);
            off += widths[k];
        }
    });
}

template <typename S>
Var<S> concat_rows(const std::vector<Var<S>>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no inputs");
    const Index cols = parts.front().cols();
    Index rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols)
            throw DimensionError("concat_rows: column counts differ " + shape_of(parts.front().value()) + " vs " +
                                 shape_of(p.value()));
        rows += p.rows();
    }
    Matrix<S> out(rows, cols);
    std::vector<std::size_t> ids;
    std::vector<Index> heights;
    Index at = 0;
    for (const auto& p : parts) {
        out.middleRows(at, p.rows()) = p.value();
        at += p.rows();
        ids.push_back(p.id());
        heights.push_back(p.rows());
    }
    return parts.front().tape()->record(std::move(out), parts, [ids, heights](Tape<S>& tp, std::size_t self) {
        Index off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (tp.needs_grad(ids[k])) tp.grad(ids[k]) += tp.grad(self).middleRows(off, heights[k]);
            off += heights[k];
        }
    });
}

template <typename S>
Var<S> gather_rows(const Var<S>& a, std::vector<Index> index) {
    const Matrix<S>& av = a.value();
    Matrix<S> out(static_cast<Index>(index.size()), av.cols());
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] < 0 || index[i] >= av.rows())
            throw DimensionError("gather_rows: index " + std::to_string(index[i]) + " outside " + shape_of(av));
        out.row(static_cast<Index>(i)) = av.row(index[i]);
    }
    const auto ia = a.id();
    auto idx = std::make_shared<const std::vector<Index>>(std::move(index));
    return a.tape()->record(std::move(out), {a}, [ia, idx](Tape<S>& tp, std::size_t self) {
        const Matrix<S>& g = tp.grad(self);
        auto& ga = tp.grad(ia);
        for (std::size_t i = 0; i < idx->size(); ++i) ga.row((*idx)[i]) += g.row(static_cast<Index>(i));
    });
}

template <typename S>
Var<S> reshape(const Var<S>& a, Index rows, Index cols) {
    if (rows * cols != a.value().size())
        throw DimensionError("reshape: cannot view " + shape_of(a.value()) + " as " + shape_string(rows, cols));
    Matrix<S> out = Eigen::Map<const Matrix<S>>(a.value().data(), rows, cols);
    const auto ia = a.id();
    const Index r0 = a.rows(), c0 = a.cols();
    return a.tape()->record(std::move(out), {a}, [ia, r0, c0](Tape<S>& tp, std::size_t self) {
        tp.grad(ia) += Eigen::Map<const Matrix<S>>(tp.grad(self).data(), r0, c0);
    });
}

namespace {

template <typename S>
Index group_count(const char* op, const Var<S>& a, Index group) {
    if (group <= 0 || a.rows() % group != 0)
        throw DimensionError(std::string(op) + ": " + shape_of(a.value()) + " does not split into groups of " +
                             std::to_string(group) + " rows");
    return a.rows() / group;
}

} // namespace

template <typename S>
Var<S> group_matmul_nt(const Var<S>& a, const Var<S>& b, Index group) {
    auto& t = tape_of(a, b);
    require_same_shape("group_matmul_nt", a, b);
    const Index groups = group_count("group_matmul_nt", a, group);
    Matrix<S> out(a.rows(), group);
    for (Index g = 0; g < groups; ++g)
        out.middleRows(g * group, group).noalias() =
            a.value().middleRows(g * group, group) * b.value().middleRows(g * group, group).transpose();
    const auto ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib, group, groups](Tape<S>& tp, std::size_t self) {
        const Matrix<S>& gr = tp.grad(self);
        const bool na = tp.needs_grad(ia), nb = tp.needs_grad(ib);
        for (Index g = 0; g < groups; ++g) {
            const auto gg = gr.middleRows(g * group, group);
            if (na) tp.grad(ia).middleRows(g * group, group).noalias() += gg * tp.value(ib).middleRows(g * group, group);
            if (nb)
                tp.grad(ib).middleRows(g * group, group).noalias() +=
                    gg.transpose() * tp.value(ia).middleRows(g * group, group);
        }
    });
}

template <typename S>
Var<S> group_matmul(const Var<S>& p, const Var<S>& v, Index group) {
    auto& t = tape_of(p, v);
    const Index groups = group_count("group_matmul", p, group);
    if (p.cols() != group || v.rows() != p.rows())
        throw DimensionError("group_matmul: " + shape_of(p.value()) + " and " + shape_of(v.value()) +
                             " are not grouped by " + std::to_string(group));
    Matrix<S> out(v.rows(), v.cols());
    for (Index g = 0; g < groups; ++g)
        out.middleRows(g * group, group).noalias() =
            p.value().middleRows(g * group, group) * v.value().middleRows(g * group, group);
    const auto ip = p.id(), iv = v.id();
    return t.record(std::move(out), {p, v}, [ip, iv, group, groups](Tape<S>& tp, std::size_t self) {
        const Matrix<S>& gr = tp.grad(self);
        const bool np = tp.needs_grad(ip), nv = tp.needs_grad(iv);
        for (Index g = 0; g < groups; ++g) {
            const auto gg = gr.middleRows(g * group, group);
            if (np)
                tp.grad(ip).middleRows(g * group, group).noalias() +=
                    gg * tp.value(iv).middleRows(g * group, group).transpose();
            if (nv)
                tp.grad(iv).middleRows(g * group, group).noalias() +=
                    tp.value(ip).middleRows(g * group, group).transpose() * gg;
        }
    });
}

template <typename S>
Var<S> group_sqdist(const Var<S>& a, const Var<S>& b, Index group) {
    auto& t = tape_of(a, b);
    require_same_shape("group_sqdist", a, b);
    const Index groups = group_count("group_sqdist", a, group);
    Matrix<S> out(a.rows(), group);
    for (Index g = 0; g < groups; ++g) {
        const auto ag = a.value().middleRows(g * group, group);
        const auto bg = b.value().middleRows(g * group, group);
        for (Index i = 0; i < group; ++i)
            for (Index j = 0; j < group; ++j) out(g * group + i, j) = (ag.row(i) - bg.row(j)).squaredNorm();
    }
    const auto ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib, group, groups](Tape<S>& tp, std::size_t self) {
        const Matrix<S>& gr = tp.grad(self);
        const bool na = tp.needs_grad(ia), nb = tp.needs_grad(ib);
        for (Index g = 0; g < groups; ++g) {
            const auto gg = gr.middleRows(g * group, group);
            const auto ag = tp.value(ia).middleRows(g * group, group);
            const auto bg = tp.value(ib).middleRows(g * group, group);
            if (na) {
                Matrix<S> d = (ag.array().colwise() * gg.rowwise().sum().array()).matrix() - gg * bg;
                tp.grad(ia).middleRows(g * group, group) += S(2) * d;
            }
            if (nb) {
                Matrix<S> d = (bg.array().colwise() * gg.colwise().sum().transpose().array()).matrix() -
                              gg.transpose() * ag;
                tp.grad(ib).middleRows(g * group, group) += S(2) * d;
            }
        }
    });
}

template <typename S>
Var<S> sparse_pool(const Var<S>& input, const PoolPlan& plan) {
    const Matrix<S>& in = input.value();
    const Index channels = in.cols();
    if (static_cast<Index>(plan.taps.size()) != plan.out_rows * plan.cells)
        throw DimensionError("sparse_pool: malformed plan");
    Matrix<S> out = Matrix<S>::Zero(plan.out_rows, plan.cells * channels);
    for (Index r = 0; r < plan.out_rows; ++r)
        for (Index c = 0; c < plan.cells; ++c)
            for (const auto& tap : plan.taps[static_cast<std::size_t>(r * plan.cells + c)]) {
                if (tap.source_row < 0 || tap.source_row >= in.rows())
                    throw DimensionError("sparse_pool: tap row outside " + shape_of(in));
                out.row(r).segment(c * channels, channels) += static_cast<S>(tap.weight) * in.row(tap.source_row);
            }
    const auto ii = input.id();
    auto shared = std::make_shared<const PoolPlan>(plan);
    return input.tape()->record(std::move(out), {input}, [ii, shared, channels](Tape<S>& tp, std::size_t self) {
        const Matrix<S>& g = tp.grad(self);
        auto& gi = tp.grad(ii);
        const auto& pl = *shared;
        for (Index r = 0; r < pl.out_rows; ++r)
            for (Index c = 0; c < pl.cells; ++c)
                for (const auto& tap : pl.taps[static_cast<std::size_t>(r * pl.cells + c)])
                    gi.row(tap.source_row) += static_cast<S>(tap.weight) * g.row(r).segment(c * channels, channels);
    });
}

template <typename S>
Var<S> conv3x3_s2(const Var<S>& input, Index height, Index width, const Var<S>& weight, const Var<S>& bias) {
    auto& t = tape_of(input, weight);
    const Index cin = input.cols();
    if (input.rows() != height * width)
        throw DimensionError("conv3x3_s2: input " + shape_of(input.value()) + " is not " + std::to_string(height) +
                             "x" + std::to_string(width) + " positions");
    if (weight.rows() != 9 * cin || bias.rows() != 1 || bias.cols() != weight.cols())
        throw DimensionError("conv3x3_s2: weight " + shape_of(weight.value()) + " / bias " + shape_of(bias.value()) +
                             " incompatible with " + std::to_string(cin) + " input channels");
    const Index oh = conv_s2_extent(height), ow = conv_s2_extent(width);
    auto cols = std::make_shared<Matrix<S>>(Matrix<S>::Zero(oh * ow, 9 * cin));
    const Matrix<S>& in = input.value();
    for (Index oy = 0; oy < oh; ++oy)
        for (Index ox = 0; ox < ow; ++ox)
            for (Index ky = 0; ky < 3; ++ky) {
                const Index iy = 2 * oy + ky - 1;
                if (iy < 0 || iy >= height) continue;
                for (Index kx = 0; kx < 3; ++kx) {
                    const Index ix = 2 * ox + kx - 1;
                    if (ix < 0 || ix >= width) continue;
                    cols->row(oy * ow + ox).segment((ky * 3 + kx) * cin, cin) = in.row(iy * width + ix);
                }
            }
    Matrix<S> out = *cols * weight.value();
    out.rowwise() += bias.value().row(0);
    const auto ii = input.id(), iw = weight.id(), ib = bias.id();
    return t.record(std::move(out), {input, weight, bias},
                    [ii, iw, ib, cols, cin, height, width, oh, ow](Tape<S>& tp, std::size_t self) {
                        const Matrix<S>& g = tp.grad(self);
                        if (tp.needs_grad(iw)) tp.grad(iw).noalias() += cols->transpose() * g;
                        if (tp.needs_grad(ib)) tp.grad(ib) += g.colwise().sum();
                        if (!tp.needs_grad(ii)) return;
                        Matrix<S> dcols = g * tp.value(iw).transpose();
                        auto& gi = tp.grad(ii);
                        for (Index oy = 0; oy < oh; ++oy)
                            for (Index ox = 0; ox < ow; ++ox)
                                for (Index ky = 0; ky < 3; ++ky) {
                                    const Index iy = 2 * oy + ky - 1;
                                    if (iy < 0 || iy >= height) continue;
                                    for (Index kx = 0; kx < 3; ++kx) {
                                        const Index ix = 2 * ox + kx - 1;
                                        if (ix < 0 || ix >= width) continue;
                                        gi.row(iy * width + ix) +=
                                            dcols.row(oy * ow + ox).segment((ky * 3 + kx) * cin, cin);
                                    }
                                }
                    });
}

#define S2C_INSTANTIATE_OPS(S)                                                                     \
    template Var<S> matmul(const Var<S>&, const Var<S>&);                                          \
    template Var<S> matmul_nt(const Var<S>&, const Var<S>&);                                       \
    template Var<S> transpose(const Var<S>&);                                                      \
    template Var<S> add(const Var<S>&, const Var<S>&);                                             \
    template Var<S> sub(const Var<S>&, const Var<S>&);                                             \
    template Var<S> mul(const Var<S>&, const Var<S>&);                                             \
    template Var<S> scale(const Var<S>&, S);                                                       \
    template Var<S> add_row(const Var<S>&, const Var<S>&);                                         \
    template Var<S> relu(const Var<S>&);                                                           \
    template Var<S> exp(const Var<S>&);                                                            \
    template Var<S> square(const Var<S>&);                                                         \
    template Var<S> clamp(const Var<S>&, S, S);                                                    \
    template Var<S> sum(const Var<S>&);                                                            \
    template Var<S> mean(const Var<S>&);                                                           \
    template Var<S> softmax_rows(const Var<S>&);                                                   \
    template Var<S> layer_norm(const Var<S>&, const Var<S>&, const Var<S>&, S);                    \
    template Var<S> slice_cols(const Var<S>&, Index, Index);                                       \
    template Var<S> concat_cols(const std::vector<Var<S>>&);                                       \
    template Var<S> concat_rows(const std::vector<Var<S>>&);                                       \
    template Var<S> gather_rows(const Var<S>&, std::vector<Index>);                                \
    template Var<S> reshape(const Var<S>&, Index, Index);                                          \
    template Var<S> group_matmul_nt(const Var<S>&, const Var<S>&, Index);                          \
    template Var<S> group_matmul(const Var<S>&, const Var<S>&, Index);                             \
    template Var<S> group_sqdist(const Var<S>&, const Var<S>&, Index);                             \
    template Var<S> sparse_pool(const Var<S>&, const PoolPlan&);                                   \
    template Var<S> conv3x3_s2(const Var<S>&, Index, Index, const Var<S>&, const Var<S>&);

S2C_INSTANTIATE_OPS(float)
S2C_INSTANTIATE_OPS(double)

} // namespace s2c
