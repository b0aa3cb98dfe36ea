#include "gvs/flow_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gvs/error.hpp"
#include "gvs/random.hpp"

namespace gvs {

namespace detail {

struct LinearSlot {
    std::size_t weight = 0, bias = 0, out = 0, in = 0;
};

struct GeneratorSlot {
    LinearSlot hidden, output;
};

struct HyperSlot {
    std::size_t weight = 0, alpha = 0, in = 0, out = 0, rank = 0;
    GeneratorSlot u, v, b, s;
};

struct BlockSlot {
    std::size_t norm_gamma = 0, norm_beta = 0;
    HyperSlot first, second;
};

struct Layout {
    LinearSlot in_proj, time0, time1, cond_proj, fuse, out_proj;
    std::size_t bn_gamma = 0, bn_beta = 0;
    std::size_t bn_mean = 0, bn_var = 0;  // buffer offsets
    std::vector<BlockSlot> blocks;
    std::size_t param_count = 0, buffer_count = 0;
};

}  // namespace detail

namespace {

using detail::BlockSlot;
using detail::GeneratorSlot;
using detail::HyperSlot;
using detail::Layout;
using detail::LinearSlot;

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;
using ConstVecMap = Eigen::Map<const Vector>;
using MutVecMap = Eigen::Map<Vector>;

class LayoutBuilder {
public:
    explicit LayoutBuilder(std::vector<TensorEntry>& table) : table_(table) {}

    std::size_t add(const std::string& name, std::vector<std::size_t> shape, bool buffer = false) {
        std::size_t size = 1;
        for (auto s : shape) size *= s;
        std::size_t& cursor = buffer ? buffers_ : params_;
        table_.push_back({name, std::move(shape), cursor, size, buffer});
        const std::size_t off = cursor;
        cursor += size;
        return off;
    }

    LinearSlot linear(const std::string& name, std::size_t out, std::size_t in) {
        LinearSlot s;
        s.out = out;
        s.in = in;
        s.weight = add(name + ".weight", {out, in});
        s.bias = add(name + ".bias", {out});
        return s;
    }

    GeneratorSlot generator(const std::string& name, std::size_t embed, std::size_t hidden, std::size_t out) {
        return {linear(name + ".0", hidden, embed), linear(name + ".1", out, hidden)};
    }

    HyperSlot hyper(const std::string& name, std::size_t in, std::size_t out, std::size_t rank,
                    std::size_t embed, std::size_t gen_hidden) {
        HyperSlot h;
        h.in = in;
        h.out = out;
        h.rank = rank;
        h.weight = add(name + ".weight", {out, in});
        h.alpha = add(name + ".alpha", {1});
        h.u = generator(name + ".gen_u", embed, gen_hidden, in * rank);
        h.v = generator(name + ".gen_v", embed, gen_hidden, out * rank);
        h.b = generator(name + ".gen_b", embed, gen_hidden, out);
        h.s = generator(name + ".gen_s", embed, gen_hidden, out);
        return h;
    }

    std::size_t params() const { return params_; }
    std::size_t buffers() const { return buffers_; }

private:
    std::vector<TensorEntry>& table_;
    std::size_t params_ = 0;
    std::size_t buffers_ = 0;
};

Layout build_layout(const Architecture& a, std::vector<TensorEntry>& table) {
    table.clear();
    LayoutBuilder b(table);
    Layout l;
    const std::size_t h = a.hidden_dim;
    const std::size_t e = a.hidden_dim;  // fused conditional embedding width
    l.in_proj = b.linear("in_proj", h, a.input_dim);
    l.time0 = b.linear("time_mlp.0", a.time_dim, a.time_dim);
    l.time1 = b.linear("time_mlp.1", a.time_dim, a.time_dim);
    std::size_t fuse_in = a.time_dim;
    if (a.conditional()) {
        l.bn_gamma = b.add("cond_bn.weight", {a.cond_dim});
        l.bn_beta = b.add("cond_bn.bias", {a.cond_dim});
        l.bn_mean = b.add("cond_bn.running_mean", {a.cond_dim}, true);
        l.bn_var = b.add("cond_bn.running_var", {a.cond_dim}, true);
        l.cond_proj = b.linear("cond_proj", h, a.cond_dim);
        fuse_in += h;
    }
    l.fuse = b.linear("fuse", e, fuse_in);
    for (std::size_t i = 0; i < a.layers; ++i) {
        const std::string p = "blocks." + std::to_string(i);
        BlockSlot blk;
        blk.norm_gamma = b.add(p + ".norm.weight", {h});
        blk.norm_beta = b.add(p + ".norm.bias", {h});
        blk.first = b.hyper(p + ".hyper1", h, h, a.rank, e, a.generator_dim());
        blk.second = b.hyper(p + ".hyper2", h, h, a.rank, e, a.generator_dim());
        l.blocks.push_back(blk);
    }
    l.out_proj = b.linear("out_proj", a.input_dim, h);
    l.param_count = b.params();
    l.buffer_count = b.buffers();
    return l;
}

// ---- elementwise helpers -------------------------------------------------

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

Matrix apply_gelu(const Matrix& x) { return x.unaryExpr(&gelu); }

Matrix gelu_backward(const Matrix& pre, const Matrix& dy) {
    return dy.cwiseProduct(pre.unaryExpr(&gelu_grad));
}

// ---- parameter access ----------------------------------------------------

ConstMap cmat(const Vector& p, std::size_t off, std::size_t rows, std::size_t cols) {
    return ConstMap(p.data() + off, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MutMap gmat(Vector& g, std::size_t off, std::size_t rows, std::size_t cols) {
    return MutMap(g.data() + off, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

ConstVecMap cvec(const Vector& p, std::size_t off, std::size_t n) {
    return ConstVecMap(p.data() + off, static_cast<Eigen::Index>(n));
}

MutVecMap gvec(Vector& g, std::size_t off, std::size_t n) {
    return MutVecMap(g.data() + off, static_cast<Eigen::Index>(n));
}

// ---- layers ---------------------------------------------------------------

Matrix linear_forward(const Vector& p, const LinearSlot& s, const Matrix& x) {
    Matrix y = x * cmat(p, s.weight, s.out, s.in).transpose();
    y.rowwise() += cvec(p, s.bias, s.out).transpose();
    return y;
}

// Accumulates weight/bias gradients; returns dL/dx when wanted.
Matrix linear_backward(const Vector& p, Vector& g, const LinearSlot& s, const Matrix& x, const Matrix& dy,
                       bool want_input_grad = true) {
    gmat(g, s.weight, s.out, s.in).noalias() += dy.transpose() * x;
    gvec(g, s.bias, s.out) += dy.colwise().sum().transpose();
    if (!want_input_grad) return {};
    return dy * cmat(p, s.weight, s.out, s.in);
}

struct GeneratorTape {
    Matrix pre, hidden, out;
};

void generator_forward(const Vector& p, const GeneratorSlot& s, const Matrix& e, GeneratorTape& tape) {
    tape.pre = linear_forward(p, s.hidden, e);
    tape.hidden = apply_gelu(tape.pre);
    tape.out = linear_forward(p, s.output, tape.hidden);
}

void generator_backward(const Vector& p, Vector& g, const GeneratorSlot& s, const Matrix& e,
                        const GeneratorTape& tape, const Matrix& dout, Matrix& de) {
    const Matrix dhidden = linear_backward(p, g, s.output, tape.hidden, dout);
    const Matrix dpre = gelu_backward(tape.pre, dhidden);
    de.noalias() += linear_backward(p, g, s.hidden, e, dpre);
}

struct HyperTape {
    Matrix x, z, a, lowrank;
    GeneratorTape u, v, b, s;
};

Matrix hyper_forward(const Vector& p, const HyperSlot& s, const Matrix& x, const Matrix& e, HyperTape& tape) {
    const Eigen::Index batch = x.rows();
    const auto in = static_cast<Eigen::Index>(s.in);
    const auto out = static_cast<Eigen::Index>(s.out);
    const auto rank = static_cast<Eigen::Index>(s.rank);
    tape.x = x;
    tape.z = x * cmat(p, s.weight, s.out, s.in).transpose();
    generator_forward(p, s.u, e, tape.u);
    generator_forward(p, s.v, e, tape.v);
    generator_forward(p, s.b, e, tape.b);
    generator_forward(p, s.s, e, tape.s);
    tape.a.resize(batch, rank);
    tape.lowrank.resize(batch, out);
    for (Eigen::Index n = 0; n < batch; ++n) {
        const ConstMap un(tape.u.out.row(n).data(), in, rank);
        const ConstMap vn(tape.v.out.row(n).data(), out, rank);
        tape.a.row(n).noalias() = x.row(n) * un;
        tape.lowrank.row(n).noalias() = tape.a.row(n) * vn.transpose();
    }
    const double alpha = p(static_cast<Eigen::Index>(s.alpha));
    return tape.s.out.cwiseProduct(tape.z) + alpha * tape.lowrank + tape.b.out;
}

Matrix hyper_backward(const Vector& p, Vector& g, const HyperSlot& s, const Matrix& e, const HyperTape& tape,
                      const Matrix& dy, Matrix& de) {
    const Eigen::Index batch = dy.rows();
    const auto in = static_cast<Eigen::Index>(s.in);
    const auto out = static_cast<Eigen::Index>(s.out);
    const auto rank = static_cast<Eigen::Index>(s.rank);
    const double alpha = p(static_cast<Eigen::Index>(s.alpha));

    const Matrix dz = dy.cwiseProduct(tape.s.out);
    gmat(g, s.weight, s.out, s.in).noalias() += dz.transpose() * tape.x;
    Matrix dx = dz * cmat(p, s.weight, s.out, s.in);

    g(static_cast<Eigen::Index>(s.alpha)) += dy.cwiseProduct(tape.lowrank).sum();

    Matrix du(batch, in * rank);
    Matrix dv(batch, out * rank);
    for (Eigen::Index n = 0; n < batch; ++n) {
        const ConstMap un(tape.u.out.row(n).data(), in, rank);
        const ConstMap vn(tape.v.out.row(n).data(), out, rank);
        const RowVector dlow = alpha * dy.row(n);
        MutMap(dv.row(n).data(), out, rank).noalias() = dlow.transpose() * tape.a.row(n);
        const RowVector da = dlow * vn;
        MutMap(du.row(n).data(), in, rank).noalias() = tape.x.row(n).transpose() * da;
        dx.row(n).noalias() += da * un.transpose();
    }
    generator_backward(p, g, s.u, e, tape.u, du, de);
    generator_backward(p, g, s.v, e, tape.v, dv, de);
    generator_backward(p, g, s.b, e, tape.b, dy, de);
    generator_backward(p, g, s.s, e, tape.s, dy.cwiseProduct(tape.z), de);
    return dx;
}

struct NormTape {
    Matrix xhat;
    Vector inv_sigma;
};

Matrix layer_norm_forward(const Vector& p, std::size_t gamma, std::size_t beta, const Matrix& x, NormTape& tape) {
    const auto d = static_cast<std::size_t>(x.cols());
    const RowVector mean = x.rowwise().mean().transpose();
    tape.xhat = x.colwise() - mean.transpose();
    tape.inv_sigma.resize(x.rows());
    for (Eigen::Index n = 0; n < x.rows(); ++n) {
        const double var = tape.xhat.row(n).squaredNorm() / static_cast<double>(d);
        tape.inv_sigma(n) = 1.0 / std::sqrt(var + kNormEps);
        tape.xhat.row(n) *= tape.inv_sigma(n);
    }
    Matrix y = tape.xhat.array().rowwise() * cvec(p, gamma, d).transpose().array();
    y.rowwise() += cvec(p, beta, d).transpose();
    return y;
}

Matrix layer_norm_backward(const Vector& p, Vector& g, std::size_t gamma, std::size_t beta, const NormTape& tape,
                           const Matrix& dy) {
    const auto d = static_cast<std::size_t>(dy.cols());
    gvec(g, gamma, d) += dy.cwiseProduct(tape.xhat).colwise().sum().transpose();
    gvec(g, beta, d) += dy.colwise().sum().transpose();
    const Matrix dxhat = dy.array().rowwise() * cvec(p, gamma, d).transpose().array();
    Matrix dx(dy.rows(), dy.cols());
    const double inv_d = 1.0 / static_cast<double>(d);
    for (Eigen::Index n = 0; n < dy.rows(); ++n) {
        const double m1 = dxhat.row(n).sum() * inv_d;
        const double m2 = dxhat.row(n).dot(tape.xhat.row(n)) * inv_d;
        dx.row(n) = tape.inv_sigma(n) * (dxhat.row(n).array() - m1 - tape.xhat.row(n).array() * m2).matrix();
    }
    return dx;
}

struct BlockTape {
    NormTape norm;
    Matrix normed;
    HyperTape first;
    Matrix mid_pre;
    Matrix mid;
    HyperTape second;
};

struct Tape {
    Matrix x;
    Matrix enc, time_pre, time_hidden, te;
    Matrix cond_hat, cond_bn, cp;
    Matrix fuse_in, e;
    std::vector<BlockTape> blocks;
    Matrix h_final;
    Vector bn_mean, bn_var;
};

Matrix time_encoding(const Vector& t, std::size_t dim) {
    const std::size_t half = dim / 2;
    Matrix enc(t.size(), static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < half; ++k) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
        for (Eigen::Index n = 0; n < t.size(); ++n) {
            const double arg = kTimeScale * t(n) * freq;
            enc(n, static_cast<Eigen::Index>(k)) = std::sin(arg);
            enc(n, static_cast<Eigen::Index>(half + k)) = std::cos(arg);
        }
    }
    return enc;
}

}  // namespace

Objective parse_objective(const std::string& name) {
    if (name == "cfm") return Objective::kCfm;
    if (name == "regression") return Objective::kRegression;
    throw ParameterError("unknown objective '" + name + "' (expected cfm or regression)");
}

std::string objective_name(Objective o) { return o == Objective::kCfm ? "cfm" : "regression"; }

// ---- Architecture ---------------------------------------------------------

void Architecture::validate() const {
    if (input_dim < 1 || hidden_dim < 1 || time_dim < 1 || layers < 1) {
        throw ParameterError("architecture dimensions must be >= 1");
    }
    if (time_dim % 2 != 0) throw ParameterError("time_dim must be even");
    if (rank < 1 || rank >= hidden_dim) {
        throw ParameterError("rank " + std::to_string(rank) + " must satisfy 1 <= rank < hidden_dim (" +
                             std::to_string(hidden_dim) + ")");
    }
}

// ---- FlowModel ------------------------------------------------------------

namespace {

Layout layout_for(const Architecture& a) {
    std::vector<TensorEntry> scratch;
    return build_layout(a, scratch);
}

}  // namespace

FlowModel::FlowModel(const Architecture& arch) : arch_(arch) {
    arch_.validate();
    const Layout l = build_layout(arch_, tensors_);
    params_ = Vector::Zero(static_cast<Eigen::Index>(l.param_count));
    buffers_ = Vector::Zero(static_cast<Eigen::Index>(l.buffer_count));
    stats_ = StandardizeStats::identity(arch_.input_dim);
}

FlowModel FlowModel::zeros(const Architecture& arch) { return FlowModel(arch); }

const TensorEntry& FlowModel::tensor(const std::string& name) const {
    for (const auto& t : tensors_) {
        if (t.name == name) return t;
    }
    throw ParameterError("no tensor named '" + name + "'");
}

FlowModel FlowModel::init(const Architecture& arch, std::uint64_t seed) {
    FlowModel m(arch);
    Rng rng(seed);
    auto fill_uniform = [&](std::size_t off, std::size_t n, double bound) {
        for (std::size_t i = 0; i < n; ++i) {
            m.params_(static_cast<Eigen::Index>(off + i)) = bound * (2.0 * rng.uniform() - 1.0);
        }
    };
    auto fill_const = [&](std::size_t off, std::size_t n, double v) {
        m.params_.segment(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(n)).setConstant(v);
    };
    auto init_linear = [&](const LinearSlot& s) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
        fill_uniform(s.weight, s.out * s.in, bound);
        fill_uniform(s.bias, s.out, bound);
    };
    // Output layer starts at zero weight; the bias sets the constant output.
    auto init_generator = [&](const GeneratorSlot& s, double bias_value, double bias_bound) {
        init_linear(s.hidden);
        fill_const(s.output.weight, s.output.out * s.output.in, 0.0);
        if (bias_bound > 0) {
            fill_uniform(s.output.bias, s.output.out, bias_bound);
        } else {
            fill_const(s.output.bias, s.output.out, bias_value);
        }
    };
    auto init_hyper = [&](const HyperSlot& s) {
        fill_uniform(s.weight, s.out * s.in, 1.0 / std::sqrt(static_cast<double>(s.in)));
        m.params_(static_cast<Eigen::Index>(s.alpha)) = kAlphaInit;
        // U(e) is a random constant and V(e) = 0, so V U^T = 0 while the
        // gradient with respect to V is non-zero.
        init_generator(s.u, 0.0, 1.0 / std::sqrt(static_cast<double>(s.in)));
        init_generator(s.v, 0.0, 0.0);
        init_generator(s.b, 0.0, 0.0);
        init_generator(s.s, 1.0, 0.0);
    };

    const Layout l = layout_for(arch);
    init_linear(l.in_proj);
    init_linear(l.time0);
    init_linear(l.time1);
    if (arch.conditional()) {
        fill_const(l.bn_gamma, arch.cond_dim, 1.0);
        fill_const(l.bn_beta, arch.cond_dim, 0.0);
        m.buffers_.segment(static_cast<Eigen::Index>(l.bn_mean), static_cast<Eigen::Index>(arch.cond_dim))
            .setZero();
        m.buffers_.segment(static_cast<Eigen::Index>(l.bn_var), static_cast<Eigen::Index>(arch.cond_dim))
            .setOnes();
        init_linear(l.cond_proj);
    }
    init_linear(l.fuse);
    for (const auto& blk : l.blocks) {
        fill_const(blk.norm_gamma, arch.hidden_dim, 1.0);
        fill_const(blk.norm_beta, arch.hidden_dim, 0.0);
        init_hyper(blk.first);
        init_hyper(blk.second);
    }
    init_linear(l.out_proj);
    return m;
}

namespace {

void check_inputs(const Architecture& a, const Matrix& x, const Vector& t, const Matrix* cond) {
    if (static_cast<std::size_t>(x.cols()) != a.input_dim) {
        throw DimensionError("model input has dimension " + std::to_string(a.input_dim) + ", got " +
                             std::to_string(x.cols()));
    }
    if (t.size() != x.rows()) throw DimensionError("time batch length does not match state batch");
    if (cond != nullptr) {
        if (!a.conditional() && cond->cols() != 0) throw DimensionError("unconditional model given a condition");
        if (a.conditional()) {
            if (static_cast<std::size_t>(cond->cols()) != a.cond_dim) {
                throw DimensionError("condition has dimension " + std::to_string(cond->cols()) + ", model expects " +
                                     std::to_string(a.cond_dim));
            }
            if (cond->rows() != x.rows()) throw DimensionError("condition batch does not match state batch");
            if (!cond->allFinite()) throw DimensionError("non-finite condition input");
        }
    }
    if (!x.allFinite()) throw DimensionError("non-finite state input");
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        if (!(t(i) >= 0.0 && t(i) <= 1.0)) throw ParameterError("time values must lie in [0, 1]");
    }
}

Matrix run_forward(const Architecture& a, const Layout& l, const Vector& p, const Vector& buf, const Matrix& x,
                   const Vector& t, const Matrix* cond, BatchNormMode mode, Tape& tape) {
    tape.x = x;
    Matrix h = linear_forward(p, l.in_proj, x);

    tape.enc = time_encoding(t, a.time_dim);
    tape.time_pre = linear_forward(p, l.time0, tape.enc);
    tape.time_hidden = apply_gelu(tape.time_pre);
    tape.te = linear_forward(p, l.time1, tape.time_hidden);

    if (a.conditional()) {
        const auto cd = static_cast<Eigen::Index>(a.cond_dim);
        const Matrix c = cond != nullptr ? *cond : Matrix::Zero(x.rows(), cd);
        if (mode == BatchNormMode::kTrain) {
            tape.bn_mean = c.colwise().mean().transpose();
            const Matrix centered = c.rowwise() - tape.bn_mean.transpose();
            tape.bn_var = centered.array().square().colwise().mean().transpose();
        } else {
            tape.bn_mean = cvec(buf, l.bn_mean, a.cond_dim);
            tape.bn_var = cvec(buf, l.bn_var, a.cond_dim);
        }
        const Vector inv = (tape.bn_var.array() + kNormEps).rsqrt();
        tape.cond_hat = (c.rowwise() - tape.bn_mean.transpose()).array().rowwise() * inv.transpose().array();
        tape.cond_bn = tape.cond_hat.array().rowwise() * cvec(p, l.bn_gamma, a.cond_dim).transpose().array();
        tape.cond_bn.rowwise() += cvec(p, l.bn_beta, a.cond_dim).transpose();
        tape.cp = linear_forward(p, l.cond_proj, tape.cond_bn);
        tape.fuse_in.resize(x.rows(), tape.te.cols() + tape.cp.cols());
        tape.fuse_in << tape.te, tape.cp;
    } else {
        tape.fuse_in = tape.te;
    }
    tape.e = linear_forward(p, l.fuse, tape.fuse_in);

    tape.blocks.resize(l.blocks.size());
    for (std::size_t i = 0; i < l.blocks.size(); ++i) {
        const BlockSlot& blk = l.blocks[i];
        BlockTape& bt = tape.blocks[i];
        bt.normed = layer_norm_forward(p, blk.norm_gamma, blk.norm_beta, h, bt.norm);
        bt.mid_pre = hyper_forward(p, blk.first, bt.normed, tape.e, bt.first);
        bt.mid = apply_gelu(bt.mid_pre);
        h += hyper_forward(p, blk.second, bt.mid, tape.e, bt.second);
    }
    tape.h_final = h;
    return linear_forward(p, l.out_proj, h);
}

Vector run_backward(const Architecture& a, const Layout& l, const Vector& p, const Tape& tape, const Matrix& dy) {
    Vector g = Vector::Zero(p.size());
    Matrix dh = linear_backward(p, g, l.out_proj, tape.h_final, dy);
    Matrix de = Matrix::Zero(tape.e.rows(), tape.e.cols());
    for (std::size_t i = l.blocks.size(); i-- > 0;) {
        const BlockSlot& blk = l.blocks[i];
        const BlockTape& bt = tape.blocks[i];
        const Matrix dmid = hyper_backward(p, g, blk.second, tape.e, bt.second, dh, de);
        const Matrix dmid_pre = gelu_backward(bt.mid_pre, dmid);
        const Matrix dnormed = hyper_backward(p, g, blk.first, tape.e, bt.first, dmid_pre, de);
        dh += layer_norm_backward(p, g, blk.norm_gamma, blk.norm_beta, bt.norm, dnormed);
    }
    linear_backward(p, g, l.in_proj, tape.x, dh, false);

    const Matrix dfuse_in = linear_backward(p, g, l.fuse, tape.fuse_in, de);
    const auto td = static_cast<Eigen::Index>(a.time_dim);
    const Matrix dte = dfuse_in.leftCols(td);
    const Matrix dhidden = linear_backward(p, g, l.time1, tape.time_hidden, dte);
    linear_backward(p, g, l.time0, tape.enc, gelu_backward(tape.time_pre, dhidden), false);

    if (a.conditional()) {
        const Matrix dcp = dfuse_in.rightCols(dfuse_in.cols() - td);
        const Matrix dcbn = linear_backward(p, g, l.cond_proj, tape.cond_bn, dcp);
        gvec(g, l.bn_gamma, a.cond_dim) += dcbn.cwiseProduct(tape.cond_hat).colwise().sum().transpose();
        gvec(g, l.bn_beta, a.cond_dim) += dcbn.colwise().sum().transpose();
    }
    return g;
}

constexpr Eigen::Index kEvalChunk = 256;

}  // namespace

Matrix FlowModel::forward(const Matrix& x, const Vector& t, const Matrix* cond, BatchNormMode mode) const {
    check_inputs(arch_, x, t, cond);
    const Layout l = layout_for(arch_);
    Tape tape;
    if (mode == BatchNormMode::kTrain || x.rows() <= kEvalChunk) {
        return run_forward(arch_, l, params_, buffers_, x, t, cond, mode, tape);
    }
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index start = 0; start < x.rows(); start += kEvalChunk) {
        const Eigen::Index n = std::min(kEvalChunk, x.rows() - start);
        const Matrix xc = x.middleRows(start, n);
        const Vector tc = t.segment(start, n);
        Matrix cc;
        const Matrix* cptr = nullptr;
        if (cond != nullptr) {
            cc = cond->middleRows(start, n);
            cptr = &cc;
        }
        out.middleRows(start, n) = run_forward(arch_, l, params_, buffers_, xc, tc, cptr, mode, tape);
    }
    return out;
}

Matrix FlowModel::velocity(const Matrix& x, const Vector& t, const Matrix* cond) const {
    return forward(x, t, cond, BatchNormMode::kEval);
}

LossGrad FlowModel::loss_grad(const Matrix& x, const Vector& t, const Matrix* cond, const Matrix& target,
                              BatchNormMode mode) const {
    check_inputs(arch_, x, t, cond);
    if (target.rows() != x.rows() || target.cols() != x.cols()) throw DimensionError("target shape mismatch");
    if (x.rows() == 0) throw DimensionError("empty batch");
    const Layout l = layout_for(arch_);
    Tape tape;
    const Matrix y = run_forward(arch_, l, params_, buffers_, x, t, cond, mode, tape);
    const Matrix diff = y - target;
    const double batch = static_cast<double>(x.rows());
    LossGrad out;
    out.loss = diff.squaredNorm() / batch;
    out.grad = run_backward(arch_, l, params_, tape, (2.0 / batch) * diff);
    if (mode == BatchNormMode::kTrain && arch_.conditional()) {
        out.cond_batch_mean = tape.bn_mean;
        out.cond_batch_var = tape.bn_var;
    }
    return out;
}

void FlowModel::update_running_stats(const Vector& batch_mean, const Vector& batch_var, std::size_t batch_rows) {
    if (!arch_.conditional() || batch_mean.size() == 0) return;
    const Layout l = layout_for(arch_);
    const auto cd = static_cast<Eigen::Index>(arch_.cond_dim);
    auto mean = buffers_.segment(static_cast<Eigen::Index>(l.bn_mean), cd);
    auto var = buffers_.segment(static_cast<Eigen::Index>(l.bn_var), cd);
    const double n = static_cast<double>(batch_rows);
    const double unbias = batch_rows > 1 ? n / (n - 1.0) : 1.0;
    mean = (1.0 - kBatchNormMomentum) * mean + kBatchNormMomentum * batch_mean;
    var = (1.0 - kBatchNormMomentum) * var + kBatchNormMomentum * unbias * batch_var;
}

void FlowModel::round_to_float() {
    auto round = [](double v) { return static_cast<double>(static_cast<float>(v)); };
    params_ = params_.unaryExpr(round);
    buffers_ = buffers_.unaryExpr(round);
}

// ---- objectives -------------------------------------------------------------

LossGrad cfm_loss_grad_fixed(const FlowModel& model, const Matrix& x1, const Matrix* cond, const Matrix& x0,
                             const Vector& t, const std::vector<bool>& keep) {
    if (x0.rows() != x1.rows() || x0.cols() != x1.cols()) throw DimensionError("noise and data shapes differ");
    if (t.size() != x1.rows()) throw DimensionError("time batch length mismatch");
    const Matrix xt = (x0.array().colwise() * t.array() + x1.array().colwise() * (1.0 - t.array())).matrix();
    const Matrix target = x1 - x0;
    if (cond == nullptr || !model.arch().conditional()) return model.loss_grad(xt, t, nullptr, target);
    if (keep.size() != static_cast<std::size_t>(cond->rows())) throw DimensionError("dropout mask length mismatch");
    Matrix c = *cond;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (!keep[i]) c.row(static_cast<Eigen::Index>(i)).setZero();
    }
    return model.loss_grad(xt, t, &c, target);
}

LossGrad cfm_loss_grad(const FlowModel& model, const Matrix& x1, const Matrix* cond, double dropout, Rng& rng) {
    const auto n = static_cast<std::size_t>(x1.rows());
    const auto d = static_cast<std::size_t>(x1.cols());
    Rng noise_rng = rng.split(1);
    Rng time_rng = rng.split(2);
    Rng drop_rng = rng.split(3);
    Matrix x0(x1.rows(), x1.cols());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            x0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = noise_rng.normal();
        }
    }
    const std::vector<double> times = sample_logit_normal(n, time_rng);
    const Vector t = Eigen::Map<const Vector>(times.data(), static_cast<Eigen::Index>(n));
    std::vector<bool> keep(n, true);
    for (std::size_t i = 0; i < n; ++i) keep[i] = !drop_rng.bernoulli(dropout);
    // Advance the caller's stream so consecutive calls draw fresh values.
    rng = rng.split(4);
    return cfm_loss_grad_fixed(model, x1, cond, x0, t, keep);
}

LossGrad regression_loss_grad(const FlowModel& model, const Matrix& x, const Matrix* cond) {
    const Matrix zeros = Matrix::Zero(x.rows(), x.cols());
    const Vector t = Vector::Zero(x.rows());
    return model.loss_grad(zeros, t, model.arch().conditional() ? cond : nullptr, x);
}

}  // namespace gvs
