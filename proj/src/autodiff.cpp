#include "fse/autodiff.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "fse/errors.hpp"

namespace fse::ad {

namespace {

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DataError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()) + ")");
    }
}

double stable_softplus(double x) {
    // log(1 + e^x) without overflow
    if (x > 0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

}  // namespace

const char* Tape::op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Const: return "const";
        case Op::MatMul: return "matmul";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::CMul: return "cmul";
        case Op::Scale: return "scale";
        case Op::AddConst: return "add_const";
        case Op::AddRowVec: return "add_rowvec";
        case Op::Relu: return "relu";
        case Op::Softplus: return "softplus";
        case Op::Square: return "square";
        case Op::Min: return "min";
        case Op::Max: return "max";
        case Op::Sum: return "sum";
        case Op::ColMax: return "colwise_max";
        case Op::DivScalar: return "div_scalar";
        case Op::SqrtScalar: return "sqrt_scalar";
    }
    return "?";
}

Var Tape::push(Op op, Mat value, int a, int b, double c) {
    if (!value.allFinite()) {
        throw NumericalError(std::string("non-finite value produced by ") + op_name(op) +
                             " at node " + std::to_string(nodes_.size()));
    }
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.c = c;
    n.value = std::move(value);
    n.requires_grad = (op == Op::Leaf) ||
                      (a >= 0 && nodes_[a].requires_grad) ||
                      (b >= 0 && nodes_[b].requires_grad);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Tape::leaf(const Mat& value) { return push(Op::Leaf, value, -1, -1, 0.0); }
Var Tape::constant(const Mat& value) { return push(Op::Const, value, -1, -1, 0.0); }

Var Tape::matmul(Var a, Var b) {
    const Mat& A = nodes_[a.idx].value;
    const Mat& B = nodes_[b.idx].value;
    if (A.cols() != B.rows()) {
        throw DataError("matmul: inner dimension mismatch (" + std::to_string(A.rows()) + "x" +
                        std::to_string(A.cols()) + " * " + std::to_string(B.rows()) + "x" +
                        std::to_string(B.cols()) + ")");
    }
    return push(Op::MatMul, A * B, a.idx, b.idx, 0.0);
}

Var Tape::add(Var a, Var b) {
    const Mat& A = nodes_[a.idx].value;
    const Mat& B = nodes_[b.idx].value;
    require_same_shape(A, B, "add");
    return push(Op::Add, A + B, a.idx, b.idx, 0.0);
}

Var Tape::sub(Var a, Var b) {
    const Mat& A = nodes_[a.idx].value;
    const Mat& B = nodes_[b.idx].value;
    require_same_shape(A, B, "sub");
    return push(Op::Sub, A - B, a.idx, b.idx, 0.0);
}

Var Tape::cmul(Var a, Var b) {
    const Mat& A = nodes_[a.idx].value;
    const Mat& B = nodes_[b.idx].value;
    require_same_shape(A, B, "cmul");
    return push(Op::CMul, A.cwiseProduct(B), a.idx, b.idx, 0.0);
}

Var Tape::scale(Var a, double c) {
    return push(Op::Scale, nodes_[a.idx].value * c, a.idx, -1, c);
}

Var Tape::add_const(Var a, double c) {
    return push(Op::AddConst, nodes_[a.idx].value.array() + c, a.idx, -1, c);
}

Var Tape::add_rowvec(Var a, Var r) {
    const Mat& A = nodes_[a.idx].value;
    const Mat& R = nodes_[r.idx].value;
    if (R.rows() != 1 || R.cols() != A.cols()) {
        throw DataError("add_rowvec: expected 1x" + std::to_string(A.cols()) + " row, got " +
                        std::to_string(R.rows()) + "x" + std::to_string(R.cols()));
    }
    return push(Op::AddRowVec, A.rowwise() + R.row(0), a.idx, r.idx, 0.0);
}

Var Tape::relu(Var a) {
    const Mat& A = nodes_[a.idx].value;
    kink_gap_ = std::min(kink_gap_, A.cwiseAbs().minCoeff());
    for (Eigen::Index i = 0; i < A.size(); ++i) sig_mix(A.data()[i] > 0.0);
    return push(Op::Relu, A.cwiseMax(0.0), a.idx, -1, 0.0);
}

Var Tape::softplus(Var a) {
    const Mat& A = nodes_[a.idx].value;
    return push(Op::Softplus, A.unaryExpr([](double x) { return stable_softplus(x); }), a.idx, -1,
                0.0);
}

Var Tape::square(Var a) {
    const Mat& A = nodes_[a.idx].value;
    return push(Op::Square, A.cwiseProduct(A), a.idx, -1, 0.0);
}

Var Tape::cmin(Var a, Var b) {
    const Mat& A = nodes_[a.idx].value;
    const Mat& B = nodes_[b.idx].value;
    require_same_shape(A, B, "min");
    kink_gap_ = std::min(kink_gap_, (A - B).cwiseAbs().minCoeff());
    for (Eigen::Index i = 0; i < A.size(); ++i) sig_mix(A.data()[i] <= B.data()[i]);
    return push(Op::Min, A.cwiseMin(B), a.idx, b.idx, 0.0);
}

Var Tape::cmax(Var a, Var b) {
    const Mat& A = nodes_[a.idx].value;
    const Mat& B = nodes_[b.idx].value;
    require_same_shape(A, B, "max");
    kink_gap_ = std::min(kink_gap_, (A - B).cwiseAbs().minCoeff());
    for (Eigen::Index i = 0; i < A.size(); ++i) sig_mix(A.data()[i] <= B.data()[i]);
    return push(Op::Max, A.cwiseMax(B), a.idx, b.idx, 0.0);
}

Var Tape::sum(Var a) {
    Mat out(1, 1);
    out(0, 0) = nodes_[a.idx].value.sum();
    return push(Op::Sum, std::move(out), a.idx, -1, 0.0);
}

Var Tape::colwise_max(Var a) {
    const Mat& A = nodes_[a.idx].value;
    if (A.rows() < 1) throw DataError("colwise_max: empty input");
    Mat out = A.colwise().maxCoeff();
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
        Eigen::Index argmax = 0;
        A.col(c).maxCoeff(&argmax);
        sig_mix(static_cast<std::uint64_t>(argmax));
    }
    return push(Op::ColMax, std::move(out), a.idx, -1, 0.0);
}

Var Tape::div_scalar(Var a, Var s) {
    const Mat& S = nodes_[s.idx].value;
    if (S.rows() != 1 || S.cols() != 1) throw DataError("div_scalar: divisor must be 1x1");
    return push(Op::DivScalar, nodes_[a.idx].value / S(0, 0), a.idx, s.idx, 0.0);
}

Var Tape::sqrt_scalar(Var s) {
    const Mat& S = nodes_[s.idx].value;
    if (S.rows() != 1 || S.cols() != 1) throw DataError("sqrt_scalar: input must be 1x1");
    Mat out(1, 1);
    out(0, 0) = std::sqrt(S(0, 0));
    return push(Op::SqrtScalar, std::move(out), s.idx, -1, 0.0);
}

double Tape::value_scalar(Var v) const {
    const Mat& m = nodes_[v.idx].value;
    if (m.rows() != 1 || m.cols() != 1)
        throw DataError("value_scalar: node is not scalar");
    return m(0, 0);
}

void Tape::accum(int idx, const Mat& g) {
    Node& n = nodes_[idx];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    n.grad += g;
}

void Tape::backward(Var out) {
    if (backward_done_) throw DataError("backward: tape already swept");
    backward_done_ = true;
    Node& last = nodes_[out.idx];
    if (last.value.rows() != 1 || last.value.cols() != 1)
        throw DataError("backward: output must be scalar");
    last.grad = Mat::Ones(1, 1);

    for (int i = out.idx; i >= 0; --i) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.size() == 0) continue;
        const Mat& G = n.grad;
        switch (n.op) {
            case Op::Leaf:
            case Op::Const:
                break;
            case Op::MatMul:
                accum(n.a, G * nodes_[n.b].value.transpose());
                accum(n.b, nodes_[n.a].value.transpose() * G);
                break;
            case Op::Add:
                accum(n.a, G);
                accum(n.b, G);
                break;
            case Op::Sub:
                accum(n.a, G);
                accum(n.b, -G);
                break;
            case Op::CMul:
                accum(n.a, G.cwiseProduct(nodes_[n.b].value));
                accum(n.b, G.cwiseProduct(nodes_[n.a].value));
                break;
            case Op::Scale:
                accum(n.a, G * n.c);
                break;
            case Op::AddConst:
                accum(n.a, G);
                break;
            case Op::AddRowVec:
                accum(n.a, G);
                accum(n.b, G.colwise().sum());
                break;
            case Op::Relu: {
                const Mat& A = nodes_[n.a].value;
                // subgradient at 0 is 0
                accum(n.a, G.cwiseProduct((A.array() > 0.0).cast<double>().matrix()));
                break;
            }
            case Op::Softplus: {
                const Mat& A = nodes_[n.a].value;
                Mat sig = A.unaryExpr([](double x) {
                    return x > 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
                });
                accum(n.a, G.cwiseProduct(sig));
                break;
            }
            case Op::Square:
                accum(n.a, 2.0 * G.cwiseProduct(nodes_[n.a].value));
                break;
            case Op::Min: {
                const Mat& A = nodes_[n.a].value;
                const Mat& B = nodes_[n.b].value;
                Mat pick_a = (A.array() <= B.array()).cast<double>();
                accum(n.a, G.cwiseProduct(pick_a.matrix()));
                accum(n.b, G.cwiseProduct((1.0 - pick_a.array()).matrix()));
                break;
            }
            case Op::Max: {
                const Mat& A = nodes_[n.a].value;
                const Mat& B = nodes_[n.b].value;
                Mat pick_a = (A.array() >= B.array()).cast<double>();
                accum(n.a, G.cwiseProduct(pick_a.matrix()));
                accum(n.b, G.cwiseProduct((1.0 - pick_a.array()).matrix()));
                break;
            }
            case Op::Sum:
                accum(n.a, Mat::Constant(nodes_[n.a].value.rows(), nodes_[n.a].value.cols(),
                                         G(0, 0)));
                break;
            case Op::ColMax: {
                const Mat& A = nodes_[n.a].value;
                Mat g = Mat::Zero(A.rows(), A.cols());
                for (Eigen::Index c = 0; c < A.cols(); ++c) {
                    Eigen::Index argmax = 0;
                    A.col(c).maxCoeff(&argmax);  // first occurrence, fixed order
                    g(argmax, c) = G(0, c);
                }
                accum(n.a, g);
                break;
            }
            case Op::DivScalar: {
                const double s = nodes_[n.b].value(0, 0);
                accum(n.a, G / s);
                Mat gs(1, 1);
                gs(0, 0) = -(G.cwiseProduct(n.value)).sum() / s;
                accum(n.b, gs);
                break;
            }
            case Op::SqrtScalar: {
                Mat gs(1, 1);
                gs(0, 0) = G(0, 0) * 0.5 / n.value(0, 0);
                accum(n.a, gs);
                break;
            }
        }
        if (n.op != Op::Leaf && n.op != Op::Const) n.grad.resize(0, 0);  // free as we go
    }
}

const Mat& Tape::grad(Var v) const {
    static const Mat empty;
    const Node& n = nodes_[v.idx];
    return n.grad.size() ? n.grad : empty;
}

ForwardBackward forward_backward(const Program& program, const std::vector<Mat>& params,
                                 const std::vector<Mat>& inputs) {
    Tape tape;
    std::vector<Var> pv, iv;
    pv.reserve(params.size());
    iv.reserve(inputs.size());
    for (const Mat& p : params) pv.push_back(tape.leaf(p));
    for (const Mat& x : inputs) iv.push_back(tape.constant(x));
    Var out = program(tape, pv, iv);
    tape.backward(out);

    ForwardBackward result;
    result.value = tape.value_scalar(out);
    result.kink_gap = tape.kink_gap();
    result.grads.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Mat& g = tape.grad(pv[i]);
        result.grads.push_back(g.size() ? g : Mat::Zero(params[i].rows(), params[i].cols()));
    }
    return result;
}

GradCheckReport grad_check(const Program& program, const std::vector<Mat>& params,
                           const std::vector<Mat>& inputs, double tolerance, std::uint64_t seed,
                           int samples_per_param, double h) {
    GradCheckReport report;
    ForwardBackward base = forward_backward(program, params, inputs);

    std::mt19937_64 rng(seed);
    auto eval_at = [&](const std::vector<Mat>& p) {
        Tape tape;
        std::vector<Var> pv, iv;
        for (const Mat& m : p) pv.push_back(tape.constant(m));
        for (const Mat& x : inputs) iv.push_back(tape.constant(x));
        Var out = program(tape, pv, iv);
        return std::pair<double, std::uint64_t>(tape.value_scalar(out), tape.kink_signature());
    };
    const std::uint64_t base_sig = eval_at(params).second;

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        const Eigen::Index n = params[pi].size();
        const int samples = static_cast<int>(std::min<Eigen::Index>(n, samples_per_param));
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        double max_rel = 0.0;
        int budget = samples * 10;  // bounds redraws when inputs sit on a kink
        for (int s = 0; s < samples && budget > 0; ++s, --budget) {
            Eigen::Index k = (n <= samples_per_param) ? s : pick(rng);
            std::vector<Mat> shifted = params;
            double saved = shifted[pi].data()[k];

            shifted[pi].data()[k] = saved + h;
            auto [fp, sig_p] = eval_at(shifted);
            shifted[pi].data()[k] = saved - h;
            auto [fm, sig_m] = eval_at(shifted);

            if (sig_p != base_sig || sig_m != base_sig) {
                // perturbation crosses a hinge/argmax boundary; the function is
                // not smooth on [x-h, x+h], so redraw the sample
                ++report.redraws;
                if (n > samples_per_param) --s;
                continue;
            }
            const double numeric = (fp - fm) / (2.0 * h);
            const double analytic = base.grads[pi].data()[k];
            const double rel = std::abs(analytic - numeric) /
                               std::max(1e-6, std::abs(analytic) + std::abs(numeric));
            max_rel = std::max(max_rel, rel);
        }
        report.entries.push_back({pi, max_rel});
        worst = std::max(worst, max_rel);
    }
    report.worst = worst;
    report.passed = worst <= tolerance;
    return report;
}

}  // namespace fse::ad
