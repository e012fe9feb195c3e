#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fse/tensor_store.hpp"

namespace fse::ad {

using fse::Mat;

/// Handle into a Tape node.
struct Var {
    int idx = -1;
};

/// Reverse-mode gradient tape over dense f64 matrices (vectors are 1xN or
/// Nx1, scalars are 1x1). Nodes are created in topological order, so the
/// backward pass is a single reverse sweep. Every operation verifies its
/// output is finite and throws NumericalError with the node index otherwise.
class Tape {
public:
    // Differentiable leaf (parameter).
    Var leaf(const Mat& value);
    // Non-differentiable input.
    Var constant(const Mat& value);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);       // same shape
    Var sub(Var a, Var b);       // same shape
    Var cmul(Var a, Var b);      // elementwise
    Var scale(Var a, double c);
    Var add_const(Var a, double c);
    Var add_rowvec(Var a, Var r);  // (n x d) + broadcast (1 x d)
    Var relu(Var a);
    Var softplus(Var a);
    Var square(Var a);
    Var cmin(Var a, Var b);      // elementwise min
    Var cmax(Var a, Var b);      // elementwise max
    Var sum(Var a);              // full reduction to 1x1
    Var colwise_max(Var a);      // (n x d) -> (1 x d), first-row tie break
    Var div_scalar(Var a, Var s);  // matrix / (1x1)
    Var sqrt_scalar(Var s);

    const Mat& value(Var v) const { return nodes_[v.idx].value; }
    double value_scalar(Var v) const;

    /// Seeds d(out)/d(out)=1 and sweeps the tape in reverse. `out` must be
    /// scalar. Gradients accumulate; call once per tape.
    void backward(Var out);
    const Mat& grad(Var v) const;

    /// Smallest distance of any hinge/min/max input to its kink across all
    /// recorded operations (diagnostic only).
    double kink_gap() const { return kink_gap_; }

    /// Hash of the active set of every hinge/min/max/argmax decision made
    /// during the forward pass. Two evaluations with equal signatures lie in
    /// the same smooth region, so central differences across them are valid;
    /// finite-difference checks redraw samples whose signatures differ.
    std::uint64_t kink_signature() const { return kink_sig_; }

    std::size_t size() const { return nodes_.size(); }

private:
    enum class Op {
        Leaf, Const, MatMul, Add, Sub, CMul, Scale, AddConst, AddRowVec,
        Relu, Softplus, Square, Min, Max, Sum, ColMax, DivScalar, SqrtScalar,
    };

    struct Node {
        Op op;
        int a = -1, b = -1;
        double c = 0.0;
        Mat value;
        Mat grad;  // lazily sized in backward
        bool requires_grad = false;
    };

    Var push(Op op, Mat value, int a, int b, double c);
    static const char* op_name(Op op);
    void accum(int idx, const Mat& g);
    void sig_mix(std::uint64_t v) { kink_sig_ = (kink_sig_ ^ v) * 1099511628211ULL; }

    std::vector<Node> nodes_;
    double kink_gap_ = std::numeric_limits<double>::infinity();
    std::uint64_t kink_sig_ = 1469598103934665603ULL;
    bool backward_done_ = false;
};

/// A scalar-valued computation over parameter and input tensors.
using Program =
    std::function<Var(Tape&, const std::vector<Var>& params, const std::vector<Var>& inputs)>;

struct ForwardBackward {
    double value = 0.0;
    std::vector<Mat> grads;  // one per parameter, zero if untouched
    double kink_gap = 0.0;
};

ForwardBackward forward_backward(const Program& program, const std::vector<Mat>& params,
                                 const std::vector<Mat>& inputs);

struct GradCheckEntry {
    std::size_t param_index = 0;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    int redraws = 0;   // samples rejected for sitting within h of a hinge kink
    bool passed = false;
    double worst = 0.0;
};

/// Compares tape gradients against central finite differences (step h) on
/// up to `samples_per_param` entries of each parameter. Relative error is
/// |analytic - numeric| / max(1e-6, |analytic| + |numeric|); the floor keeps
/// central-difference roundoff on near-zero gradients from registering as
/// relative error. Perturbed
/// evaluations that land within h of a hinge kink are redrawn.
GradCheckReport grad_check(const Program& program, const std::vector<Mat>& params,
                           const std::vector<Mat>& inputs, double tolerance,
                           std::uint64_t seed, int samples_per_param = 12,
                           double h = 1e-5);

}  // namespace fse::ad
