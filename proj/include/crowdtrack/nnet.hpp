#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace crowdtrack::nnet {

/// Tensor extents. 2-D values use (rows, cols) with depth = 1; 3-D values
/// (convolution kernels) use (depth, rows, cols).
struct Shape {
    int depth = 1;
    int rows = 0;
    int cols = 0;

    int size() const { return depth * rows * cols; }
    bool operator==(const Shape&) const = default;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the value graph: payload, gradient accumulator, and the
/// closure that scatters the gradient to its parents.
struct Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backprop;  // empty for leaves/constants

    explicit Node(Shape s) : shape(s), data(s.size(), 0.0), grad(s.size(), 0.0) {}
};

/// Handle to a node. Copies alias the same node.
class Value {
public:
    Value() = default;
    explicit Value(NodePtr n) : node_(std::move(n)) {}

    /// Fresh leaf with given contents.
    static Value leaf(Shape s, std::vector<double> data);
    static Value zeros(Shape s);
    static Value scalar(double v);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int rows() const { return node_->shape.rows; }
    int cols() const { return node_->shape.cols; }

    std::vector<double>& data() { return node_->data; }
    const std::vector<double>& data() const { return node_->data; }
    std::vector<double>& grad() { return node_->grad; }
    const std::vector<double>& grad() const { return node_->grad; }

    double at(int r, int c) const { return node_->data[r * cols() + c]; }
    double& at(int r, int c) { return node_->data[r * cols() + c]; }
    double item() const { return node_->data[0]; }

    void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

    NodePtr node() const { return node_; }

private:
    NodePtr node_;
};

// ---- graph ops (all allocate a fresh node wired to its parents) ----

Value add(const Value& a, const Value& b);            // same shape
Value sub(const Value& a, const Value& b);            // same shape
Value mul(const Value& a, const Value& b);            // elementwise, same shape
Value add_rowvec(const Value& x, const Value& b);     // b is 1 x C
Value matmul(const Value& a, const Value& b);         // (M x K) . (K x N)
Value matmul_nt(const Value& a, const Value& b);      // (M x K) . (N x K)^T
Value scale(const Value& x, double c);
Value add_const(const Value& x, const std::vector<double>& c);  // same length
Value mul_const(const Value& x, const std::vector<double>& c);  // same length
Value mul_rowvec_const(const Value& x, const std::vector<double>& v);  // v has C entries

/// x . w + b with b broadcast over rows. Realizes the affine map used by
/// every projection in the models.
Value linear(const Value& x, const Value& w, const Value& b);

/// Row softmax of x / scale; rows sum to 1. scale must be > 0.
Value softmax_rows(const Value& x, double scale);

/// Elementwise PReLU with a single learnable scalar slope (1x1 value).
Value prelu(const Value& x, const Value& slope);
Value sigmoid(const Value& x);
Value log_elem(const Value& x);
Value clamp(const Value& x, double lo, double hi);
/// Clamp selected columns from below, other columns pass through.
Value clamp_min_cols(const Value& x, const std::vector<int>& cols, double lo);

enum class ConvAxis { kRows, kCols };

/// Same-size 1-D convolution of a 2-D value along the chosen axis, applied
/// independently along the other axis. kernel is 1 x kappa (kappa odd),
/// zero padding of (kappa-1)/2 on each side.
Value conv_asym(const Value& x, const Value& kernel, ConvAxis axis);

/// Same-size 1-D convolution along the row axis of x (rows = time) with
/// channel mixing: x is T x Cin, kernel is (kappa, Cin, Cout), output T x Cout.
Value conv_time(const Value& x, const Value& kernel);

/// Mean over the row axis: M x C -> 1 x C.
Value pool_mean(const Value& x);

Value sum_all(const Value& x);   // -> 1x1
Value mean_all(const Value& x);  // -> 1x1

/// Stack inputs vertically; all must share a column count.
Value concat_rows(const std::vector<Value>& xs);
/// Concatenate along columns; same row count.
Value concat_cols(const Value& a, const Value& b);
/// Repeat each row `times` consecutive times: S x C -> (S*times) x C.
Value tile_rows(const Value& x, int times);
/// Divide each row of x by the matching entry of s (M x 1).
Value div_rows(const Value& x, const Value& s);

/// Per-row IoU between predicted boxes (M x 4, center-size, differentiable)
/// and fixed reference boxes. Non-overlapping pairs yield 0 with zero gradient.
Value iou_rows(const Value& pred, const std::vector<double>& ref_boxes);

/// Reverse-mode gradient propagation from a scalar loss. Gradients accumulate
/// into every ancestor's grad buffer (including reused leaves).
void backward(const Value& loss);

// ---- parameters ----

/// Named collection of learnable leaves. Deterministic (sorted) iteration.
class Params {
public:
    Value add(const std::string& name, Value v);
    Value get(const std::string& name) const;
    bool contains(const std::string& name) const;
    void merge_from(const Params& other);  // names must not collide

    const std::map<std::string, Value>& items() const { return items_; }
    void zero_grad();
    int total_size() const;

private:
    std::map<std::string, Value> items_;
};

/// Uniform(-limit, limit) leaf with limit = sqrt(1 / fan_in), optionally
/// shrunk by `gain`.
Value init_uniform(Shape s, int fan_in, std::mt19937_64& rng, double gain = 1.0);

/// SGD with classical momentum. Velocity buffers keyed by parameter name.
class SgdOptimizer {
public:
    SgdOptimizer(double lr, double momentum) : lr_(lr), momentum_(momentum) {}
    void step(Params& params);

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

private:
    double lr_;
    double momentum_;
    std::map<std::string, std::vector<double>> velocity_;
};

/// Central-finite-difference check of d loss / d params against backward().
/// Each coordinate is differenced at eps, 100*eps and min(1e-2, 10000*eps)
/// and keeps the best-conditioned estimate. Returns the max over coordinates
/// of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double grad_check(const std::function<Value()>& loss_fn, Params& params,
                  double eps = 1e-5);

// ---- checkpoint io ----

/// Text checkpoint: versioned header, then (name, shape, values) triples with
/// 17 significant digits. Round-trips bit-exactly.
void save_params(const Params& params, const std::string& path);
Params load_params(const std::string& path);
void load_params_into(Params& params, const std::string& path);

}  // namespace crowdtrack::nnet
