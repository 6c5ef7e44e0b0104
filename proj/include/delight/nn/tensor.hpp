#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "delight/core/rng.hpp"

namespace dlt::nn {

// Reverse-mode autodiff on dense double tensors. Values are stored
// flattened row-major; 2D tensors are (rows, cols), image tensors are
// (channels, height, width). Double precision keeps central-difference
// gradient checks meaningful at 1e-4 relative tolerance.

struct Node {
    std::vector<int> shape;
    Eigen::ArrayXd value;
    Eigen::ArrayXd grad;  // empty until touched by backward
    bool requiresGrad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backfn;

    size_t numel() const { return size_t(value.size()); }
    void ensureGrad() {
        if (grad.size() != value.size()) grad = Eigen::ArrayXd::Zero(value.size());
    }
};

// Graph recording is disabled inside a NoGradGuard scope; ops then produce
// detached results (no parents, no backward closures).
bool gradEnabled();
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;

  private:
    bool prev_;
};

class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    static Tensor zeros(std::vector<int> shape, bool requiresGrad = false);
    static Tensor full(std::vector<int> shape, double v, bool requiresGrad = false);
    static Tensor fromData(std::vector<int> shape, const double* data, bool requiresGrad = false);
    static Tensor randn(std::vector<int> shape, double stddev, Rng& rng, bool requiresGrad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape[size_t(i)]; }
    int ndim() const { return int(node_->shape.size()); }
    size_t numel() const { return node_->numel(); }

    Eigen::ArrayXd& value() { return node_->value; }
    const Eigen::ArrayXd& value() const { return node_->value; }
    Eigen::ArrayXd& grad() { node_->ensureGrad(); return node_->grad; }
    bool requiresGrad() const { return node_->requiresGrad; }
    void setRequiresGrad(bool v) { node_->requiresGrad = v; }
    void zeroGrad() { if (node_->grad.size()) node_->grad.setZero(); }

    double item() const { return node_->value[0]; }

    // Runs reverse-mode accumulation from this scalar.
    void backward();

    std::shared_ptr<Node> node() const { return node_; }

  private:
    std::shared_ptr<Node> node_;
};

// ---- elementwise and scalar ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor addScalar(const Tensor& a, double s);
Tensor absT(const Tensor& a);
Tensor square(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor clampMin0(const Tensor& a);  // subgradient 1 at 0 so zero-init heads keep learning
Tensor gelu(const Tensor& a);
Tensor charbonnier(const Tensor& a, double eps);  // sqrt(x^2 + eps^2)

// ---- reductions ----
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// ---- 2D linear algebra (rows, cols) ----
Tensor matmul(const Tensor& a, const Tensor& b, bool transA = false, bool transB = false);
Tensor addRowVector(const Tensor& x, const Tensor& v);  // [n,c] + [c]
Tensor softmaxRows(const Tensor& x);
Tensor layerNormRows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-6);
Tensor concatRows(const Tensor& a, const Tensor& b);
Tensor sliceRows(const Tensor& x, int begin, int end);
Tensor sliceCols(const Tensor& x, int begin, int end);
Tensor concatColsMany(const std::vector<Tensor>& parts);

// Gradient-check helper: central differences of f at x against x's
// accumulated grad; returns max relative error over probed entries.
double gradCheck(const std::function<Tensor()>& f, Tensor x, int probes, Rng& rng,
                 double h = 1e-5);

}  // namespace dlt::nn
