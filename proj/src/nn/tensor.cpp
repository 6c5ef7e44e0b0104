#include "delight/nn/tensor.hpp"

#include <cmath>
#include <unordered_set>

#include "delight/core/errors.hpp"

namespace dlt::nn {

namespace {

thread_local bool g_gradEnabled = true;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using CMapRM = Eigen::Map<const RowMat>;

size_t shapeNumel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) n *= size_t(d);
    return n;
}

std::shared_ptr<Node> makeNode(std::vector<int> shape) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value.resize(Eigen::Index(shapeNumel(n->shape)));
    return n;
}

// Wires parents/backfn only when recording is on and a parent needs grads.
Tensor finish(std::shared_ptr<Node> out, std::vector<std::shared_ptr<Node>> parents,
              std::function<void()> backfn) {
    bool needs = false;
    for (const auto& p : parents) needs |= p->requiresGrad;
    if (gradEnabled() && needs) {
        out->requiresGrad = true;
        out->parents = std::move(parents);
        out->backfn = std::move(backfn);
    }
    return Tensor(std::move(out));
}

void checkSameShape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) throw NumericalError(std::string(op) + ": shape mismatch");
}

}  // namespace

bool gradEnabled() { return g_gradEnabled; }

NoGradGuard::NoGradGuard() : prev_(g_gradEnabled) { g_gradEnabled = false; }
NoGradGuard::~NoGradGuard() { g_gradEnabled = prev_; }

Tensor Tensor::zeros(std::vector<int> shape, bool requiresGrad) {
    auto n = makeNode(std::move(shape));
    n->value.setZero();
    n->requiresGrad = requiresGrad;
    return Tensor(std::move(n));
}

Tensor Tensor::full(std::vector<int> shape, double v, bool requiresGrad) {
    auto n = makeNode(std::move(shape));
    n->value.setConstant(v);
    n->requiresGrad = requiresGrad;
    return Tensor(std::move(n));
}

Tensor Tensor::fromData(std::vector<int> shape, const double* data, bool requiresGrad) {
    auto n = makeNode(std::move(shape));
    std::copy(data, data + n->numel(), n->value.data());
    n->requiresGrad = requiresGrad;
    return Tensor(std::move(n));
}

Tensor Tensor::randn(std::vector<int> shape, double stddev, Rng& rng, bool requiresGrad) {
    auto n = makeNode(std::move(shape));
    for (Eigen::Index i = 0; i < n->value.size(); ++i) n->value[i] = stddev * rng.normal();
    n->requiresGrad = requiresGrad;
    return Tensor(std::move(n));
}

void Tensor::backward() {
    if (numel() != 1) throw NumericalError("backward: root must be a scalar");

    // iterative DFS topological order
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (!visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    node_->ensureGrad();
    node_->grad.setConstant(1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backfn) (*it)->backfn();
}

// ---------------- elementwise ----------------

Tensor add(const Tensor& a, const Tensor& b) {
    checkSameShape(a, b, "add");
    auto out = makeNode(a.shape());
    out->value = a.value() + b.value();
    Node* an = a.node().get();
    Node* bn = b.node().get();
    Node* on = out.get();
    return finish(out, {a.node(), b.node()}, [an, bn, on] {
        if (an->requiresGrad) { an->ensureGrad(); an->grad += on->grad; }
        if (bn->requiresGrad) { bn->ensureGrad(); bn->grad += on->grad; }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    checkSameShape(a, b, "sub");
    auto out = makeNode(a.shape());
    out->value = a.value() - b.value();
    Node* an = a.node().get();
    Node* bn = b.node().get();
    Node* on = out.get();
    return finish(out, {a.node(), b.node()}, [an, bn, on] {
        if (an->requiresGrad) { an->ensureGrad(); an->grad += on->grad; }
        if (bn->requiresGrad) { bn->ensureGrad(); bn->grad -= on->grad; }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    checkSameShape(a, b, "mul");
    auto out = makeNode(a.shape());
    out->value = a.value() * b.value();
    Node* an = a.node().get();
    Node* bn = b.node().get();
    Node* on = out.get();
    return finish(out, {a.node(), b.node()}, [an, bn, on] {
        if (an->requiresGrad) { an->ensureGrad(); an->grad += on->grad * bn->value; }
        if (bn->requiresGrad) { bn->ensureGrad(); bn->grad += on->grad * an->value; }
    });
}

Tensor scale(const Tensor& a, double s) {
    auto out = makeNode(a.shape());
    out->value = a.value() * s;
    Node* an = a.node().get();
    Node* on = out.get();
    return finish(out, {a.node()}, [an, on, s] {
        an->ensureGrad();
        an->grad += on->grad * s;
    });
}

Tensor addScalar(const Tensor& a, double s) {
    auto out = makeNode(a.shape());
    out->value = a.value() + s;
    Node* an = a.node().get();
    Node* on = out.get();
    return finish(out, {a.node()}, [an, on] {
        an->ensureGrad();
        an->grad += on->grad;
    });
}

Tensor absT(const Tensor& a) {
    auto out = makeNode(a.shape());
    out->value = a.value().abs();
    Node* an = a.node().get();
    Node* on = out.get();
    return finish(out, {a.node()}, [an, on] {
        an->ensureGrad();
        an->grad += on->grad * an->value.sign();
    });
}

Tensor square(const Tensor& a) {
    auto out = makeNode(a.shape());
    out->value = a.value().square();
    Node* an = a.node().get();
    Node* on = out.get();
    return finish(out, {a.node()}, [an, on] {
        an->ensureGrad();
        an->grad += on->grad * 2.0 * an->value;
    });
}

Tensor relu(const Tensor& a) {
    auto out = makeNode(a.shape());
    out->value = a.value().max(0.0);
    Node* an = a.node().get();
    Node* on = out.get();
    return finish(out, {a.node()}, [an, on] {
        an->ensureGrad();
        an->grad += on->grad * (an->value > 0.0).cast<double>();
    });
}

Tensor clampMin0(const Tensor& a) {
    auto out = makeNode(a.shape());
    out->value = a.value().max(0.0);
    Node* an = a.node().get();
    Node* on = out.get();
    return finish(out, {a.node()}, [an, on] {
        an->ensureGrad();
        an->grad += on->grad * (an->value >= 0.0).cast<double>();
    });
}

Tensor gelu(const Tensor& a) {
    // tanh approximation; backward differentiates the same formula
    auto out = makeNode(a.shape());
    const double c = std::sqrt(2.0 / 3.14159265358979323846);
    const Eigen::ArrayXd& x = a.value();
    Eigen::ArrayXd inner = c * (x + 0.044715 * x.cube());
    Eigen::ArrayXd t = inner.tanh();
    out->value = 0.5 * x * (1.0 + t);
    Node* an = a.node().get();
    Node* on = out.get();
    return finish(out, {a.node()}, [an, on, c] {
        const Eigen::ArrayXd& x = an->value;
        Eigen::ArrayXd inner = c * (x + 0.044715 * x.cube());
        Eigen::ArrayXd t = inner.tanh();
        Eigen::ArrayXd dinner = c * (1.0 + 3.0 * 0.044715 * x.square());
        Eigen::ArrayXd d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t.square()) * dinner;
        an->ensureGrad();
        an->grad += on->grad * d;
    });
}

Tensor charbonnier(const Tensor& a, double eps) {
    auto out = makeNode(a.shape());
    out->value = (a.value().square() + eps * eps).sqrt();
    Node* an = a.node().get();
    Node* on = out.get();
    return finish(out, {a.node()}, [an, on, eps] {
        Eigen::ArrayXd denom = (an->value.square() + eps * eps).sqrt();
        an->ensureGrad();
        an->grad += on->grad * an->value / denom;
    });
}

// ---------------- reductions ----------------

Tensor sum(const Tensor& a) {
    auto out = makeNode({1});
    out->value[0] = a.value().sum();
    Node* an = a.node().get();
    Node* on = out.get();
    return finish(out, {a.node()}, [an, on] {
        an->ensureGrad();
        an->grad += on->grad[0];
    });
}

Tensor mean(const Tensor& a) {
    auto out = makeNode({1});
    const double inv = 1.0 / double(a.numel());
    out->value[0] = a.value().sum() * inv;
    Node* an = a.node().get();
    Node* on = out.get();
    return finish(out, {a.node()}, [an, on, inv] {
        an->ensureGrad();
        an->grad += on->grad[0] * inv;
    });
}

// ---------------- 2D ops ----------------

static void check2d(const Tensor& t, const char* op) {
    if (t.ndim() != 2) throw NumericalError(std::string(op) + ": expected 2D tensor");
}

Tensor matmul(const Tensor& a, const Tensor& b, bool transA, bool transB) {
    check2d(a, "matmul");
    check2d(b, "matmul");
    const int m = transA ? a.dim(1) : a.dim(0);
    const int ka = transA ? a.dim(0) : a.dim(1);
    const int kb = transB ? b.dim(1) : b.dim(0);
    const int n = transB ? b.dim(0) : b.dim(1);
    if (ka != kb) throw NumericalError("matmul: inner dimensions disagree");

    auto out = makeNode({m, n});
    {
        CMapRM A(a.value().data(), a.dim(0), a.dim(1));
        CMapRM B(b.value().data(), b.dim(0), b.dim(1));
        MapRM C(out->value.data(), m, n);
        if (!transA && !transB) C.noalias() = A * B;
        else if (transA && !transB) C.noalias() = A.transpose() * B;
        else if (!transA && transB) C.noalias() = A * B.transpose();
        else C.noalias() = A.transpose() * B.transpose();
    }
    Node* an = a.node().get();
    Node* bn = b.node().get();
    Node* on = out.get();
    return finish(out, {a.node(), b.node()}, [an, bn, on, m, n, transA, transB] {
        CMapRM A(an->value.data(), an->shape[0], an->shape[1]);
        CMapRM B(bn->value.data(), bn->shape[0], bn->shape[1]);
        CMapRM dC(on->grad.data(), m, n);
        if (an->requiresGrad) {
            an->ensureGrad();
            MapRM dA(an->grad.data(), an->shape[0], an->shape[1]);
            // dM1 = dC * M2^T with M2 = op(B); map back through op(A)
            if (!transA) {
                if (!transB) dA.noalias() += dC * B.transpose();
                else dA.noalias() += dC * B;
            } else {
                if (!transB) dA.noalias() += B * dC.transpose();
                else dA.noalias() += B.transpose() * dC.transpose();
            }
        }
        if (bn->requiresGrad) {
            bn->ensureGrad();
            MapRM dB(bn->grad.data(), bn->shape[0], bn->shape[1]);
            if (!transB) {
                if (!transA) dB.noalias() += A.transpose() * dC;
                else dB.noalias() += A * dC;
            } else {
                if (!transA) dB.noalias() += dC.transpose() * A;
                else dB.noalias() += dC.transpose() * A.transpose();
            }
        }
    });
}

Tensor addRowVector(const Tensor& x, const Tensor& v) {
    check2d(x, "addRowVector");
    if (v.numel() != size_t(x.dim(1))) throw NumericalError("addRowVector: length mismatch");
    auto out = makeNode(x.shape());
    {
        CMapRM X(x.value().data(), x.dim(0), x.dim(1));
        MapRM O(out->value.data(), x.dim(0), x.dim(1));
        O = X.rowwise() + Eigen::Map<const Eigen::RowVectorXd>(v.value().data(), v.numel());
    }
    Node* xn = x.node().get();
    Node* vn = v.node().get();
    Node* on = out.get();
    return finish(out, {x.node(), v.node()}, [xn, vn, on] {
        const int rows = xn->shape[0], cols = xn->shape[1];
        CMapRM dO(on->grad.data(), rows, cols);
        if (xn->requiresGrad) { xn->ensureGrad(); xn->grad += on->grad; }
        if (vn->requiresGrad) {
            vn->ensureGrad();
            Eigen::Map<Eigen::RowVectorXd> dV(vn->grad.data(), cols);
            dV += dO.colwise().sum();
        }
    });
}

Tensor softmaxRows(const Tensor& x) {
    check2d(x, "softmaxRows");
    const int rows = x.dim(0), cols = x.dim(1);
    auto out = makeNode(x.shape());
    {
        CMapRM X(x.value().data(), rows, cols);
        MapRM O(out->value.data(), rows, cols);
        for (int r = 0; r < rows; ++r) {
            const double mx = X.row(r).maxCoeff();
            O.row(r).array() = (X.row(r).array() - mx).exp();
            O.row(r) /= O.row(r).sum();
        }
    }
    Node* xn = x.node().get();
    Node* on = out.get();
    return finish(out, {x.node()}, [xn, on, rows, cols] {
        xn->ensureGrad();
        CMapRM Y(on->value.data(), rows, cols);
        CMapRM dY(on->grad.data(), rows, cols);
        MapRM dX(xn->grad.data(), rows, cols);
        for (int r = 0; r < rows; ++r) {
            const double dot = (dY.row(r).array() * Y.row(r).array()).sum();
            dX.row(r).array() += Y.row(r).array() * (dY.row(r).array() - dot);
        }
    });
}

Tensor layerNormRows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    check2d(x, "layerNormRows");
    const int rows = x.dim(0), cols = x.dim(1);
    if (gain.numel() != size_t(cols) || bias.numel() != size_t(cols))
        throw NumericalError("layerNormRows: gain/bias length mismatch");

    auto out = makeNode(x.shape());
    // cache normalized activations and inverse sigma for backward
    auto xhat = std::make_shared<Eigen::ArrayXd>(Eigen::Index(rows) * cols);
    auto invSigma = std::make_shared<Eigen::ArrayXd>(rows);
    {
        CMapRM X(x.value().data(), rows, cols);
        MapRM O(out->value.data(), rows, cols);
        MapRM XH(xhat->data(), rows, cols);
        const auto g = Eigen::Map<const Eigen::RowVectorXd>(gain.value().data(), cols);
        const auto b = Eigen::Map<const Eigen::RowVectorXd>(bias.value().data(), cols);
        for (int r = 0; r < rows; ++r) {
            const double mu = X.row(r).mean();
            const double var = (X.row(r).array() - mu).square().mean();
            const double is = 1.0 / std::sqrt(var + eps);
            (*invSigma)[r] = is;
            XH.row(r).array() = (X.row(r).array() - mu) * is;
            O.row(r).array() = XH.row(r).array() * g.array() + b.array();
        }
    }
    Node* xn = x.node().get();
    Node* gn = gain.node().get();
    Node* bn = bias.node().get();
    Node* on = out.get();
    return finish(out, {x.node(), gain.node(), bias.node()},
                  [xn, gn, bn, on, rows, cols, xhat, invSigma] {
        CMapRM dY(on->grad.data(), rows, cols);
        CMapRM XH(xhat->data(), rows, cols);
        const auto g = Eigen::Map<const Eigen::RowVectorXd>(gn->value.data(), cols);
        if (gn->requiresGrad) {
            gn->ensureGrad();
            Eigen::Map<Eigen::RowVectorXd> dG(gn->grad.data(), cols);
            dG.array() += (dY.array() * XH.array()).colwise().sum();
        }
        if (bn->requiresGrad) {
            bn->ensureGrad();
            Eigen::Map<Eigen::RowVectorXd> dB(bn->grad.data(), cols);
            dB += dY.colwise().sum();
        }
        if (xn->requiresGrad) {
            xn->ensureGrad();
            MapRM dX(xn->grad.data(), rows, cols);
            for (int r = 0; r < rows; ++r) {
                const Eigen::ArrayXd dyg = (dY.row(r).array() * g.array()).transpose();
                const Eigen::ArrayXd xh = XH.row(r).transpose().array();
                const double m1 = dyg.mean();
                const double m2 = (dyg * xh).mean();
                dX.row(r).array() += ((*invSigma)[r] * (dyg - m1 - xh * m2)).transpose();
            }
        }
    });
}

Tensor concatRows(const Tensor& a, const Tensor& b) {
    check2d(a, "concatRows");
    check2d(b, "concatRows");
    if (a.dim(1) != b.dim(1)) throw NumericalError("concatRows: column counts differ");
    const int ra = a.dim(0), rb = b.dim(0), cols = a.dim(1);
    auto out = makeNode({ra + rb, cols});
    std::copy(a.value().data(), a.value().data() + a.numel(), out->value.data());
    std::copy(b.value().data(), b.value().data() + b.numel(), out->value.data() + a.numel());
    Node* an = a.node().get();
    Node* bn = b.node().get();
    Node* on = out.get();
    return finish(out, {a.node(), b.node()}, [an, bn, on, ra, rb, cols] {
        if (an->requiresGrad) {
            an->ensureGrad();
            an->grad += on->grad.head(Eigen::Index(ra) * cols);
        }
        if (bn->requiresGrad) {
            bn->ensureGrad();
            bn->grad += on->grad.tail(Eigen::Index(rb) * cols);
        }
    });
}

Tensor sliceRows(const Tensor& x, int begin, int end) {
    check2d(x, "sliceRows");
    if (begin < 0 || end > x.dim(0) || begin >= end)
        throw NumericalError("sliceRows: range out of bounds");
    const int cols = x.dim(1);
    auto out = makeNode({end - begin, cols});
    out->value = x.value().segment(Eigen::Index(begin) * cols, Eigen::Index(end - begin) * cols);
    Node* xn = x.node().get();
    Node* on = out.get();
    return finish(out, {x.node()}, [xn, on, begin, end, cols] {
        xn->ensureGrad();
        xn->grad.segment(Eigen::Index(begin) * cols, Eigen::Index(end - begin) * cols) += on->grad;
    });
}

Tensor sliceCols(const Tensor& x, int begin, int end) {
    check2d(x, "sliceCols");
    if (begin < 0 || end > x.dim(1) || begin >= end)
        throw NumericalError("sliceCols: range out of bounds");
    const int rows = x.dim(0), cols = x.dim(1), w = end - begin;
    auto out = makeNode({rows, w});
    {
        CMapRM X(x.value().data(), rows, cols);
        MapRM O(out->value.data(), rows, w);
        O = X.middleCols(begin, w);
    }
    Node* xn = x.node().get();
    Node* on = out.get();
    return finish(out, {x.node()}, [xn, on, begin, rows, cols, w] {
        xn->ensureGrad();
        MapRM dX(xn->grad.data(), rows, cols);
        CMapRM dO(on->grad.data(), rows, w);
        dX.middleCols(begin, w) += dO;
    });
}

Tensor concatColsMany(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw NumericalError("concatColsMany: no parts");
    const int rows = parts[0].dim(0);
    int cols = 0;
    for (const auto& p : parts) {
        if (p.dim(0) != rows) throw NumericalError("concatColsMany: row counts differ");
        cols += p.dim(1);
    }
    auto out = makeNode({rows, cols});
    std::vector<std::shared_ptr<Node>> parents;
    {
        MapRM O(out->value.data(), rows, cols);
        int at = 0;
        for (const auto& p : parts) {
            CMapRM P(p.value().data(), rows, p.dim(1));
            O.middleCols(at, p.dim(1)) = P;
            at += p.dim(1);
            parents.push_back(p.node());
        }
    }
    Node* on = out.get();
    auto parentsCopy = parents;
    return finish(out, std::move(parents), [on, parentsCopy, rows, cols] {
        CMapRM dO(on->grad.data(), rows, cols);
        int at = 0;
        for (const auto& pn : parentsCopy) {
            const int w = pn->shape[1];
            if (pn->requiresGrad) {
                pn->ensureGrad();
                MapRM dP(pn->grad.data(), rows, w);
                dP += dO.middleCols(at, w);
            }
            at += w;
        }
    });
}

double gradCheck(const std::function<Tensor()>& f, Tensor x, int probes, Rng& rng, double h) {
    x.zeroGrad();
    Tensor loss = f();
    loss.backward();
    Eigen::ArrayXd analytic = x.grad();

    double worst = 0.0;
    for (int i = 0; i < probes; ++i) {
        const Eigen::Index idx = Eigen::Index(rng.below(uint64_t(x.numel())));
        const double orig = x.value()[idx];
        x.value()[idx] = orig + h;
        const double up = f().item();
        x.value()[idx] = orig - h;
        const double dn = f().item();
        x.value()[idx] = orig;
        const double fd = (up - dn) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(analytic[idx]), 1e-8});
        worst = std::max(worst, std::abs(fd - analytic[idx]) / denom);
    }
    return worst;
}

}  // namespace dlt::nn
