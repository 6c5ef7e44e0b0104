#include "delight/nn/image_ops.hpp"

#include <cmath>

#include "delight/core/errors.hpp"

namespace dlt::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using CMapRM = Eigen::Map<const RowMat>;

std::shared_ptr<Node> makeNode(std::vector<int> shape) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    size_t count = 1;
    for (int d : n->shape) count *= size_t(d);
    n->value.resize(Eigen::Index(count));
    return n;
}

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

void check3d(const Tensor& t, const char* op) {
    if (t.ndim() != 3) throw NumericalError(std::string(op) + ": expected (C,H,W) tensor");
}

}  // namespace

Tensor imageToTensor(const Image& img) {
    Tensor t = Tensor::zeros({img.channels(), img.height(), img.width()});
    double* d = t.value().data();
    const size_t plane = size_t(img.height()) * img.width();
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c)
                d[c * plane + size_t(y) * img.width() + x] = img.at(y, x, c);
    return t;
}

Image tensorToImage(const Tensor& t) {
    if (t.ndim() != 3) throw NumericalError("tensorToImage: expected (C,H,W)");
    const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
    Image img(h, w, c);
    const double* d = t.value().data();
    const size_t plane = size_t(h) * w;
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                img.at(y, x, ch) = float(d[ch * plane + size_t(y) * w + x]);
    return img;
}

// Stride-1 same-size convolution, computed per kernel offset as a block
// matmul between the (outC,inC) weight slice and shifted image rows.
// Avoids materializing im2col buffers.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int kh, int kw) {
    check3d(x, "conv2d");
    const int inC = x.dim(0), H = x.dim(1), W = x.dim(2);
    if (weight.ndim() != 2 || weight.dim(1) != inC * kh * kw)
        throw NumericalError("conv2d: weight shape mismatch");
    const int outC = weight.dim(0);
    if (int(bias.numel()) != outC) throw NumericalError("conv2d: bias length mismatch");
    if (kh % 2 == 0 || kw % 2 == 0) throw NumericalError("conv2d: kernel must be odd");
    const int ph = kh / 2, pw = kw / 2;

    auto out = makeNode({outC, H, W});
    {
        MapRM Y(out->value.data(), outC, H * W);
        const auto b = Eigen::Map<const Eigen::VectorXd>(bias.value().data(), outC);
        Y.colwise() = b;
        CMapRM X(x.value().data(), inC, H * W);
        CMapRM Wm(weight.value().data(), outC, inC * kh * kw);
        for (int oy = 0; oy < kh; ++oy)
            for (int ox = 0; ox < kw; ++ox) {
                // weight slice for this offset: columns are strided by kh*kw
                RowMat Wk(outC, inC);
                for (int ci = 0; ci < inC; ++ci)
                    Wk.col(ci) = Wm.col(ci * kh * kw + oy * kw + ox);
                const int sy = oy - ph, sx = ox - pw;
                const int dy0 = std::max(0, -sy), dy1 = std::min(H, H - sy);
                const int dx0 = std::max(0, -sx), dx1 = std::min(W, W - sx);
                if (dy0 >= dy1 || dx0 >= dx1) continue;
                const int span = dx1 - dx0;
                for (int y = dy0; y < dy1; ++y)
                    Y.middleCols(y * W + dx0, span).noalias() +=
                        Wk * X.middleCols((y + sy) * W + dx0 + sx, span);
            }
    }

    Node* xn = x.node().get();
    Node* wn = weight.node().get();
    Node* bn = bias.node().get();
    Node* on = out.get();
    return finish(out, {x.node(), weight.node(), bias.node()},
                  [xn, wn, bn, on, inC, outC, H, W, kh, kw, ph, pw] {
        CMapRM dY(on->grad.data(), outC, H * W);
        CMapRM X(xn->value.data(), inC, H * W);
        CMapRM Wm(wn->value.data(), outC, inC * kh * kw);
        if (bn->requiresGrad) {
            bn->ensureGrad();
            Eigen::Map<Eigen::VectorXd> dB(bn->grad.data(), outC);
            dB += dY.rowwise().sum();
        }
        const bool needX = xn->requiresGrad, needW = wn->requiresGrad;
        if (needX) xn->ensureGrad();
        if (needW) wn->ensureGrad();
        for (int oy = 0; oy < kh; ++oy)
            for (int ox = 0; ox < kw; ++ox) {
                const int sy = oy - ph, sx = ox - pw;
                const int dy0 = std::max(0, -sy), dy1 = std::min(H, H - sy);
                const int dx0 = std::max(0, -sx), dx1 = std::min(W, W - sx);
                if (dy0 >= dy1 || dx0 >= dx1) continue;
                const int span = dx1 - dx0;

                RowMat Wk(outC, inC);
                for (int ci = 0; ci < inC; ++ci)
                    Wk.col(ci) = Wm.col(ci * kh * kw + oy * kw + ox);

                if (needX) {
                    MapRM dX(xn->grad.data(), inC, H * W);
                    for (int y = dy0; y < dy1; ++y)
                        dX.middleCols((y + sy) * W + dx0 + sx, span).noalias() +=
                            Wk.transpose() * dY.middleCols(y * W + dx0, span);
                }
                if (needW) {
                    RowMat dWk = RowMat::Zero(outC, inC);
                    for (int y = dy0; y < dy1; ++y)
                        dWk.noalias() += dY.middleCols(y * W + dx0, span) *
                                         X.middleCols((y + sy) * W + dx0 + sx, span).transpose();
                    MapRM dWm(wn->grad.data(), outC, inC * kh * kw);
                    for (int ci = 0; ci < inC; ++ci)
                        dWm.col(ci * kh * kw + oy * kw + ox) += dWk.col(ci);
                }
            }
    });
}

Tensor avgPool2x(const Tensor& x) {
    check3d(x, "avgPool2x");
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    if (H % 2 || W % 2) throw NumericalError("avgPool2x: odd spatial size");
    const int h = H / 2, w = W / 2;
    auto out = makeNode({C, h, w});
    const double* src = x.value().data();
    double* dst = out->value.data();
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                const size_t base = (size_t(c) * H + 2 * y) * W + 2 * xx;
                dst[(size_t(c) * h + y) * w + xx] =
                    0.25 * (src[base] + src[base + 1] + src[base + W] + src[base + W + 1]);
            }
    Node* xn = x.node().get();
    Node* on = out.get();
    return finish(out, {x.node()}, [xn, on, C, H, W, h, w] {
        xn->ensureGrad();
        const double* g = on->grad.data();
        double* dx = xn->grad.data();
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) {
                    const double v = 0.25 * g[(size_t(c) * h + y) * w + xx];
                    const size_t base = (size_t(c) * H + 2 * y) * W + 2 * xx;
                    dx[base] += v;
                    dx[base + 1] += v;
                    dx[base + W] += v;
                    dx[base + W + 1] += v;
                }
    });
}

Tensor upsample2xNearest(const Tensor& x) {
    check3d(x, "upsample2xNearest");
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    auto out = makeNode({C, 2 * H, 2 * W});
    const double* src = x.value().data();
    double* dst = out->value.data();
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < 2 * H; ++y)
            for (int xx = 0; xx < 2 * W; ++xx)
                dst[(size_t(c) * 2 * H + y) * 2 * W + xx] =
                    src[(size_t(c) * H + y / 2) * W + xx / 2];
    Node* xn = x.node().get();
    Node* on = out.get();
    return finish(out, {x.node()}, [xn, on, C, H, W] {
        xn->ensureGrad();
        const double* g = on->grad.data();
        double* dx = xn->grad.data();
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < 2 * H; ++y)
                for (int xx = 0; xx < 2 * W; ++xx)
                    dx[(size_t(c) * H + y / 2) * W + xx / 2] +=
                        g[(size_t(c) * 2 * H + y) * 2 * W + xx];
    });
}

Tensor concatChannels(const Tensor& a, const Tensor& b) {
    check3d(a, "concatChannels");
    check3d(b, "concatChannels");
    if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
        throw NumericalError("concatChannels: spatial sizes differ");
    const int ca = a.dim(0), cb = b.dim(0), H = a.dim(1), W = a.dim(2);
    auto out = makeNode({ca + cb, H, W});
    std::copy(a.value().data(), a.value().data() + a.numel(), out->value.data());
    std::copy(b.value().data(), b.value().data() + b.numel(), out->value.data() + a.numel());
    Node* an = a.node().get();
    Node* bn = b.node().get();
    Node* on = out.get();
    return finish(out, {a.node(), b.node()}, [an, bn, on, ca, cb, H, W] {
        const Eigen::Index na = Eigen::Index(ca) * H * W;
        const Eigen::Index nb = Eigen::Index(cb) * H * W;
        if (an->requiresGrad) { an->ensureGrad(); an->grad += on->grad.head(na); }
        if (bn->requiresGrad) { bn->ensureGrad(); bn->grad += on->grad.tail(nb); }
    });
}

Tensor patchify(const Tensor& x, int patch) {
    check3d(x, "patchify");
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    if (H % patch || W % patch) throw NumericalError("patchify: resolution not divisible by patch size");
    const int gh = H / patch, gw = W / patch;
    const int N = gh * gw, D = C * patch * patch;
    auto out = makeNode({N, D});
    const double* src = x.value().data();
    double* dst = out->value.data();
    for (int py = 0; py < gh; ++py)
        for (int px = 0; px < gw; ++px)
            for (int c = 0; c < C; ++c)
                for (int iy = 0; iy < patch; ++iy)
                    for (int ix = 0; ix < patch; ++ix)
                        dst[size_t(py * gw + px) * D + (c * patch + iy) * patch + ix] =
                            src[(size_t(c) * H + py * patch + iy) * W + px * patch + ix];
    Node* xn = x.node().get();
    Node* on = out.get();
    return finish(out, {x.node()}, [xn, on, C, H, W, patch, gh, gw] {
        xn->ensureGrad();
        const int D = C * patch * patch;
        const double* g = on->grad.data();
        double* dx = xn->grad.data();
        for (int py = 0; py < gh; ++py)
            for (int px = 0; px < gw; ++px)
                for (int c = 0; c < C; ++c)
                    for (int iy = 0; iy < patch; ++iy)
                        for (int ix = 0; ix < patch; ++ix)
                            dx[(size_t(c) * H + py * patch + iy) * W + px * patch + ix] +=
                                g[size_t(py * gw + px) * D + (c * patch + iy) * patch + ix];
    });
}

Tensor unpatchifyToGrid(const Tensor& tokens, int gridH, int gridW) {
    if (tokens.ndim() != 2) throw NumericalError("unpatchifyToGrid: expected (N,C)");
    const int N = tokens.dim(0), C = tokens.dim(1);
    if (N != gridH * gridW) throw NumericalError("unpatchifyToGrid: token count != grid size");
    auto out = makeNode({C, gridH, gridW});
    const double* src = tokens.value().data();
    double* dst = out->value.data();
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            dst[size_t(c) * N + n] = src[size_t(n) * C + c];
    Node* tn = tokens.node().get();
    Node* on = out.get();
    return finish(out, {tokens.node()}, [tn, on, N, C] {
        tn->ensureGrad();
        const double* g = on->grad.data();
        double* dt = tn->grad.data();
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) dt[size_t(n) * C + c] += g[size_t(c) * N + n];
    });
}

namespace {

// zero-padded separable pass along one axis
void blurAxis(const double* src, double* dst, int C, int H, int W,
              const std::vector<double>& k, bool horizontal) {
    const int r = int(k.size() / 2);
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i) {
                    const int sy = horizontal ? y : y + i;
                    const int sx = horizontal ? x + i : x;
                    if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
                    acc += k[i + r] * src[(size_t(c) * H + sy) * W + sx];
                }
                dst[(size_t(c) * H + y) * W + x] = acc;
            }
}

}  // namespace

Tensor separableBlurFixed(const Tensor& x, const std::vector<double>& kernel) {
    check3d(x, "separableBlurFixed");
    if (kernel.size() % 2 == 0) throw NumericalError("separableBlurFixed: kernel must be odd");
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    auto out = makeNode(x.shape());
    std::vector<double> tmp(x.numel());
    blurAxis(x.value().data(), tmp.data(), C, H, W, kernel, true);
    blurAxis(tmp.data(), out->value.data(), C, H, W, kernel, false);
    Node* xn = x.node().get();
    Node* on = out.get();
    return finish(out, {x.node()}, [xn, on, C, H, W, kernel] {
        // symmetric kernel + zero padding: the operator is self-adjoint
        xn->ensureGrad();
        std::vector<double> tmp(on->grad.size());
        std::vector<double> res(on->grad.size());
        blurAxis(on->grad.data(), tmp.data(), C, H, W, kernel, false);
        blurAxis(tmp.data(), res.data(), C, H, W, kernel, true);
        xn->grad += Eigen::Map<const Eigen::ArrayXd>(res.data(), Eigen::Index(res.size()));
    });
}

Tensor diffX(const Tensor& x) {
    check3d(x, "diffX");
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    if (W < 2) throw NumericalError("diffX: width too small");
    auto out = makeNode({C, H, W - 1});
    const double* src = x.value().data();
    double* dst = out->value.data();
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int xx = 0; xx + 1 < W; ++xx)
                dst[(size_t(c) * H + y) * (W - 1) + xx] =
                    src[(size_t(c) * H + y) * W + xx + 1] - src[(size_t(c) * H + y) * W + xx];
    Node* xn = x.node().get();
    Node* on = out.get();
    return finish(out, {x.node()}, [xn, on, C, H, W] {
        xn->ensureGrad();
        const double* g = on->grad.data();
        double* dx = xn->grad.data();
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < H; ++y)
                for (int xx = 0; xx + 1 < W; ++xx) {
                    const double v = g[(size_t(c) * H + y) * (W - 1) + xx];
                    dx[(size_t(c) * H + y) * W + xx + 1] += v;
                    dx[(size_t(c) * H + y) * W + xx] -= v;
                }
    });
}

Tensor diffY(const Tensor& x) {
    check3d(x, "diffY");
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    if (H < 2) throw NumericalError("diffY: height too small");
    auto out = makeNode({C, H - 1, W});
    const double* src = x.value().data();
    double* dst = out->value.data();
    for (int c = 0; c < C; ++c)
        for (int y = 0; y + 1 < H; ++y)
            for (int xx = 0; xx < W; ++xx)
                dst[(size_t(c) * (H - 1) + y) * W + xx] =
                    src[(size_t(c) * H + y + 1) * W + xx] - src[(size_t(c) * H + y) * W + xx];
    Node* xn = x.node().get();
    Node* on = out.get();
    return finish(out, {x.node()}, [xn, on, C, H, W] {
        xn->ensureGrad();
        const double* g = on->grad.data();
        double* dx = xn->grad.data();
        for (int c = 0; c < C; ++c)
            for (int y = 0; y + 1 < H; ++y)
                for (int xx = 0; xx < W; ++xx) {
                    const double v = g[(size_t(c) * (H - 1) + y) * W + xx];
                    dx[(size_t(c) * H + y + 1) * W + xx] += v;
                    dx[(size_t(c) * H + y) * W + xx] -= v;
                }
    });
}

std::vector<double> gaussianKernel1d(double sigma) {
    const int r = std::max(1, int(std::ceil(2.5 * sigma)));
    std::vector<double> k(size_t(2 * r + 1));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[size_t(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[size_t(i + r)];
    }
    for (auto& v : k) v /= sum;
    return k;
}

}  // namespace dlt::nn
