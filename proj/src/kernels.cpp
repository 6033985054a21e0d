#include "tce/kernels.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace tce {

bool ew_is_unary(EwOp op) {
    switch (op) {
        case EwOp::Neg:
        case EwOp::Square:
        case EwOp::Sqrt:
        case EwOp::Exp:
        case EwOp::Sigmoid:
        case EwOp::Tanh:
        case EwOp::Relu:
            return true;
        default:
            return false;
    }
}

EwOp ew_from_kind(std::string_view kind) {
    if (kind == "neg") return EwOp::Neg;
    if (kind == "square") return EwOp::Square;
    if (kind == "sqrt") return EwOp::Sqrt;
    if (kind == "exp") return EwOp::Exp;
    if (kind == "sigmoid") return EwOp::Sigmoid;
    if (kind == "tanh") return EwOp::Tanh;
    if (kind == "relu") return EwOp::Relu;
    if (kind == "add") return EwOp::Add;
    if (kind == "sub") return EwOp::Sub;
    if (kind == "mul") return EwOp::Mul;
    if (kind == "div") return EwOp::Div;
    if (kind == "max") return EwOp::Max;
    throw Error(ErrorCode::UnsupportedOp, "not an elementwise kind: " + std::string(kind));
}

Tensor elementwise(EwOp op, const Tensor& a) {
    if (!ew_is_unary(op)) {
        throw Error(ErrorCode::ShapeMismatch, "binary elementwise op given one input");
    }
    Tensor out(a.shape());
    const float* x = a.data();
    float* y = out.data();
    const int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) {
        switch (op) {
            case EwOp::Neg: y[i] = -x[i]; break;
            case EwOp::Square: y[i] = x[i] * x[i]; break;
            case EwOp::Sqrt: y[i] = std::sqrt(x[i]); break;
            case EwOp::Exp: y[i] = std::exp(x[i]); break;
            case EwOp::Sigmoid: y[i] = 1.0f / (1.0f + std::exp(-x[i])); break;
            case EwOp::Tanh: y[i] = std::tanh(x[i]); break;
            case EwOp::Relu: y[i] = x[i] > 0.0f ? x[i] : 0.0f; break;
            default: break;
        }
    }
    return out;
}

Tensor elementwise(EwOp op, const Tensor& a, const Tensor& b) {
    if (ew_is_unary(op)) {
        throw Error(ErrorCode::ShapeMismatch, "unary elementwise op given two inputs");
    }
    if (a.shape() != b.shape()) {
        throw Error(ErrorCode::ShapeMismatch, "elementwise inputs must have equal shapes");
    }
    Tensor out(a.shape());
    const float* x = a.data();
    const float* z = b.data();
    float* y = out.data();
    const int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) {
        switch (op) {
            case EwOp::Add: y[i] = x[i] + z[i]; break;
            case EwOp::Sub: y[i] = x[i] - z[i]; break;
            case EwOp::Mul: y[i] = x[i] * z[i]; break;
            case EwOp::Div: y[i] = x[i] / z[i]; break; // IEEE inf/nan on zero
            case EwOp::Max: y[i] = x[i] > z[i] ? x[i] : z[i]; break;
            default: break;
        }
    }
    return out;
}

Tensor reduce_sum(const Tensor& t, int64_t axis) {
    const Shape& s = t.shape();
    if (axis < 0 || axis >= t.rank()) {
        throw Error(ErrorCode::AxisOutOfRange, "reduce_sum axis out of range");
    }
    Shape out_shape;
    for (size_t i = 0; i < s.size(); ++i) {
        if (i != static_cast<size_t>(axis)) out_shape.push_back(s[i]);
    }
    if (out_shape.empty()) out_shape = {1};

    int64_t outer = 1, inner = 1;
    for (int64_t i = 0; i < axis; ++i) outer *= s[static_cast<size_t>(i)];
    for (int64_t i = axis + 1; i < t.rank(); ++i) inner *= s[static_cast<size_t>(i)];
    const int64_t n = s[static_cast<size_t>(axis)];

    Tensor out(out_shape);
    const float* x = t.data();
    float* y = out.data();
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t i = 0; i < inner; ++i) {
            float acc = 0.0f;
            for (int64_t k = 0; k < n; ++k) {
                acc += x[(o * n + k) * inner + i];
            }
            y[o * inner + i] = acc;
        }
    }
    return out;
}

AlgorithmVariant AlgorithmVariant::direct() { return {}; }

AlgorithmVariant AlgorithmVariant::tiled(int64_t t_e, int64_t t_b) {
    AlgorithmVariant v;
    v.kind = Kind::Tiled;
    v.tile_e = t_e;
    v.tile_b = t_b;
    return v;
}

AlgorithmVariant AlgorithmVariant::strassen(int64_t cutoff) {
    AlgorithmVariant v;
    v.kind = Kind::Strassen;
    v.cutoff = cutoff;
    return v;
}

AlgorithmVariant AlgorithmVariant::winograd(int64_t m) {
    AlgorithmVariant v;
    v.kind = Kind::Winograd;
    v.wino_m = m;
    return v;
}

std::string AlgorithmVariant::to_string() const {
    switch (kind) {
        case Kind::Direct: return "direct";
        case Kind::Tiled:
            return "tiled(" + std::to_string(tile_e) + "," + std::to_string(tile_b) + ")";
        case Kind::Strassen: return "strassen(" + std::to_string(cutoff) + ")";
        case Kind::Winograd: return "winograd(F" + std::to_string(wino_m) + ")";
    }
    return "?";
}

namespace {

void check_variant(const AlgorithmVariant& v) {
    switch (v.kind) {
        case AlgorithmVariant::Kind::Direct:
            return;
        case AlgorithmVariant::Kind::Tiled:
            if (v.tile_e < 1 || v.tile_b < 1) {
                throw Error(ErrorCode::UnsupportedVariant, "tile sizes must be >= 1");
            }
            return;
        case AlgorithmVariant::Kind::Strassen:
            if (v.cutoff < 1 || !std::has_single_bit(static_cast<uint64_t>(v.cutoff))) {
                throw Error(ErrorCode::UnsupportedVariant,
                            "strassen cutoff must be a positive power of two");
            }
            return;
        case AlgorithmVariant::Kind::Winograd:
            if (v.wino_m != 2 && v.wino_m != 6) {
                throw Error(ErrorCode::UnsupportedVariant, "winograd tile must be 2 or 6");
            }
            return;
    }
}

void check_matmul_shapes(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
        throw Error(ErrorCode::ShapeMismatch, "matmul inner dims disagree");
    }
}

void mm_direct(const float* a, const float* b, float* c, int64_t m, int64_t e, int64_t n,
               KernelCounter* counter) {
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) {
            float acc = 0.0f;
            for (int64_t k = 0; k < e; ++k) {
                acc += a[i * e + k] * b[k * n + j];
            }
            c[i * n + j] = acc;
        }
    }
    if (counter) counter->mults += static_cast<uint64_t>(m) * e * n;
}

// Same multiply-accumulate order per output element as mm_direct (ascending
// k), so the tiled kernel is bitwise identical to the direct one.
void mm_tiled(const float* a, const float* b, float* c, int64_t m, int64_t e, int64_t n,
              int64_t t_e, int64_t t_b, KernelCounter* counter) {
    std::memset(c, 0, sizeof(float) * static_cast<size_t>(m * n));
    std::vector<float> acc(static_cast<size_t>(t_b));
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t j0 = 0; j0 < n; j0 += t_b) {
            const int64_t jl = std::min(t_b, n - j0);
            for (int64_t j = 0; j < jl; ++j) acc[static_cast<size_t>(j)] = 0.0f;
            for (int64_t k0 = 0; k0 < e; k0 += t_e) {
                const int64_t kl = std::min(t_e, e - k0);
                for (int64_t j = 0; j < jl; ++j) {
                    float r = acc[static_cast<size_t>(j)];
                    for (int64_t k = k0; k < k0 + kl; ++k) {
                        r += a[i * e + k] * b[k * n + j0 + j];
                    }
                    acc[static_cast<size_t>(j)] = r;
                }
            }
            for (int64_t j = 0; j < jl; ++j) c[i * n + j0 + j] = acc[static_cast<size_t>(j)];
        }
    }
    if (counter) counter->mults += static_cast<uint64_t>(m) * e * n;
}

struct Mat {
    int64_t rows = 0;
    int64_t cols = 0;
    std::vector<float> v;

    Mat() = default;
    Mat(int64_t r, int64_t c) : rows(r), cols(c), v(static_cast<size_t>(r * c), 0.0f) {}
    float& operator()(int64_t r, int64_t c) { return v[static_cast<size_t>(r * cols + c)]; }
    float operator()(int64_t r, int64_t c) const { return v[static_cast<size_t>(r * cols + c)]; }
};

Mat mat_add(const Mat& a, const Mat& b) {
    Mat r(a.rows, a.cols);
    for (size_t i = 0; i < r.v.size(); ++i) r.v[i] = a.v[i] + b.v[i];
    return r;
}

Mat mat_sub(const Mat& a, const Mat& b) {
    Mat r(a.rows, a.cols);
    for (size_t i = 0; i < r.v.size(); ++i) r.v[i] = a.v[i] - b.v[i];
    return r;
}

Mat quadrant(const Mat& m, int64_t r0, int64_t c0, int64_t rows, int64_t cols) {
    Mat q(rows, cols);
    for (int64_t r = 0; r < rows; ++r) {
        for (int64_t c = 0; c < cols; ++c) {
            if (r0 + r < m.rows && c0 + c < m.cols) q(r, c) = m(r0 + r, c0 + c);
        }
    }
    return q;
}

Mat strassen_rec(const Mat& a, const Mat& b, int64_t cutoff, KernelCounter* counter) {
    const int64_t m = a.rows, e = a.cols, n = b.cols;
    if (m <= cutoff && e <= cutoff && n <= cutoff) {
        Mat c(m, n);
        mm_direct(a.v.data(), b.v.data(), c.v.data(), m, e, n, counter);
        return c;
    }
    // Zero-extend odd dims to even, split into quadrants, seven products.
    const int64_t m2 = (m + 1) / 2, e2 = (e + 1) / 2, n2 = (n + 1) / 2;
    Mat a11 = quadrant(a, 0, 0, m2, e2), a12 = quadrant(a, 0, e2, m2, e2);
    Mat a21 = quadrant(a, m2, 0, m2, e2), a22 = quadrant(a, m2, e2, m2, e2);
    Mat b11 = quadrant(b, 0, 0, e2, n2), b12 = quadrant(b, 0, n2, e2, n2);
    Mat b21 = quadrant(b, e2, 0, e2, n2), b22 = quadrant(b, e2, n2, e2, n2);

    Mat p1 = strassen_rec(mat_add(a11, a22), mat_add(b11, b22), cutoff, counter);
    Mat p2 = strassen_rec(mat_add(a21, a22), b11, cutoff, counter);
    Mat p3 = strassen_rec(a11, mat_sub(b12, b22), cutoff, counter);
    Mat p4 = strassen_rec(a22, mat_sub(b21, b11), cutoff, counter);
    Mat p5 = strassen_rec(mat_add(a11, a12), b22, cutoff, counter);
    Mat p6 = strassen_rec(mat_sub(a21, a11), mat_add(b11, b12), cutoff, counter);
    Mat p7 = strassen_rec(mat_sub(a12, a22), mat_add(b21, b22), cutoff, counter);

    Mat c11 = mat_add(mat_sub(mat_add(p1, p4), p5), p7);
    Mat c12 = mat_add(p3, p5);
    Mat c21 = mat_add(p2, p4);
    Mat c22 = mat_add(mat_add(mat_sub(p1, p2), p3), p6);

    Mat c(m, n);
    for (int64_t r = 0; r < m; ++r) {
        for (int64_t col = 0; col < n; ++col) {
            const Mat& q = r < m2 ? (col < n2 ? c11 : c12) : (col < n2 ? c21 : c22);
            c(r, col) = q(r < m2 ? r : r - m2, col < n2 ? col : col - n2);
        }
    }
    return c;
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b, const AlgorithmVariant& variant,
              KernelCounter* counter) {
    check_variant(variant);
    check_matmul_shapes(a, b);
    if (variant.kind == AlgorithmVariant::Kind::Winograd) {
        throw Error(ErrorCode::UnsupportedVariant, "winograd does not apply to matmul");
    }
    const int64_t m = a.shape()[0], e = a.shape()[1], n = b.shape()[1];
    Tensor out(Shape{m, n});
    switch (variant.kind) {
        case AlgorithmVariant::Kind::Direct:
            mm_direct(a.data(), b.data(), out.data(), m, e, n, counter);
            break;
        case AlgorithmVariant::Kind::Tiled:
            mm_tiled(a.data(), b.data(), out.data(), m, e, n, variant.tile_e, variant.tile_b,
                     counter);
            break;
        case AlgorithmVariant::Kind::Strassen: {
            Mat ma(m, e), mb(e, n);
            ma.v.assign(a.data(), a.data() + a.size());
            mb.v.assign(b.data(), b.data() + b.size());
            Mat mc = strassen_rec(ma, mb, variant.cutoff, counter);
            std::copy(mc.v.begin(), mc.v.end(), out.data());
            break;
        }
        default:
            break;
    }
    return out;
}

namespace {

void check_conv_shapes(const Tensor& input, const Tensor& weight, int64_t stride,
                       int64_t pad) {
    if (input.rank() != 4 || weight.rank() != 4 ||
        input.shape()[1] != weight.shape()[1] || stride < 1 || pad < 0) {
        throw Error(ErrorCode::ShapeMismatch, "conv2d shape mismatch");
    }
    int64_t hn = input.shape()[2] + 2 * pad - weight.shape()[2];
    int64_t wn = input.shape()[3] + 2 * pad - weight.shape()[3];
    if (hn < 0 || wn < 0 || hn % stride != 0 || wn % stride != 0) {
        throw Error(ErrorCode::ShapeMismatch, "conv2d geometry invalid");
    }
}

Tensor conv_direct(const Tensor& input, const Tensor& weight, int64_t stride, int64_t pad,
                   KernelCounter* counter) {
    const auto& xs = input.shape();
    const auto& ws = weight.shape();
    const int64_t n = xs[0], c = xs[1], h = xs[2], w = xs[3];
    const int64_t o = ws[0], kh = ws[2], kw = ws[3];
    const int64_t ho = (h + 2 * pad - kh) / stride + 1;
    const int64_t wo = (w + 2 * pad - kw) / stride + 1;
    Tensor out(Shape{n, o, ho, wo});
    const float* x = input.data();
    const float* wt = weight.data();
    float* y = out.data();
    for (int64_t in = 0; in < n; ++in) {
        for (int64_t io = 0; io < o; ++io) {
            for (int64_t oy = 0; oy < ho; ++oy) {
                for (int64_t ox = 0; ox < wo; ++ox) {
                    float acc = 0.0f;
                    for (int64_t ic = 0; ic < c; ++ic) {
                        for (int64_t ky = 0; ky < kh; ++ky) {
                            const int64_t iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= h) continue;
                            for (int64_t kx = 0; kx < kw; ++kx) {
                                const int64_t ix = ox * stride - pad + kx;
                                if (ix < 0 || ix >= w) continue;
                                acc += x[((in * c + ic) * h + iy) * w + ix] *
                                       wt[((io * c + ic) * kh + ky) * kw + kx];
                            }
                        }
                    }
                    y[((in * o + io) * ho + oy) * wo + ox] = acc;
                }
            }
        }
    }
    if (counter) {
        counter->mults += static_cast<uint64_t>(n) * o * c * ho * wo * kh * kw;
    }
    return out;
}

// Cook-Toom transforms for F(2x2,3x3) and F(6x6,3x3); interpolation points
// 0, +-1 for the small tile and 0, +-1, +-2, +-1/2 for the large one.
struct WinoTables {
    int64_t alpha;
    const float* bt; // alpha x alpha
    const float* g;  // alpha x 3
    const float* at; // m x alpha
};

const float kBT4[16] = {
    1, 0, -1, 0,
    0, 1, 1, 0,
    0, -1, 1, 0,
    0, 1, 0, -1,
};
const float kG4[12] = {
    1, 0, 0,
    0.5f, 0.5f, 0.5f,
    0.5f, -0.5f, 0.5f,
    0, 0, 1,
};
const float kAT2[8] = {
    1, 1, 1, 0,
    0, 1, -1, -1,
};

const float kBT8[64] = {
    1, 0, -5.25f, 0, 5.25f, 0, -1, 0,
    0, 1, 1, -4.25f, -4.25f, 1, 1, 0,
    0, -1, 1, 4.25f, -4.25f, -1, 1, 0,
    0, 0.5f, 0.25f, -2.5f, -1.25f, 2, 1, 0,
    0, -0.5f, 0.25f, 2.5f, -1.25f, -2, 1, 0,
    0, 2, 4, -2.5f, -5, 0.5f, 1, 0,
    0, -2, 4, 2.5f, -5, -0.5f, 1, 0,
    0, -1, 0, 5.25f, 0, -5.25f, 0, 1,
};
const float kG8[24] = {
    1, 0, 0,
    -2.0f / 9, -2.0f / 9, -2.0f / 9,
    -2.0f / 9, 2.0f / 9, -2.0f / 9,
    1.0f / 90, 1.0f / 45, 2.0f / 45,
    1.0f / 90, -1.0f / 45, 2.0f / 45,
    32.0f / 45, 16.0f / 45, 8.0f / 45,
    32.0f / 45, -16.0f / 45, 8.0f / 45,
    0, 0, 1,
};
const float kAT6[48] = {
    1, 1, 1, 1, 1, 1, 1, 0,
    0, 1, -1, 2, -2, 0.5f, -0.5f, 0,
    0, 1, 1, 4, 4, 0.25f, 0.25f, 0,
    0, 1, -1, 8, -8, 0.125f, -0.125f, 0,
    0, 1, 1, 16, 16, 0.0625f, 0.0625f, 0,
    0, 1, -1, 32, -32, 0.03125f, -0.03125f, 1,
};

WinoTables wino_tables(int64_t m) {
    if (m == 2) return {4, kBT4, kG4, kAT2};
    return {8, kBT8, kG8, kAT6};
}

// out (ra x cb) = lhs (ra x n) * rhs (n x cb), plain float accumulation.
void small_mm(const float* lhs, const float* rhs, float* out, int64_t ra, int64_t n,
              int64_t cb) {
    for (int64_t i = 0; i < ra; ++i) {
        for (int64_t j = 0; j < cb; ++j) {
            float acc = 0.0f;
            for (int64_t k = 0; k < n; ++k) acc += lhs[i * n + k] * rhs[k * cb + j];
            out[i * cb + j] = acc;
        }
    }
}

Tensor conv_winograd(const Tensor& input, const Tensor& weight, int64_t stride,
                     int64_t pad, int64_t m, KernelCounter* counter) {
    const auto& ws = weight.shape();
    if (ws[2] != 3 || ws[3] != 3 || stride != 1) {
        throw Error(ErrorCode::UnsupportedVariant,
                    "winograd needs a 3x3 kernel and stride 1");
    }
    const auto tbl = wino_tables(m);
    const int64_t alpha = tbl.alpha;
    const auto& xs = input.shape();
    const int64_t n = xs[0], c = xs[1], h = xs[2], w = xs[3];
    const int64_t o = ws[0];
    const int64_t ho = h + 2 * pad - 2;
    const int64_t wo = w + 2 * pad - 2;
    const int64_t th = (ho + m - 1) / m;
    const int64_t tw = (wo + m - 1) / m;

    // Filter transform: U[o][c] = G g G^T.
    std::vector<float> u(static_cast<size_t>(o * c * alpha * alpha));
    {
        std::vector<float> tmp(static_cast<size_t>(alpha * 3));
        std::vector<float> gt(static_cast<size_t>(3 * alpha));
        for (int64_t r = 0; r < alpha; ++r) {
            for (int64_t col = 0; col < 3; ++col) gt[col * alpha + r] = tbl.g[r * 3 + col];
        }
        for (int64_t io = 0; io < o; ++io) {
            for (int64_t ic = 0; ic < c; ++ic) {
                const float* g0 = weight.data() + ((io * c + ic) * 9);
                small_mm(tbl.g, g0, tmp.data(), alpha, 3, 3);
                small_mm(tmp.data(), gt.data(), u.data() + (io * c + ic) * alpha * alpha,
                         alpha, 3, alpha);
            }
        }
    }

    std::vector<float> bt_t(static_cast<size_t>(alpha * alpha));
    for (int64_t r = 0; r < alpha; ++r) {
        for (int64_t col = 0; col < alpha; ++col) bt_t[col * alpha + r] = tbl.bt[r * alpha + col];
    }
    std::vector<float> at_t(static_cast<size_t>(alpha * m));
    for (int64_t r = 0; r < m; ++r) {
        for (int64_t col = 0; col < alpha; ++col) at_t[col * m + r] = tbl.at[r * alpha + col];
    }

    Tensor out(Shape{n, o, ho, wo});
    std::vector<float> d(static_cast<size_t>(alpha * alpha));
    std::vector<float> tmp(static_cast<size_t>(alpha * alpha));
    std::vector<float> v(static_cast<size_t>(c * alpha * alpha));
    std::vector<float> acc(static_cast<size_t>(alpha * alpha));
    std::vector<float> ytile(static_cast<size_t>(m * alpha));
    std::vector<float> yout(static_cast<size_t>(m * m));

    for (int64_t in = 0; in < n; ++in) {
        for (int64_t ty = 0; ty < th; ++ty) {
            for (int64_t tx = 0; tx < tw; ++tx) {
                // Input transform per channel: V = B^T d B.
                for (int64_t ic = 0; ic < c; ++ic) {
                    for (int64_t r = 0; r < alpha; ++r) {
                        for (int64_t col = 0; col < alpha; ++col) {
                            const int64_t iy = ty * m - pad + r;
                            const int64_t ix = tx * m - pad + col;
                            d[static_cast<size_t>(r * alpha + col)] =
                                (iy < 0 || iy >= h || ix < 0 || ix >= w)
                                    ? 0.0f
                                    : input.data()[((in * c + ic) * h + iy) * w + ix];
                        }
                    }
                    small_mm(tbl.bt, d.data(), tmp.data(), alpha, alpha, alpha);
                    small_mm(tmp.data(), bt_t.data(), v.data() + ic * alpha * alpha, alpha,
                             alpha, alpha);
                }
                for (int64_t io = 0; io < o; ++io) {
                    std::fill(acc.begin(), acc.end(), 0.0f);
                    for (int64_t ic = 0; ic < c; ++ic) {
                        const float* uoc = u.data() + (io * c + ic) * alpha * alpha;
                        const float* vc = v.data() + ic * alpha * alpha;
                        for (int64_t i = 0; i < alpha * alpha; ++i) {
                            acc[static_cast<size_t>(i)] += uoc[i] * vc[i];
                        }
                    }
                    if (counter) {
                        counter->mults += static_cast<uint64_t>(c) * alpha * alpha;
                    }
                    small_mm(tbl.at, acc.data(), ytile.data(), m, alpha, alpha);
                    small_mm(ytile.data(), at_t.data(), yout.data(), m, alpha, m);
                    for (int64_t r = 0; r < m; ++r) {
                        const int64_t oy = ty * m + r;
                        if (oy >= ho) break;
                        for (int64_t col = 0; col < m; ++col) {
                            const int64_t ox = tx * m + col;
                            if (ox >= wo) break;
                            out.data()[((in * o + io) * ho + oy) * wo + ox] =
                                yout[static_cast<size_t>(r * m + col)];
                        }
                    }
                }
            }
        }
    }
    return out;
}

} // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, int64_t stride, int64_t pad,
              const AlgorithmVariant& variant, KernelCounter* counter) {
    check_variant(variant);
    check_conv_shapes(input, weight, stride, pad);
    switch (variant.kind) {
        case AlgorithmVariant::Kind::Direct:
            return conv_direct(input, weight, stride, pad, counter);
        case AlgorithmVariant::Kind::Winograd:
            return conv_winograd(input, weight, stride, pad, variant.wino_m, counter);
        default:
            throw Error(ErrorCode::UnsupportedVariant,
                        "conv2d supports direct and winograd variants");
    }
}

uint64_t q_matmul(int64_t a, int64_t e, int64_t b, const AlgorithmVariant& variant) {
    check_variant(variant);
    if (a < 1 || e < 1 || b < 1) {
        throw Error(ErrorCode::ShapeMismatch, "matmul sizes must be >= 1");
    }
    switch (variant.kind) {
        case AlgorithmVariant::Kind::Direct:
        case AlgorithmVariant::Kind::Tiled:
            return static_cast<uint64_t>(a) * e * b;
        case AlgorithmVariant::Kind::Strassen: {
            if (a <= variant.cutoff && e <= variant.cutoff && b <= variant.cutoff) {
                return static_cast<uint64_t>(a) * e * b;
            }
            // Mirrors the kernel: zero-extend odd dims, recurse on halves.
            return 7 * q_matmul((a + 1) / 2, (e + 1) / 2, (b + 1) / 2, variant);
        }
        case AlgorithmVariant::Kind::Winograd:
            throw Error(ErrorCode::UnsupportedVariant, "winograd does not apply to matmul");
    }
    return 0;
}

uint64_t q_conv2d(int64_t n, int64_t c, int64_t h, int64_t w, int64_t o, int64_t kh,
                  int64_t kw, int64_t stride, int64_t pad,
                  const AlgorithmVariant& variant) {
    check_variant(variant);
    if (n < 1 || c < 1 || h < 1 || w < 1 || o < 1 || kh < 1 || kw < 1 || stride < 1 ||
        pad < 0) {
        throw Error(ErrorCode::ShapeMismatch, "conv2d sizes invalid");
    }
    const int64_t hn = h + 2 * pad - kh;
    const int64_t wn = w + 2 * pad - kw;
    if (hn < 0 || wn < 0 || hn % stride != 0 || wn % stride != 0) {
        throw Error(ErrorCode::ShapeMismatch, "conv2d geometry invalid");
    }
    const int64_t ho = hn / stride + 1;
    const int64_t wo = wn / stride + 1;
    switch (variant.kind) {
        case AlgorithmVariant::Kind::Direct:
        case AlgorithmVariant::Kind::Tiled:
            return static_cast<uint64_t>(n) * o * c * ho * wo * kh * kw;
        case AlgorithmVariant::Kind::Winograd: {
            if (kh != 3 || kw != 3 || stride != 1) {
                throw Error(ErrorCode::UnsupportedVariant,
                            "winograd needs a 3x3 kernel and stride 1");
            }
            const int64_t m = variant.wino_m;
            const int64_t alpha = m + 2;
            const int64_t tiles = ((ho + m - 1) / m) * ((wo + m - 1) / m);
            return static_cast<uint64_t>(n) * o * c * tiles * alpha * alpha;
        }
        case AlgorithmVariant::Kind::Strassen:
            throw Error(ErrorCode::UnsupportedVariant, "strassen does not apply to conv2d");
    }
    return 0;
}

} // namespace tce
