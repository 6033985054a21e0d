#include "tce/tensor.hpp"

#include <numeric>

namespace tce {

namespace {

void check_shape(const Shape& shape) {
    if (shape.empty()) {
        throw Error(ErrorCode::InvalidShape, "shape must be non-empty");
    }
    for (int64_t d : shape) {
        if (d < 1) {
            throw Error(ErrorCode::InvalidShape, "shape dims must be >= 1");
        }
    }
}

} // namespace

int64_t numel(const Shape& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

Strides default_strides(const Shape& shape) {
    check_shape(shape);
    Strides s(shape.size());
    int64_t acc = 1;
    for (size_t i = shape.size(); i-- > 0;) {
        s[i] = acc;
        acc *= shape[i];
    }
    return s;
}

int64_t linear_offset(const Strides& strides, int64_t offset,
                      std::span<const int64_t> coord) {
    if (coord.size() != strides.size()) {
        throw Error(ErrorCode::InvalidCoordinate,
                    "coordinate rank does not match stride rank");
    }
    int64_t a = offset;
    for (size_t i = 0; i < strides.size(); ++i) {
        a += strides[i] * coord[i];
    }
    return a;
}

Tensor::Tensor(Shape shape, Layout layout) : shape_(std::move(shape)), layout_(layout) {
    check_shape(shape_);
    buf_.assign(static_cast<size_t>(numel(shape_)), 0.0f);
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data, Layout layout) {
    check_shape(shape);
    if (static_cast<int64_t>(data.size()) != numel(shape)) {
        throw Error(ErrorCode::InvalidShape,
                    "buffer length does not match shape");
    }
    Tensor t;
    t.shape_ = std::move(shape);
    t.layout_ = layout;
    t.buf_ = std::move(data);
    return t;
}

Tensor Tensor::full(const Shape& shape, float value) {
    Tensor t(shape);
    for (auto& v : t.buf_) v = value;
    return t;
}

Tensor Tensor::scalar(float value) { return full({1}, value); }

float Tensor::at(std::span<const int64_t> coord) const {
    auto idx = linear_offset(default_strides(shape_), 0, coord);
    return buf_[static_cast<size_t>(idx)];
}

float& Tensor::at(std::span<const int64_t> coord) {
    auto idx = linear_offset(default_strides(shape_), 0, coord);
    return buf_[static_cast<size_t>(idx)];
}

Tensor nc4hw4_pack(const Tensor& t) {
    if (t.rank() != 4 || t.layout() != Tensor::Layout::RowMajor) {
        throw Error(ErrorCode::InvalidShape, "nc4hw4_pack expects a plain rank-4 tensor");
    }
    const auto& s = t.shape();
    int64_t n = s[0], c = s[1], h = s[2], w = s[3];
    int64_t cb = (c + 3) / 4;
    Tensor packed(Shape{n, cb, h, w, 4}, Tensor::Layout::Nc4hw4);
    const float* src = t.data();
    float* dst = packed.data();
    for (int64_t in = 0; in < n; ++in) {
        for (int64_t ic = 0; ic < c; ++ic) {
            for (int64_t ih = 0; ih < h; ++ih) {
                for (int64_t iw = 0; iw < w; ++iw) {
                    int64_t from = ((in * c + ic) * h + ih) * w + iw;
                    int64_t to = ((((in * cb + ic / 4) * h + ih) * w + iw) * 4) + ic % 4;
                    dst[to] = src[from];
                }
            }
        }
    }
    return packed;
}

Tensor nc4hw4_unpack(const Tensor& packed, int64_t channels) {
    const auto& s = packed.shape();
    if (packed.layout() != Tensor::Layout::Nc4hw4 || packed.rank() != 5 || s[4] != 4) {
        throw Error(ErrorCode::InvalidShape, "nc4hw4_unpack expects a packed 5-d tensor");
    }
    int64_t n = s[0], cb = s[1], h = s[2], w = s[3];
    if (channels < 1 || channels > cb * 4 || (cb - 1) * 4 >= channels) {
        throw Error(ErrorCode::InvalidShape,
                    "channel count inconsistent with packed block count");
    }
    Tensor plain(Shape{n, channels, h, w});
    const float* src = packed.data();
    float* dst = plain.data();
    for (int64_t in = 0; in < n; ++in) {
        for (int64_t ic = 0; ic < channels; ++ic) {
            for (int64_t ih = 0; ih < h; ++ih) {
                for (int64_t iw = 0; iw < w; ++iw) {
                    int64_t from = ((((in * cb + ic / 4) * h + ih) * w + iw) * 4) + ic % 4;
                    int64_t to = ((in * channels + ic) * h + ih) * w + iw;
                    dst[to] = src[from];
                }
            }
        }
    }
    return plain;
}

} // namespace tce
