#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tce/error.hpp"

namespace tce {

using Shape = std::vector<int64_t>;
using Strides = std::vector<int64_t>;

int64_t numel(const Shape& shape);

/// Row-major strides: strides[k] = product of shape[k+1..], last stride 1.
Strides default_strides(const Shape& shape);

/// Address of a coordinate under an affine view: offset + dot(strides, coord).
int64_t linear_offset(const Strides& strides, int64_t offset,
                      std::span<const int64_t> coord);

/// Dense float32 tensor. Layout is a tag: an Nc4hw4 tensor stores the packed
/// 5-d shape (N, ceil(C/4), H, W, 4) and its buffer length is the product of
/// that shape, pad channels included.
class Tensor {
public:
    enum class Layout { RowMajor, Nc4hw4 };

    Tensor() = default;
    explicit Tensor(Shape shape, Layout layout = Layout::RowMajor);

    static Tensor from_data(Shape shape, std::vector<float> data,
                            Layout layout = Layout::RowMajor);
    static Tensor full(const Shape& shape, float value);
    static Tensor scalar(float value); // shape {1}

    const Shape& shape() const { return shape_; }
    Layout layout() const { return layout_; }
    int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
    int64_t size() const { return static_cast<int64_t>(buf_.size()); }

    float* data() { return buf_.data(); }
    const float* data() const { return buf_.data(); }
    std::vector<float>& buffer() { return buf_; }
    const std::vector<float>& buffer() const { return buf_; }

    float at(std::span<const int64_t> coord) const;
    float& at(std::span<const int64_t> coord);
    float at(std::initializer_list<int64_t> coord) const {
        return at(std::span<const int64_t>(coord.begin(), coord.size()));
    }
    float& at(std::initializer_list<int64_t> coord) {
        return at(std::span<const int64_t>(coord.begin(), coord.size()));
    }

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_;
    Layout layout_ = Layout::RowMajor;
    std::vector<float> buf_;
};

/// Packs a plain (N,C,H,W) tensor into the channel-blocked 5-d layout
/// (N, ceil(C/4), H, W, 4); pad channels are zero.
Tensor nc4hw4_pack(const Tensor& t);

/// Inverse of nc4hw4_pack. The logical channel count must be supplied since
/// zero padding is indistinguishable from zero channels.
Tensor nc4hw4_unpack(const Tensor& packed, int64_t channels);

} // namespace tce
