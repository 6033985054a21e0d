#include "tce/geometry.hpp"

#include <algorithm>
#include <numeric>

namespace tce {

namespace {

void check_region(const Region& r) {
    if (r.range.empty()) {
        throw Error(ErrorCode::InvalidShape, "region range must be non-empty");
    }
    for (int64_t d : r.range) {
        if (d < 1) throw Error(ErrorCode::InvalidShape, "region range dims must be >= 1");
    }
    if (r.src_view.strides.size() != r.range.size() ||
        r.dst_view.strides.size() != r.range.size()) {
        throw Error(ErrorCode::InvalidCoordinate,
                    "view stride rank does not match region range rank");
    }
}

bool is_permutation(const std::vector<int64_t>& perm, size_t rank) {
    if (perm.size() != rank) return false;
    std::vector<bool> seen(rank, false);
    for (int64_t p : perm) {
        if (p < 0 || p >= static_cast<int64_t>(rank) || seen[static_cast<size_t>(p)]) return false;
        seen[static_cast<size_t>(p)] = true;
    }
    return true;
}

} // namespace

Tensor raster_execute(const RasterOp& op, const std::vector<const Tensor*>& sources,
                      bool check_overlap) {
    Tensor out(op.out_shape);
    const int64_t out_size = out.size();
    std::vector<uint8_t> written;
    if (check_overlap) written.assign(static_cast<size_t>(out_size), 0);

    for (const Region& r : op.regions) {
        check_region(r);
        if (r.src < 0 || r.src >= static_cast<int64_t>(sources.size())) {
            throw Error(ErrorCode::RegionBounds, "region source index out of range");
        }
        const Tensor& src = *sources[static_cast<size_t>(r.src)];
        if (src.layout() != Tensor::Layout::RowMajor) {
            throw Error(ErrorCode::InvalidShape,
                        "raster sources must be plain row-major; unpack first");
        }
        const int64_t src_size = src.size();
        for_each_coord(r.range, [&](std::span<const int64_t> coord) {
            int64_t s = linear_offset(r.src_view.strides, r.src_view.offset, coord);
            int64_t d = linear_offset(r.dst_view.strides, r.dst_view.offset, coord);
            if (s < 0 || s >= src_size || d < 0 || d >= out_size) {
                throw Error(ErrorCode::RegionBounds, "region maps outside buffer bounds");
            }
            if (check_overlap) {
                if (written[static_cast<size_t>(d)]) {
                    throw Error(ErrorCode::OverlappingWrite,
                                "two region writes hit the same destination slot");
                }
                written[static_cast<size_t>(d)] = 1;
            }
            out.data()[d] = src.data()[s];
        });
    }
    return out;
}

Tensor raster_execute(const RasterOp& op, const std::vector<Tensor>& sources,
                      bool check_overlap) {
    std::vector<const Tensor*> ptrs;
    ptrs.reserve(sources.size());
    for (const Tensor& t : sources) ptrs.push_back(&t);
    return raster_execute(op, ptrs, check_overlap);
}

RasterOp decompose_transpose(const Shape& in, const std::vector<int64_t>& perm) {
    if (in.size() != 2) {
        throw Error(ErrorCode::InvalidTransform, "transpose expects a rank-2 input");
    }
    return decompose_permute(in, perm);
}

RasterOp decompose_permute(const Shape& in, const std::vector<int64_t>& perm) {
    Strides in_strides = default_strides(in);
    if (!is_permutation(perm, in.size())) {
        throw Error(ErrorCode::InvalidTransform, "invalid axis permutation");
    }
    Shape out(in.size());
    Strides src_strides(in.size());
    for (size_t k = 0; k < in.size(); ++k) {
        out[k] = in[static_cast<size_t>(perm[k])];
        src_strides[k] = in_strides[static_cast<size_t>(perm[k])];
    }
    Region r;
    r.range = out;
    r.src_view = {0, src_strides};
    r.dst_view = {0, default_strides(out)};
    return RasterOp{{r}, out};
}

RasterOp decompose_slice(const Shape& in, const std::vector<int64_t>& begin,
                         const std::vector<int64_t>& size) {
    Strides in_strides = default_strides(in);
    if (begin.size() != in.size() || size.size() != in.size()) {
        throw Error(ErrorCode::InvalidTransform, "slice params must match input rank");
    }
    for (size_t k = 0; k < in.size(); ++k) {
        if (begin[k] < 0 || size[k] < 1 || begin[k] + size[k] > in[k]) {
            throw Error(ErrorCode::InvalidTransform, "slice window out of bounds");
        }
    }
    Region r;
    r.range = size;
    r.src_view.strides = in_strides;
    r.src_view.offset = 0;
    for (size_t k = 0; k < in.size(); ++k) r.src_view.offset += begin[k] * in_strides[k];
    r.dst_view = {0, default_strides(size)};
    return RasterOp{{r}, size};
}

RasterOp decompose_concat(const std::vector<Shape>& ins, int64_t axis) {
    if (ins.empty()) {
        throw Error(ErrorCode::InvalidTransform, "concat needs at least one input");
    }
    const size_t rank = ins[0].size();
    if (axis < 0 || axis >= static_cast<int64_t>(rank)) {
        throw Error(ErrorCode::InvalidTransform, "concat axis out of range");
    }
    Shape out = ins[0];
    for (size_t i = 1; i < ins.size(); ++i) {
        if (ins[i].size() != rank) {
            throw Error(ErrorCode::InvalidTransform, "concat inputs must share rank");
        }
        for (size_t k = 0; k < rank; ++k) {
            if (k != static_cast<size_t>(axis) && ins[i][k] != out[k]) {
                throw Error(ErrorCode::InvalidTransform,
                            "concat inputs must agree on non-axis dims");
            }
        }
        out[static_cast<size_t>(axis)] += ins[i][static_cast<size_t>(axis)];
    }

    RasterOp op;
    op.out_shape = out;
    Strides out_strides = default_strides(out);
    int64_t axis_pos = 0;
    for (size_t i = 0; i < ins.size(); ++i) {
        Region r;
        r.src = static_cast<int64_t>(i);
        r.range = ins[i];
        r.src_view = {0, default_strides(ins[i])};
        r.dst_view = {axis_pos * out_strides[static_cast<size_t>(axis)], out_strides};
        op.regions.push_back(std::move(r));
        axis_pos += ins[i][static_cast<size_t>(axis)];
    }
    return op;
}

RasterOp decompose_reshape(const Shape& in, const Shape& out) {
    if (numel(in) != numel(out)) {
        throw Error(ErrorCode::InvalidTransform, "reshape must preserve element count");
    }
    default_strides(out); // validates out dims
    // Inputs here are whole contiguous tensors, so the movement is the flat
    // identity over numel elements.
    Region r;
    r.range = {numel(in)};
    r.src_view = {0, {1}};
    r.dst_view = {0, {1}};
    return RasterOp{{r}, out};
}

std::optional<RasterOp> merge_vertical(const RasterOp& producer,
                                       const RasterOp& consumer) {
    if (producer.regions.size() != 1 || consumer.regions.size() != 1) return std::nullopt;
    const Region& p = producer.regions[0];
    const Region& c = consumer.regions[0];
    const int64_t p_numel = numel(producer.out_shape);
    if (numel(p.range) != p_numel) return std::nullopt;          // producer must cover its output
    if (numel(c.range) != numel(consumer.out_shape)) return std::nullopt;

    // Table from producer output address to producer source address. Bails
    // out unless the producer's destination map is a bijection onto the
    // output, which is what makes the inversion well defined.
    std::vector<int64_t> to_src(static_cast<size_t>(p_numel), -1);
    bool bijective = true;
    for_each_coord(p.range, [&](std::span<const int64_t> coord) {
        int64_t d = linear_offset(p.dst_view.strides, p.dst_view.offset, coord);
        if (d < 0 || d >= p_numel || to_src[static_cast<size_t>(d)] != -1) {
            bijective = false;
            return;
        }
        to_src[static_cast<size_t>(d)] =
            linear_offset(p.src_view.strides, p.src_view.offset, coord);
    });
    if (!bijective) return std::nullopt;

    // Fit an affine map for the composed movement and verify it at every
    // consumer coordinate; a single mismatch means the composition is not a
    // linear view and the merge is skipped.
    auto composed = [&](std::span<const int64_t> coord) -> std::optional<int64_t> {
        int64_t a = linear_offset(c.src_view.strides, c.src_view.offset, coord);
        if (a < 0 || a >= p_numel) return std::nullopt;
        return to_src[static_cast<size_t>(a)];
    };

    const size_t rank = c.range.size();
    std::vector<int64_t> zero(rank, 0);
    auto base = composed(zero);
    if (!base) return std::nullopt;

    Strides fitted(rank, 0);
    for (size_t k = 0; k < rank; ++k) {
        if (c.range[k] < 2) continue;
        std::vector<int64_t> unit(rank, 0);
        unit[k] = 1;
        auto v = composed(unit);
        if (!v) return std::nullopt;
        fitted[k] = *v - *base;
    }

    bool affine = true;
    for_each_coord(c.range, [&](std::span<const int64_t> coord) {
        if (!affine) return;
        auto actual = composed(coord);
        if (!actual || *actual != linear_offset(fitted, *base, coord)) affine = false;
    });
    if (!affine) return std::nullopt;

    Region merged;
    merged.src = p.src; // indexes the producer's source list
    merged.range = c.range;
    merged.src_view = {*base, fitted};
    merged.dst_view = c.dst_view;
    return RasterOp{{merged}, consumer.out_shape};
}

std::optional<RasterOp> merge_horizontal(const RasterOp& a, const RasterOp& b) {
    if (a.regions == b.regions && a.out_shape == b.out_shape) return a;
    return std::nullopt;
}

} // namespace tce
