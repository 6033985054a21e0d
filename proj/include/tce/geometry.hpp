#pragma once

#include <optional>
#include <vector>

#include "tce/tensor.hpp"

namespace tce {

/// Affine map from a region coordinate to a buffer element index.
struct View {
    int64_t offset = 0;
    Strides strides;

    bool operator==(const View&) const = default;
};

/// One unit of raster work: iterate `range` and move source elements to
/// destination elements through the two views. `src` indexes the source list
/// the owning raster op is executed with.
struct Region {
    int64_t src = 0;
    Shape range;
    View src_view;
    View dst_view;

    bool operator==(const Region&) const = default;
};

struct RasterOp {
    std::vector<Region> regions;
    Shape out_shape;

    bool operator==(const RasterOp&) const = default;
};

/// Lexicographic iteration over a coordinate range.
template <typename F>
void for_each_coord(const Shape& range, F&& fn) {
    std::vector<int64_t> coord(range.size(), 0);
    for (;;) {
        fn(std::span<const int64_t>(coord.data(), coord.size()));
        size_t axis = range.size();
        while (axis-- > 0) {
            if (++coord[axis] < range[axis]) break;
            coord[axis] = 0;
            if (axis == 0) return;
        }
        if (range.empty()) return;
    }
}

/// Moves elements region by region into a zero-initialized tensor of
/// `out_shape`. Slots no region writes stay zero. With `check_overlap` set,
/// two writes to the same destination slot raise an error.
Tensor raster_execute(const RasterOp& op, const std::vector<const Tensor*>& sources,
                      bool check_overlap = false);
Tensor raster_execute(const RasterOp& op, const std::vector<Tensor>& sources,
                      bool check_overlap = false);

// Transform decompositions. Each returns a raster op whose execution equals
// the plain reference semantics of the transform.
RasterOp decompose_transpose(const Shape& in, const std::vector<int64_t>& perm);
RasterOp decompose_permute(const Shape& in, const std::vector<int64_t>& perm);
RasterOp decompose_slice(const Shape& in, const std::vector<int64_t>& begin,
                         const std::vector<int64_t>& size);
RasterOp decompose_concat(const std::vector<Shape>& ins, int64_t axis);
RasterOp decompose_reshape(const Shape& in, const Shape& out);

/// Fuses two successive raster ops so the consumer reads the producer's
/// source directly. Only the single-region, full-cover case is attempted:
/// the producer's destination map must be a bijection onto its output and
/// the composed coordinate-to-source map must come out affine, which is
/// verified exhaustively before the merge is returned. Anything else is a
/// no-merge (nullopt), never an error.
std::optional<RasterOp> merge_vertical(const RasterOp& producer,
                                       const RasterOp& consumer);

/// Two parallel raster ops with identical region lists collapse to one; the
/// caller rewires the second op's consumers.
std::optional<RasterOp> merge_horizontal(const RasterOp& a, const RasterOp& b);

} // namespace tce
