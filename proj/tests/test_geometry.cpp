#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support/compare.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"
#include "tce/geometry.hpp"

using namespace tce;

namespace {

RasterOp identity_raster(const Shape& shape) {
    Region r;
    r.range = shape;
    r.src_view = {0, default_strides(shape)};
    r.dst_view = {0, default_strides(shape)};
    return RasterOp{{r}, shape};
}

} // namespace

TEST_CASE("identity region copies the tensor") {
    tsup::Rng rng(3);
    Tensor t = tsup::rand_tensor(rng, {3, 4});
    Tensor out = raster_execute(identity_raster(t.shape()), {t});
    CHECK(tsup::bitwise_equal(out, t));
}

TEST_CASE("second-row slice of a 2x4 matrix") {
    Tensor a = Tensor::from_data({2, 4}, {0, 1, 2, 3, 10, 11, 12, 13});
    Region r;
    r.range = {1, 4};
    r.src_view = {4, {4, 1}};
    r.dst_view = {0, {4, 1}};
    Tensor b = raster_execute(RasterOp{{r}, {1, 4}}, {a});
    CHECK(b.buffer() == std::vector<float>{10, 11, 12, 13});
}

TEST_CASE("swapped strides transpose") {
    Tensor a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    Region r;
    r.range = {3, 2};
    r.src_view = {0, {1, 3}};
    r.dst_view = {0, {2, 1}};
    Tensor b = raster_execute(RasterOp{{r}, {3, 2}}, {a});
    CHECK(b.buffer() == std::vector<float>{1, 4, 2, 5, 3, 6});
}

TEST_CASE("unwritten destination slots are zero") {
    Tensor a = Tensor::from_data({1, 2}, {5, 6});
    Region r;
    r.range = {1, 2};
    r.src_view = {0, {2, 1}};
    r.dst_view = {0, {2, 1}};
    Tensor out = raster_execute(RasterOp{{r}, {2, 2}}, {a});
    CHECK(out.buffer() == std::vector<float>{5, 6, 0, 0});
}

TEST_CASE("packed-layout sources are rejected") {
    Tensor packed = nc4hw4_pack(Tensor(Shape{1, 4, 2, 2}));
    CHECK_THROWS_AS(raster_execute(identity_raster(packed.shape()), {packed}), Error);
}

TEST_CASE("negative strides reverse a vector") {
    Tensor a = Tensor::from_data({4}, {1, 2, 3, 4});
    Region r;
    r.range = {4};
    r.src_view = {3, {-1}};
    r.dst_view = {0, {1}};
    Tensor out = raster_execute(RasterOp{{r}, {4}}, {a});
    CHECK(out.buffer() == std::vector<float>{4, 3, 2, 1});
}

TEST_CASE("bounds and overlap are detected") {
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Region out_of_bounds;
    out_of_bounds.range = {2, 2};
    out_of_bounds.src_view = {1, {2, 1}}; // reaches index 4
    out_of_bounds.dst_view = {0, {2, 1}};
    CHECK_THROWS_AS(raster_execute(RasterOp{{out_of_bounds}, {2, 2}}, {a}), Error);

    Region collapse;
    collapse.range = {2, 2};
    collapse.src_view = {0, {2, 1}};
    collapse.dst_view = {0, {0, 1}}; // both rows land on the same slots
    CHECK_THROWS_AS(raster_execute(RasterOp{{collapse}, {2, 2}}, {a}, true), Error);
    CHECK_NOTHROW(raster_execute(RasterOp{{collapse}, {2, 2}}, {a}, false));
}

TEST_CASE("slice decomposition carries offset and strides") {
    RasterOp op = decompose_slice({2, 4}, {1, 0}, {1, 4});
    REQUIRE(op.regions.size() == 1);
    CHECK(op.regions[0].src_view.offset == 4);
    CHECK(op.regions[0].src_view.strides == Strides{4, 1});
    Tensor a = Tensor::from_data({2, 4}, {0, 1, 2, 3, 20, 21, 22, 23});
    Tensor b = raster_execute(op, {a});
    CHECK(b.buffer() == std::vector<float>{20, 21, 22, 23});
}

TEST_CASE("transpose decomposition permutes strides") {
    RasterOp op = decompose_transpose({2, 3}, {1, 0});
    REQUIRE(op.regions.size() == 1);
    CHECK(op.regions[0].src_view.strides == Strides{1, 3});
    CHECK(op.regions[0].dst_view.strides == Strides{2, 1});
    CHECK_THROWS_AS(decompose_transpose({2, 3, 4}, {1, 0, 2}), Error);
    CHECK_THROWS_AS(decompose_permute({2, 3}, {0, 0}), Error);
}

TEST_CASE("concat decomposition offsets destination regions") {
    RasterOp op = decompose_concat({{1, 2}, {1, 2}}, 0);
    REQUIRE(op.regions.size() == 2);
    CHECK(op.regions[0].dst_view.offset == 0);
    CHECK(op.regions[1].dst_view.offset == 2);
    tsup::Rng rng(5);
    Tensor a = tsup::rand_tensor(rng, {1, 2});
    Tensor b = tsup::rand_tensor(rng, {1, 2});
    Tensor got = raster_execute(op, {a, b});
    CHECK(tsup::bitwise_equal(got, oracle::concat({a, b}, 0)));
}

TEST_CASE("decompositions match naive references on random cases") {
    tsup::Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        Shape s = tsup::rand_shape(rng, 4, 5);
        Tensor t = tsup::rand_tensor(rng, s);
        std::uniform_int_distribution<int64_t> axis_dist(0, static_cast<int64_t>(s.size()) - 1);

        {
            std::vector<int64_t> perm(s.size());
            for (size_t i = 0; i < s.size(); ++i) perm[i] = static_cast<int64_t>(i);
            std::shuffle(perm.begin(), perm.end(), rng);
            CHECK(tsup::bitwise_equal(raster_execute(decompose_permute(s, perm), {t}),
                                      oracle::permute(t, perm)));

            std::vector<int64_t> begin(s.size()), size(s.size());
            for (size_t i = 0; i < s.size(); ++i) {
                std::uniform_int_distribution<int64_t> size_dist(1, s[i]);
                size[i] = size_dist(rng);
                std::uniform_int_distribution<int64_t> begin_dist(0, s[i] - size[i]);
                begin[i] = begin_dist(rng);
            }
            CHECK(tsup::bitwise_equal(raster_execute(decompose_slice(s, begin, size), {t}),
                                      oracle::slice(t, begin, size)));

            const int64_t axis = axis_dist(rng);
            Tensor other = tsup::rand_tensor(rng, s);
            CHECK(tsup::bitwise_equal(
                raster_execute(decompose_concat({s, s}, axis), {t, other}),
                oracle::concat({t, other}, axis)));

            Shape flat{numel(s)};
            CHECK(tsup::bitwise_equal(raster_execute(decompose_reshape(s, flat), {t}),
                                      oracle::reshape(t, flat)));
        }
    }
}

TEST_CASE("write disjointness holds for every decomposition") {
    tsup::Rng rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        Shape s = tsup::rand_shape(rng, 3, 5);
        Tensor t = tsup::rand_tensor(rng, s);
        std::vector<int64_t> perm(s.size());
        for (size_t i = 0; i < s.size(); ++i) perm[i] = static_cast<int64_t>(i);
        std::shuffle(perm.begin(), perm.end(), rng);
        CHECK_NOTHROW(raster_execute(decompose_permute(s, perm), {t}, true));
        CHECK_NOTHROW(raster_execute(decompose_concat({s, s}, 0), {t, t}, true));

        std::vector<int64_t> begin(s.size()), size(s.size());
        for (size_t i = 0; i < s.size(); ++i) {
            std::uniform_int_distribution<int64_t> size_dist(1, s[i]);
            size[i] = size_dist(rng);
            std::uniform_int_distribution<int64_t> begin_dist(0, s[i] - size[i]);
            begin[i] = begin_dist(rng);
        }
        CHECK_NOTHROW(raster_execute(decompose_slice(s, begin, size), {t}, true));
        CHECK_NOTHROW(raster_execute(decompose_reshape(s, {numel(s)}), {t}, true));
    }
}

TEST_CASE("vertical merge composes identities") {
    RasterOp id = identity_raster({2, 3});
    auto merged = merge_vertical(id, id);
    REQUIRE(merged.has_value());
    CHECK(*merged == id);
}

TEST_CASE("vertical merge of a double transpose is the identity movement") {
    tsup::Rng rng(31);
    Tensor t = tsup::rand_tensor(rng, {4, 4});
    RasterOp tr = decompose_transpose({4, 4}, {1, 0});
    auto merged = merge_vertical(tr, tr);
    REQUIRE(merged.has_value());
    Tensor direct = raster_execute(*merged, {t});
    CHECK(tsup::bitwise_equal(direct, t));
}

TEST_CASE("vertical merge slice-after-transpose equals two-step execution") {
    tsup::Rng rng(37);
    Tensor t = tsup::rand_tensor(rng, {3, 5});
    RasterOp tr = decompose_transpose({3, 5}, {1, 0}); // 5x3
    RasterOp sl = decompose_slice({5, 3}, {1, 1}, {3, 2});
    auto merged = merge_vertical(tr, sl);
    REQUIRE(merged.has_value());
    Tensor two_step = raster_execute(sl, {raster_execute(tr, {t})});
    CHECK(tsup::bitwise_equal(raster_execute(*merged, {t}), two_step));
}

TEST_CASE("vertical merge declines multi-region and partial covers") {
    RasterOp cc = decompose_concat({{1, 2}, {1, 2}}, 0);
    RasterOp id = identity_raster({2, 2});
    CHECK_FALSE(merge_vertical(cc, id).has_value());
    CHECK_FALSE(merge_vertical(id, cc).has_value());

    // Producer writing only half its output cannot be inverted.
    Region half;
    half.range = {1, 2};
    half.src_view = {0, {2, 1}};
    half.dst_view = {0, {2, 1}};
    RasterOp partial{{half}, {2, 2}};
    CHECK_FALSE(merge_vertical(partial, id).has_value());
}

TEST_CASE("vertical merge declines non-affine compositions") {
    // Transpose output read through a flat view is not an affine movement.
    RasterOp tr = decompose_transpose({2, 3}, {1, 0});
    RasterOp rs = decompose_reshape({3, 2}, {6});
    CHECK_FALSE(merge_vertical(tr, rs).has_value());
}

TEST_CASE("random mergeable pipelines execute identically merged and unmerged") {
    tsup::Rng rng(41);
    int merges = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Shape s = tsup::rand_shape(rng, 3, 4);
        Tensor t = tsup::rand_tensor(rng, s);
        std::vector<int64_t> perm(s.size());
        for (size_t i = 0; i < s.size(); ++i) perm[i] = static_cast<int64_t>(i);
        std::shuffle(perm.begin(), perm.end(), rng);
        RasterOp first = decompose_permute(s, perm);

        const Shape& mid = first.out_shape;
        RasterOp second;
        if (trial % 2 == 0) {
            std::vector<int64_t> perm2(mid.size());
            for (size_t i = 0; i < mid.size(); ++i) perm2[i] = static_cast<int64_t>(i);
            std::shuffle(perm2.begin(), perm2.end(), rng);
            second = decompose_permute(mid, perm2);
        } else {
            std::vector<int64_t> begin(mid.size()), size(mid.size());
            for (size_t i = 0; i < mid.size(); ++i) {
                std::uniform_int_distribution<int64_t> size_dist(1, mid[i]);
                size[i] = size_dist(rng);
                std::uniform_int_distribution<int64_t> begin_dist(0, mid[i] - size[i]);
                begin[i] = begin_dist(rng);
            }
            second = decompose_slice(mid, begin, size);
        }

        auto merged = merge_vertical(first, second);
        REQUIRE(merged.has_value());
        ++merges;
        Tensor two_step = raster_execute(second, {raster_execute(first, {t})});
        CHECK(tsup::bitwise_equal(raster_execute(*merged, {t}), two_step));
    }
    CHECK(merges == 100);
}

TEST_CASE("horizontal merge requires identical regions") {
    RasterOp a = decompose_slice({2, 4}, {1, 0}, {1, 4});
    RasterOp b = decompose_slice({2, 4}, {1, 0}, {1, 4});
    CHECK(merge_horizontal(a, b).has_value());
    RasterOp c = decompose_slice({2, 4}, {0, 0}, {1, 4}); // same range, other offset
    CHECK_FALSE(merge_horizontal(a, c).has_value());
}
