#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support/compare.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"
#include "tce/composite.hpp"
#include "tce/kernels.hpp"
#include "tce/runtime.hpp"

using namespace tce;

TEST_CASE("elementwise basics") {
    CHECK(elementwise(EwOp::Square, Tensor::from_data({1}, {3})).buffer() ==
          std::vector<float>{9});
    CHECK(elementwise(EwOp::Add, Tensor::from_data({2}, {1, 2}),
                      Tensor::from_data({2}, {3, 4}))
              .buffer() == std::vector<float>{4, 6});
    CHECK(elementwise(EwOp::Relu, Tensor::from_data({3}, {-1, 0, 2})).buffer() ==
          std::vector<float>{0, 0, 2});
    CHECK_THROWS_AS(elementwise(EwOp::Add, Tensor::from_data({2}, {1, 2}),
                                Tensor::from_data({1}, {3})),
                    Error);
}

TEST_CASE("division by zero follows IEEE semantics") {
    Tensor out = elementwise(EwOp::Div, Tensor::from_data({2}, {1, 0}),
                             Tensor::from_data({2}, {0, 0}));
    CHECK(std::isinf(out.data()[0]));
    CHECK(std::isnan(out.data()[1]));
}

TEST_CASE("reduce_sum over both axes and against the loop oracle") {
    Tensor t = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    CHECK(reduce_sum(t, 0).buffer() == std::vector<float>{4, 6});
    CHECK(reduce_sum(t, 1).buffer() == std::vector<float>{3, 7});
    CHECK_THROWS_AS(reduce_sum(t, 2), Error);

    tsup::Rng rng(3);
    Tensor big = tsup::rand_tensor(rng, {3, 4, 5});
    CHECK(tsup::bitwise_equal(reduce_sum(big, 1), oracle::reduce_sum(big, 1)));
}

TEST_CASE("matmul identity and direct equivalence") {
    Tensor eye = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    tsup::Rng rng(5);
    Tensor b = tsup::rand_tensor(rng, {2, 3});
    CHECK(tsup::bitwise_equal(matmul(eye, b), b));
    CHECK_THROWS_AS(matmul(eye, Tensor(Shape{3, 2})), Error);
}

TEST_CASE("degenerate tiling equals direct bitwise") {
    tsup::Rng rng(7);
    Tensor a = tsup::rand_tensor(rng, {5, 7});
    Tensor b = tsup::rand_tensor(rng, {7, 4});
    CHECK(tsup::bitwise_equal(matmul(a, b, AlgorithmVariant::tiled(1, 1)), matmul(a, b)));
}

TEST_CASE("any tiling equals direct bitwise") {
    tsup::Rng rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        std::uniform_int_distribution<int64_t> dim(1, 13);
        Tensor a = tsup::rand_tensor(rng, {dim(rng), dim(rng)});
        Tensor b = tsup::rand_tensor(rng, {a.shape()[1], dim(rng)});
        std::uniform_int_distribution<int64_t> tile(1, 6);
        auto v = AlgorithmVariant::tiled(tile(rng), tile(rng));
        CHECK(tsup::bitwise_equal(matmul(a, b, v), matmul(a, b)));
    }
}

TEST_CASE("strassen agrees with direct within 1e-5 relative") {
    tsup::Rng rng(13);
    Tensor a8 = tsup::rand_tensor(rng, {8, 8});
    Tensor b8 = tsup::rand_tensor(rng, {8, 8});
    CHECK(tsup::rel_close(matmul(a8, b8, AlgorithmVariant::strassen(2)), matmul(a8, b8),
                          1e-5));

    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int64_t> dim(1, 40);
        Tensor a = tsup::rand_tensor(rng, {dim(rng), dim(rng)});
        Tensor b = tsup::rand_tensor(rng, {a.shape()[1], dim(rng)});
        CHECK(tsup::rel_close(matmul(a, b, AlgorithmVariant::strassen(4)), matmul(a, b),
                              1e-5));
    }
    CHECK_THROWS_AS(matmul(a8, b8, AlgorithmVariant::strassen(3)), Error);
}

TEST_CASE("conv2d all-ones and delta kernels") {
    Tensor ones = Tensor::full({1, 1, 3, 3}, 1.0f);
    Tensor kernel = Tensor::full({1, 1, 3, 3}, 1.0f);
    Tensor out = conv2d(ones, kernel, 1, 0);
    CHECK(out.shape() == Shape{1, 1, 1, 1});
    CHECK(out.data()[0] == 9.0f);

    tsup::Rng rng(17);
    Tensor x = tsup::rand_tensor(rng, {1, 1, 5, 5});
    Tensor delta(Shape{1, 1, 3, 3});
    delta.at({0, 0, 1, 1}) = 1.0f;
    CHECK(tsup::bitwise_equal(conv2d(x, delta, 1, 1), x));
}

TEST_CASE("winograd agrees with direct within 1e-4 relative") {
    tsup::Rng rng(19);
    for (int64_t m : {2, 6}) {
        for (int trial = 0; trial < 20; ++trial) {
            std::uniform_int_distribution<int64_t> chan(1, 4);
            std::uniform_int_distribution<int64_t> img(3, 16);
            std::uniform_int_distribution<int64_t> padd(0, 1);
            const int64_t c = chan(rng), o = chan(rng), h = img(rng), w = img(rng);
            const int64_t pad = padd(rng);
            Tensor x = tsup::rand_tensor(rng, {1, c, h, w});
            Tensor wt = tsup::rand_tensor(rng, {o, c, 3, 3});
            Tensor direct = conv2d(x, wt, 1, pad);
            Tensor wino = conv2d(x, wt, 1, pad, AlgorithmVariant::winograd(m));
            CHECK(tsup::rel_close(wino, direct, 1e-4));
        }
    }
    Tensor x = Tensor(Shape{1, 1, 4, 4});
    Tensor bad = Tensor(Shape{1, 1, 2, 2});
    CHECK_THROWS_AS(conv2d(x, bad, 1, 0, AlgorithmVariant::winograd(2)), Error);
    Tensor k3 = Tensor(Shape{1, 1, 3, 3});
    CHECK_THROWS_AS(conv2d(x, k3, 2, 1, AlgorithmVariant::winograd(2)), Error);
    CHECK_THROWS_AS(conv2d(x, k3, 1, 0, AlgorithmVariant::winograd(4)), Error);
}

TEST_CASE("q counts: direct products and strassen recursion") {
    CHECK(q_matmul(2, 3, 4, AlgorithmVariant::direct()) == 24);
    CHECK(q_matmul(2, 2, 2, AlgorithmVariant::strassen(1)) == 7);
    CHECK(q_matmul(4, 4, 4, AlgorithmVariant::strassen(1)) == 49);
    CHECK(q_matmul(4, 4, 4, AlgorithmVariant::strassen(2)) == 7 * 8);
    CHECK(q_conv2d(1, 1, 6, 6, 1, 3, 3, 1, 0, AlgorithmVariant::direct()) == 144);
    CHECK(q_conv2d(1, 1, 6, 6, 1, 3, 3, 1, 0, AlgorithmVariant::winograd(2)) == 64);
}

TEST_CASE("instrumented kernels match their q counts") {
    tsup::Rng rng(23);

    // Strassen: one level on 2x2 does 7 multiplies where direct does 8.
    {
        Tensor a = tsup::rand_tensor(rng, {2, 2});
        Tensor b = tsup::rand_tensor(rng, {2, 2});
        KernelCounter direct_count, strassen_count;
        matmul(a, b, AlgorithmVariant::direct(), &direct_count);
        matmul(a, b, AlgorithmVariant::strassen(1), &strassen_count);
        CHECK(direct_count.mults == 8);
        CHECK(strassen_count.mults == 7);
    }

    // Winograd F(2,3): 16 multiplies per 2x2 output tile versus 36.
    {
        Tensor x = tsup::rand_tensor(rng, {1, 1, 6, 6});
        Tensor w = tsup::rand_tensor(rng, {1, 1, 3, 3});
        KernelCounter direct_count, wino_count;
        conv2d(x, w, 1, 0, AlgorithmVariant::direct(), &direct_count);
        conv2d(x, w, 1, 0, AlgorithmVariant::winograd(2), &wino_count);
        CHECK(direct_count.mults == 144);
        CHECK(wino_count.mults == 64);
    }

    for (int trial = 0; trial < 10; ++trial) {
        std::uniform_int_distribution<int64_t> dim(1, 24);
        const int64_t a = dim(rng), e = dim(rng), b = dim(rng);
        Tensor ta = tsup::rand_tensor(rng, {a, e});
        Tensor tb = tsup::rand_tensor(rng, {e, b});
        for (auto v : {AlgorithmVariant::direct(), AlgorithmVariant::tiled(3, 2),
                       AlgorithmVariant::strassen(4)}) {
            KernelCounter counter;
            matmul(ta, tb, v, &counter);
            CHECK(counter.mults == q_matmul(a, e, b, v));
        }
    }

    for (int trial = 0; trial < 6; ++trial) {
        std::uniform_int_distribution<int64_t> chan(1, 3);
        std::uniform_int_distribution<int64_t> img(4, 10);
        const int64_t c = chan(rng), o = chan(rng), h = img(rng), w = img(rng);
        Tensor x = tsup::rand_tensor(rng, {1, c, h, w});
        Tensor wt = tsup::rand_tensor(rng, {o, c, 3, 3});
        for (auto v : {AlgorithmVariant::direct(), AlgorithmVariant::winograd(2),
                       AlgorithmVariant::winograd(6)}) {
            KernelCounter counter;
            conv2d(x, wt, 1, 1, v, &counter);
            CHECK(counter.mults == q_conv2d(1, c, h, w, o, 3, 3, 1, 1, v));
        }
    }
}

TEST_CASE("q monotonicity: strassen and winograd beat direct") {
    for (int64_t n : {2, 4, 8, 16, 32, 64, 128}) {
        CHECK(q_matmul(n, n, n, AlgorithmVariant::strassen(1)) <=
              q_matmul(n, n, n, AlgorithmVariant::direct()));
    }
    for (int64_t m : {2, 6}) {
        const int64_t out = m * 4;
        const int64_t in = out + 2;
        CHECK(q_conv2d(1, 1, in, in, 1, 3, 3, 1, 0, AlgorithmVariant::winograd(m)) <
              q_conv2d(1, 1, in, in, 1, 3, 3, 1, 0, AlgorithmVariant::direct()));
    }
}

namespace {

// Executes a lowered fragment directly, binding the composite's inputs.
std::map<std::string, Tensor> run_fragment(const Operator& op,
                                           const LoweredFragment& frag,
                                           const std::map<std::string, Tensor>& bound) {
    Graph g;
    g.operators = frag.ops;
    g.tensors = frag.new_tensors;
    for (size_t i = 0; i < op.inputs.size(); ++i) {
        g.tensors[op.inputs[i]] = TensorInfo{bound.at(op.inputs[i]).shape(), std::nullopt, false};
        g.inputs.push_back(op.inputs[i]);
    }
    for (const auto& id : op.outputs) {
        g.tensors.emplace(id, TensorInfo{});
        g.outputs.push_back(id);
    }
    std::map<std::string, Tensor> env = bound;
    for (const auto& [id, info] : g.tensors) {
        if (info.data && !env.count(id)) env[id] = Tensor::from_data(*info.shape, *info.data);
    }
    for (size_t idx : topo_order(g)) {
        const Operator& node = g.operators[idx];
        std::vector<const Tensor*> in;
        for (const auto& id : node.inputs) in.push_back(&env.at(id));
        env[node.outputs.at(0)] = execute_atomic(node, in);
    }
    return env;
}

bool only_atomic_and_raster(const LoweredFragment& frag) {
    for (const Operator& op : frag.ops) {
        if (category_of(op.kind) != OpCategory::Atomic) return false;
    }
    return true;
}

} // namespace

TEST_CASE("elu lowering is exact for non-negative inputs") {
    Operator op;
    op.id = "e";
    op.kind = "elu";
    op.inputs = {"x"};
    op.outputs = {"y"};
    Tensor x = Tensor::from_data({4}, {0.0f, 0.5f, 2.0f, 7.0f});
    auto frag = lower_composite(op, {x.shape()});
    CHECK(only_atomic_and_raster(frag));
    auto env = run_fragment(op, frag, {{"x", x}});
    CHECK(tsup::bitwise_equal(env.at("y"), x));

    tsup::Rng rng(29);
    Tensor mixed = tsup::rand_tensor(rng, {3, 5}, -3.0f, 3.0f);
    auto frag2 = lower_composite(op, {mixed.shape()});
    auto env2 = run_fragment(op, frag2, {{"x", mixed}});
    CHECK(tsup::rel_close(env2.at("y"), oracle::elu(mixed, 1.0), 1e-5));
}

TEST_CASE("avg pool lowering matches the mean") {
    Operator op;
    op.id = "p";
    op.kind = "avg_pool2d";
    op.attrs = {{"kernel", static_cast<int64_t>(2)}, {"stride", static_cast<int64_t>(2)}};
    op.inputs = {"x"};
    op.outputs = {"y"};
    Tensor x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
    auto frag = lower_composite(op, {x.shape()});
    CHECK(only_atomic_and_raster(frag));
    auto env = run_fragment(op, frag, {{"x", x}});
    CHECK(env.at("y").buffer() == std::vector<float>{2.5f});

    tsup::Rng rng(31);
    Tensor big = tsup::rand_tensor(rng, {2, 3, 6, 4});
    auto frag2 = lower_composite(op, {big.shape()});
    auto env2 = run_fragment(op, frag2, {{"x", big}});
    CHECK(tsup::rel_close(env2.at("y"), oracle::avg_pool2d(big, 2, 2), 1e-5));
}

TEST_CASE("layer norm lowering matches the formula") {
    Operator op;
    op.id = "ln";
    op.kind = "layer_norm";
    op.attrs = {{"epsilon", 1e-5}};
    op.inputs = {"x"};
    op.outputs = {"y"};
    tsup::Rng rng(37);
    for (const Shape& s : {Shape{6}, Shape{3, 8}, Shape{2, 3, 4}}) {
        Tensor x = tsup::rand_tensor(rng, s, -2.0f, 2.0f);
        auto frag = lower_composite(op, {s});
        CHECK(only_atomic_and_raster(frag));
        auto env = run_fragment(op, frag, {{"x", x}});
        CHECK(tsup::rel_close(env.at("y"), oracle::layer_norm(x, 1e-5), 1e-5));
    }
}

TEST_CASE("lstm cell lowering matches the scalar reference") {
    Operator op;
    op.id = "cell";
    op.kind = "lstm_cell";
    op.inputs = {"x", "h", "c", "w", "u", "b"};
    op.outputs = {"hn", "cn"};
    tsup::Rng rng(41);
    const int64_t batch = 2, in_dim = 3, hidden = 4;
    Tensor x = tsup::rand_tensor(rng, {batch, in_dim});
    Tensor h = tsup::rand_tensor(rng, {batch, hidden});
    Tensor c = tsup::rand_tensor(rng, {batch, hidden});
    Tensor w = tsup::rand_tensor(rng, {in_dim, 4 * hidden});
    Tensor u = tsup::rand_tensor(rng, {hidden, 4 * hidden});
    Tensor b = tsup::rand_tensor(rng, {4 * hidden});
    auto frag = lower_composite(
        op, {x.shape(), h.shape(), c.shape(), w.shape(), u.shape(), b.shape()});
    CHECK(only_atomic_and_raster(frag));
    auto env = run_fragment(
        op, frag, {{"x", x}, {"h", h}, {"c", c}, {"w", w}, {"u", u}, {"b", b}});
    auto [hn, cn] = oracle::lstm_cell(x, h, c, w, u, b);
    CHECK(tsup::max_abs_diff(env.at("hn"), hn) < 1e-5);
    CHECK(tsup::max_abs_diff(env.at("cn"), cn) < 1e-5);
}

TEST_CASE("unknown composite kind is rejected") {
    Operator op;
    op.id = "z";
    op.kind = "matmul";
    CHECK_THROWS_AS(lower_composite(op, {}), Error);
}
