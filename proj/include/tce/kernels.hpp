#pragma once

#include <cstdint>
#include <string>

#include "tce/tensor.hpp"

namespace tce {

enum class EwOp { Neg, Square, Sqrt, Exp, Sigmoid, Tanh, Relu, Add, Sub, Mul, Div, Max };

bool ew_is_unary(EwOp op);
EwOp ew_from_kind(std::string_view kind);

Tensor elementwise(EwOp op, const Tensor& a);
Tensor elementwise(EwOp op, const Tensor& a, const Tensor& b);

/// Sums along one axis; the axis is removed (a rank-1 input reduces to {1}).
Tensor reduce_sum(const Tensor& t, int64_t axis);

/// Kernel implementation choice for the compute-intensive operators.
struct AlgorithmVariant {
    enum class Kind { Direct, Tiled, Strassen, Winograd };
    Kind kind = Kind::Direct;
    int64_t tile_e = 1;  // tiled: block along the shared axis
    int64_t tile_b = 1;  // tiled: block along the output columns
    int64_t cutoff = 32; // strassen: fall back to direct at/below this size
    int64_t wino_m = 2;  // winograd: output tile edge, F(m,3)

    static AlgorithmVariant direct();
    static AlgorithmVariant tiled(int64_t t_e, int64_t t_b);
    static AlgorithmVariant strassen(int64_t cutoff);
    static AlgorithmVariant winograd(int64_t m);

    std::string to_string() const;
    bool operator==(const AlgorithmVariant&) const = default;
};

/// Multiply counter for instrumented runs; transform-stage arithmetic in
/// Winograd/Strassen is additions only and is not counted.
struct KernelCounter {
    uint64_t mults = 0;
};

Tensor matmul(const Tensor& a, const Tensor& b,
              const AlgorithmVariant& variant = AlgorithmVariant::direct(),
              KernelCounter* counter = nullptr);

Tensor conv2d(const Tensor& input, const Tensor& weight, int64_t stride, int64_t pad,
              const AlgorithmVariant& variant = AlgorithmVariant::direct(),
              KernelCounter* counter = nullptr);

/// Elementary-calculation counts (multiply-accumulates) per algorithm.
uint64_t q_matmul(int64_t a, int64_t e, int64_t b, const AlgorithmVariant& variant);
uint64_t q_conv2d(int64_t n, int64_t c, int64_t h, int64_t w, int64_t o, int64_t kh,
                  int64_t kw, int64_t stride, int64_t pad,
                  const AlgorithmVariant& variant);

} // namespace tce
