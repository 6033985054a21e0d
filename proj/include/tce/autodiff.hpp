#pragma once

#include "tce/graph.hpp"
#include "tce/kernels.hpp"

namespace tce {

std::vector<Tensor> grad_elementwise(EwOp op, const std::vector<Tensor>& inputs,
                                     const Tensor& upstream);

/// dA = upstream * B^T, dB = A^T * upstream.
std::pair<Tensor, Tensor> grad_matmul(const Tensor& a, const Tensor& b,
                                      const Tensor& upstream);

std::pair<Tensor, Tensor> grad_conv2d(const Tensor& input, const Tensor& weight,
                                      int64_t stride, int64_t pad, const Tensor& upstream);

Tensor grad_reduce_sum(const Shape& in_shape, int64_t axis, const Tensor& upstream);

/// Transpose of the movement: upstream values scatter-accumulate back
/// through each region's views, so many-to-one reads sum.
std::vector<Tensor> grad_raster(const RasterOp& op, const std::vector<Shape>& src_shapes,
                                const Tensor& upstream);

/// Reverse accumulation over a decomposed (atomic + raster) graph. Returns
/// gradients of the scalar loss tensor with respect to `wrt` ids; ids not on
/// the loss path get zero gradients.
std::map<std::string, Tensor> backward(const Graph& g,
                                       const std::map<std::string, Tensor>& inputs,
                                       const std::string& loss_id,
                                       const std::vector<std::string>& wrt);

struct OptimizerState {
    enum class Kind { Sgd, Adam };
    Kind kind = Kind::Sgd;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int64_t step = 0;
    std::map<std::string, Tensor> m; // first moments, adam only
    std::map<std::string, Tensor> v; // second moments, adam only
};

void sgd_step(std::map<std::string, Tensor>& params,
              const std::map<std::string, Tensor>& grads, double lr);

/// One ADAM update with bias correction; moments are lazily zero-initialized
/// to the parameter shapes and the shared step counter increments per call.
void adam_step(OptimizerState& state, std::map<std::string, Tensor>& params,
               const std::map<std::string, Tensor>& grads);

} // namespace tce
