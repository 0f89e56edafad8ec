#pragma once

// Dense convolution kernels over CHW tensors.
//
// The top-level functions are the OpenMP kernels used by the encoder. Each output element is
// accumulated by exactly one thread in a fixed order, so results do not depend on the thread
// count. `serial::` holds the textbook direct convolution kept as a reference for tests and
// benchmarks.

#include <cstddef>
#include <span>

namespace lc2::kernels {

struct ConvShape {
  std::size_t in_ch, in_h, in_w;
  std::size_t out_ch, out_h, out_w;
  std::size_t kernel, stride, pad;
};

ConvShape conv_shape(std::size_t in_ch, std::size_t in_h, std::size_t in_w, std::size_t out_ch,
                     std::size_t kernel, std::size_t stride, std::size_t pad);

/// out = conv(in, weight) + bias. weight is [out_ch][in_ch][k][k].
void conv2d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out);

/// Accumulates dweight and dbias from the upstream gradient.
void conv2d_backward_params(const ConvShape& s, std::span<const double> in, std::span<const double> dout,
                            std::span<double> dweight, std::span<double> dbias);

/// Overwrites din with the gradient w.r.t. the input.
void conv2d_backward_input(const ConvShape& s, std::span<const double> weight, std::span<const double> dout,
                           std::span<double> din);

namespace serial {
void conv2d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out);
void conv2d_backward_params(const ConvShape& s, std::span<const double> in, std::span<const double> dout,
                            std::span<double> dweight, std::span<double> dbias);
void conv2d_backward_input(const ConvShape& s, std::span<const double> weight, std::span<const double> dout,
                           std::span<double> din);
}  // namespace serial

}  // namespace lc2::kernels
