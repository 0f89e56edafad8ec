#include "lc2/kernels.hpp"

#include <algorithm>

#include "lc2/error.hpp"

namespace lc2::kernels {

ConvShape conv_shape(std::size_t in_ch, std::size_t in_h, std::size_t in_w, std::size_t out_ch,
                     std::size_t kernel, std::size_t stride, std::size_t pad) {
  require(kernel >= 1 && stride >= 1, "conv: kernel and stride must be >= 1");
  require(in_h + 2 * pad >= kernel && in_w + 2 * pad >= kernel, "conv: input smaller than kernel");
  ConvShape s{in_ch, in_h, in_w, out_ch, 0, 0, kernel, stride, pad};
  s.out_h = (in_h + 2 * pad - kernel) / stride + 1;
  s.out_w = (in_w + 2 * pad - kernel) / stride + 1;
  return s;
}

namespace {

// Range of output indices o for which o*stride + k - pad lies in [0, n_in).
struct OutRange {
  std::size_t lo, hi;  // half-open
};

OutRange valid_outputs(std::size_t n_out, std::size_t n_in, std::size_t k, std::size_t stride, std::size_t pad) {
  // o*stride + k >= pad  and  o*stride + k - pad < n_in
  std::size_t lo = 0;
  if (k < pad) lo = (pad - k + stride - 1) / stride;
  std::size_t hi = 0;
  if (n_in + pad > k) hi = (n_in + pad - k - 1) / stride + 1;
  hi = std::min(hi, n_out);
  if (lo > hi) lo = hi;
  return {lo, hi};
}

}  // namespace

void conv2d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out) {
  const std::size_t in_plane = s.in_h * s.in_w;
  const std::size_t out_plane = s.out_h * s.out_w;
  const std::size_t kk = s.kernel * s.kernel;

#pragma omp parallel for schedule(static)
  for (std::size_t oc = 0; oc < s.out_ch; ++oc) {
    double* o = out.data() + oc * out_plane;
    std::fill(o, o + out_plane, bias[oc]);
    for (std::size_t ic = 0; ic < s.in_ch; ++ic) {
      const double* x = in.data() + ic * in_plane;
      const double* w = weight.data() + (oc * s.in_ch + ic) * kk;
      for (std::size_t ky = 0; ky < s.kernel; ++ky) {
        const OutRange ry = valid_outputs(s.out_h, s.in_h, ky, s.stride, s.pad);
        for (std::size_t kx = 0; kx < s.kernel; ++kx) {
          const OutRange rx = valid_outputs(s.out_w, s.in_w, kx, s.stride, s.pad);
          const double wv = w[ky * s.kernel + kx];
          for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
            const double* xrow = x + (oy * s.stride + ky - s.pad) * s.in_w;
            double* orow = o + oy * s.out_w;
            for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) {
              orow[ox] += wv * xrow[ox * s.stride + kx - s.pad];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_params(const ConvShape& s, std::span<const double> in, std::span<const double> dout,
                            std::span<double> dweight, std::span<double> dbias) {
  const std::size_t in_plane = s.in_h * s.in_w;
  const std::size_t out_plane = s.out_h * s.out_w;
  const std::size_t kk = s.kernel * s.kernel;

#pragma omp parallel for schedule(static)
  for (std::size_t oc = 0; oc < s.out_ch; ++oc) {
    const double* g = dout.data() + oc * out_plane;
    double db = 0.0;
    for (std::size_t i = 0; i < out_plane; ++i) db += g[i];
    dbias[oc] += db;
    for (std::size_t ic = 0; ic < s.in_ch; ++ic) {
      const double* x = in.data() + ic * in_plane;
      double* dw = dweight.data() + (oc * s.in_ch + ic) * kk;
      for (std::size_t ky = 0; ky < s.kernel; ++ky) {
        const OutRange ry = valid_outputs(s.out_h, s.in_h, ky, s.stride, s.pad);
        for (std::size_t kx = 0; kx < s.kernel; ++kx) {
          const OutRange rx = valid_outputs(s.out_w, s.in_w, kx, s.stride, s.pad);
          double acc = 0.0;
          for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
            const double* xrow = x + (oy * s.stride + ky - s.pad) * s.in_w;
            const double* grow = g + oy * s.out_w;
            for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) {
              acc += grow[ox] * xrow[ox * s.stride + kx - s.pad];
            }
          }
          dw[ky * s.kernel + kx] += acc;
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> weight, std::span<const double> dout,
                           std::span<double> din) {
  const std::size_t in_plane = s.in_h * s.in_w;
  const std::size_t out_plane = s.out_h * s.out_w;
  const std::size_t kk = s.kernel * s.kernel;

#pragma omp parallel for schedule(static)
  for (std::size_t ic = 0; ic < s.in_ch; ++ic) {
    double* dx = din.data() + ic * in_plane;
    std::fill(dx, dx + in_plane, 0.0);
    for (std::size_t oc = 0; oc < s.out_ch; ++oc) {
      const double* g = dout.data() + oc * out_plane;
      const double* w = weight.data() + (oc * s.in_ch + ic) * kk;
      for (std::size_t ky = 0; ky < s.kernel; ++ky) {
        const OutRange ry = valid_outputs(s.out_h, s.in_h, ky, s.stride, s.pad);
        for (std::size_t kx = 0; kx < s.kernel; ++kx) {
          const OutRange rx = valid_outputs(s.out_w, s.in_w, kx, s.stride, s.pad);
          const double wv = w[ky * s.kernel + kx];
          for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
            double* dxrow = dx + (oy * s.stride + ky - s.pad) * s.in_w;
            const double* grow = g + oy * s.out_w;
            for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) {
              dxrow[ox * s.stride + kx - s.pad] += wv * grow[ox];
            }
          }
        }
      }
    }
  }
}

namespace serial {

namespace {
// Signed input coordinate for an output index and kernel tap.
long long tap(std::size_t o, std::size_t k, const ConvShape& s) {
  return static_cast<long long>(o * s.stride + k) - static_cast<long long>(s.pad);
}
}  // namespace

void conv2d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out) {
  for (std::size_t oc = 0; oc < s.out_ch; ++oc)
    for (std::size_t oy = 0; oy < s.out_h; ++oy)
      for (std::size_t ox = 0; ox < s.out_w; ++ox) {
        double acc = bias[oc];
        for (std::size_t ic = 0; ic < s.in_ch; ++ic)
          for (std::size_t ky = 0; ky < s.kernel; ++ky)
            for (std::size_t kx = 0; kx < s.kernel; ++kx) {
              const long long iy = tap(oy, ky, s), ix = tap(ox, kx, s);
              if (iy < 0 || ix < 0 || iy >= static_cast<long long>(s.in_h) || ix >= static_cast<long long>(s.in_w))
                continue;
              acc += weight[((oc * s.in_ch + ic) * s.kernel + ky) * s.kernel + kx] *
                     in[(ic * s.in_h + static_cast<std::size_t>(iy)) * s.in_w + static_cast<std::size_t>(ix)];
            }
        out[(oc * s.out_h + oy) * s.out_w + ox] = acc;
      }
}

void conv2d_backward_params(const ConvShape& s, std::span<const double> in, std::span<const double> dout,
                            std::span<double> dweight, std::span<double> dbias) {
  for (std::size_t oc = 0; oc < s.out_ch; ++oc)
    for (std::size_t oy = 0; oy < s.out_h; ++oy)
      for (std::size_t ox = 0; ox < s.out_w; ++ox) {
        const double g = dout[(oc * s.out_h + oy) * s.out_w + ox];
        dbias[oc] += g;
        for (std::size_t ic = 0; ic < s.in_ch; ++ic)
          for (std::size_t ky = 0; ky < s.kernel; ++ky)
            for (std::size_t kx = 0; kx < s.kernel; ++kx) {
              const long long iy = tap(oy, ky, s), ix = tap(ox, kx, s);
              if (iy < 0 || ix < 0 || iy >= static_cast<long long>(s.in_h) || ix >= static_cast<long long>(s.in_w))
                continue;
              dweight[((oc * s.in_ch + ic) * s.kernel + ky) * s.kernel + kx] +=
                  g * in[(ic * s.in_h + static_cast<std::size_t>(iy)) * s.in_w + static_cast<std::size_t>(ix)];
            }
      }
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> weight, std::span<const double> dout,
                           std::span<double> din) {
  // Gather form: each input cell sums every (output channel, tap) that reads it.
  for (std::size_t ic = 0; ic < s.in_ch; ++ic)
    for (std::size_t iy = 0; iy < s.in_h; ++iy)
      for (std::size_t ix = 0; ix < s.in_w; ++ix) {
        double acc = 0.0;
        for (std::size_t oc = 0; oc < s.out_ch; ++oc)
          for (std::size_t ky = 0; ky < s.kernel; ++ky) {
            const long long ny = static_cast<long long>(iy + s.pad) - static_cast<long long>(ky);
            if (ny < 0 || ny % static_cast<long long>(s.stride) != 0) continue;
            const std::size_t oy = static_cast<std::size_t>(ny) / s.stride;
            if (oy >= s.out_h) continue;
            for (std::size_t kx = 0; kx < s.kernel; ++kx) {
              const long long nx = static_cast<long long>(ix + s.pad) - static_cast<long long>(kx);
              if (nx < 0 || nx % static_cast<long long>(s.stride) != 0) continue;
              const std::size_t ox = static_cast<std::size_t>(nx) / s.stride;
              if (ox >= s.out_w) continue;
              acc += weight[((oc * s.in_ch + ic) * s.kernel + ky) * s.kernel + kx] *
                     dout[(oc * s.out_h + oy) * s.out_w + ox];
            }
          }
        din[(ic * s.in_h + iy) * s.in_w + ix] = acc;
      }
}

}  // namespace serial

}  // namespace lc2::kernels
