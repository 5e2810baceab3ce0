#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace afdm {

// Dense 4-D float tensor in batch-channel-row-column order. Values are
// 32-bit; every op that reduces (convolution, losses, pooling) accumulates
// in 64-bit before rounding back.
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<float> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, float fill = 0.0f);

  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
  std::string shape_str() const;

  float& at(int in, int ic, int iy, int ix) {
    return v[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
  }
  float at(int in, int ic, int iy, int ix) const {
    return v[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
  }
  float* row(int in, int ic, int iy) {
    return v.data() + ((static_cast<std::size_t>(in) * c + ic) * h + iy) * w;
  }
  const float* row(int in, int ic, int iy) const {
    return v.data() + ((static_cast<std::size_t>(in) * c + ic) * h + iy) * w;
  }

  bool all_finite() const;
};

// Convolution weights in out-in-kh-kw order plus a per-output bias.
// Kernels in this artifact are 1x1 or 3x3; odd sizes are enforced.
struct ConvKernel {
  int out_c = 0, in_c = 0, kh = 0, kw = 0;
  int stride = 1, pad = 0;
  std::vector<float> w;
  std::vector<float> b;

  ConvKernel() = default;
  ConvKernel(int out_channels, int in_channels, int ksize, int stride_ = 1, int pad_ = 0);

  float& wat(int o, int i, int y, int x) {
    return w[((static_cast<std::size_t>(o) * in_c + i) * kh + y) * kw + x];
  }
  float wat(int o, int i, int y, int x) const {
    return w[((static_cast<std::size_t>(o) * in_c + i) * kh + y) * kw + x];
  }
  std::size_t param_count() const { return w.size() + b.size(); }
};

// Cross-correlation (no kernel flip), the deep-learning convention.
// Output dims: (n, out_c, (h+2p-kh)/s+1, (w+2p-kw)/s+1).
// pad_override >= 0 replaces the kernel's own padding.
Tensor conv2d(const Tensor& input, const ConvKernel& k, int pad_override = -1);

struct ConvGrads {
  Tensor input;
  std::vector<float> weights;
  std::vector<float> bias;
};

// Exact gradients of sum(grad_out * conv2d(input, k)) w.r.t. input, weights
// and bias.
ConvGrads conv2d_backward(const Tensor& input, const ConvKernel& k, const Tensor& grad_out,
                          int pad_override = -1);

Tensor relu(const Tensor& x);
// Masks grad where x <= 0.
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

Tensor sigmoid(const Tensor& x);
// y is the forward output sigmoid(x); gradient is y*(1-y)*grad.
Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out);

// Mean of squared differences over all elements.
double mse_loss(const Tensor& pred, const Tensor& target);
// d(mse)/d(pred) = 2*(pred-target)/count.
Tensor mse_loss_grad(const Tensor& pred, const Tensor& target);

// 2x2 average pooling; spatial dims must be even.
Tensor downsample2(const Tensor& x);
Tensor downsample2_backward(const Tensor& grad_out);

// Nearest-neighbour replication by an integer factor >= 1.
Tensor upsample_nearest(const Tensor& x, int factor);
// Adjoint: sums grad over each factor x factor cell.
Tensor upsample_nearest_backward(const Tensor& grad_out, int factor);

Tensor add(const Tensor& a, const Tensor& b);
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& x, int c_begin, int c_end);

// View into one parameter tensor of a network, used by the optimizer and the
// checkpoint writer.
struct ParamView {
  std::string name;
  float* data = nullptr;
  std::size_t size = 0;
};

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<float>> m, v;  // parallel to the parameter list
};

AdamState make_adam_state(const std::vector<ParamView>& params, double lr);

// Standard Adam update with bias correction; increments st.step.
void adam_step(const std::vector<ParamView>& params,
               const std::vector<std::span<const float>>& grads, AdamState& st);

}  // namespace afdm
