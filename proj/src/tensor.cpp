#include "afdm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "afdm/error.hpp"

namespace afdm {

namespace {

std::string dims_str(int n, int c, int h, int w) {
  std::ostringstream os;
  os << "(" << n << "," << c << "," << h << "," << w << ")";
  return os.str();
}

}  // namespace

Tensor::Tensor(int n_, int c_, int h_, int w_, float fill) : n(n_), c(c_), h(h_), w(w_) {
  if (n_ <= 0 || c_ <= 0 || h_ <= 0 || w_ <= 0) {
    throw invalid_argument("Tensor: non-positive dims " + dims_str(n_, c_, h_, w_));
  }
  v.assign(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill);
}

std::string Tensor::shape_str() const { return dims_str(n, c, h, w); }

bool Tensor::all_finite() const {
  for (float x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

ConvKernel::ConvKernel(int out_channels, int in_channels, int ksize, int stride_, int pad_)
    : out_c(out_channels), in_c(in_channels), kh(ksize), kw(ksize), stride(stride_), pad(pad_) {
  if (out_c <= 0 || in_c <= 0) throw invalid_argument("ConvKernel: non-positive channel count");
  if (ksize <= 0 || ksize % 2 == 0) {
    throw invalid_argument("ConvKernel: kernel size must be odd, got " + std::to_string(ksize));
  }
  if (stride_ <= 0 || pad_ < 0) throw invalid_argument("ConvKernel: bad stride/padding");
  w.assign(static_cast<std::size_t>(out_c) * in_c * kh * kw, 0.0f);
  b.assign(static_cast<std::size_t>(out_c), 0.0f);
}

namespace {

void check_conv_args(const Tensor& x, const ConvKernel& k, int pad) {
  if (x.c != k.in_c) {
    throw invalid_argument("conv2d: input shape " + x.shape_str() + " has " +
                           std::to_string(x.c) + " channels but kernel expects " +
                           std::to_string(k.in_c) + " (kernel " + std::to_string(k.out_c) + "x" +
                           std::to_string(k.in_c) + "x" + std::to_string(k.kh) + "x" +
                           std::to_string(k.kw) + ")");
  }
  if (x.h + 2 * pad < k.kh || x.w + 2 * pad < k.kw) {
    throw invalid_argument("conv2d: padded input " + x.shape_str() + " smaller than kernel " +
                           std::to_string(k.kh) + "x" + std::to_string(k.kw));
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const ConvKernel& k, int pad_override) {
  const int p = pad_override >= 0 ? pad_override : k.pad;
  const int s = k.stride;
  check_conv_args(x, k, p);
  const int oh = (x.h + 2 * p - k.kh) / s + 1;
  const int ow = (x.w + 2 * p - k.kw) / s + 1;
  Tensor out(x.n, k.out_c, oh, ow);
  std::vector<double> acc(static_cast<std::size_t>(ow));
  for (int in = 0; in < x.n; ++in) {
    for (int oc = 0; oc < k.out_c; ++oc) {
      for (int oy = 0; oy < oh; ++oy) {
        std::fill(acc.begin(), acc.end(), static_cast<double>(k.b[oc]));
        for (int ic = 0; ic < k.in_c; ++ic) {
          for (int ky = 0; ky < k.kh; ++ky) {
            const int iy = oy * s + ky - p;
            if (iy < 0 || iy >= x.h) continue;
            const float* xrow = x.row(in, ic, iy);
            for (int kx = 0; kx < k.kw; ++kx) {
              const double wv = k.wat(oc, ic, ky, kx);
              // ox range keeping ix = ox*s + kx - p inside [0, w)
              int lo = kx < p ? (p - kx + s - 1) / s : 0;
              int hi = std::min(ow - 1, (x.w - 1 + p - kx) / s);
              if (s == 1) {
                const float* xr = xrow + kx - p;
                for (int ox = lo; ox <= hi; ++ox) acc[ox] += wv * xr[ox];
              } else {
                for (int ox = lo; ox <= hi; ++ox) acc[ox] += wv * xrow[ox * s + kx - p];
              }
            }
          }
        }
        float* orow = out.row(in, oc, oy);
        for (int ox = 0; ox < ow; ++ox) orow[ox] = static_cast<float>(acc[ox]);
      }
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& x, const ConvKernel& k, const Tensor& go,
                          int pad_override) {
  const int p = pad_override >= 0 ? pad_override : k.pad;
  const int s = k.stride;
  check_conv_args(x, k, p);
  const int oh = (x.h + 2 * p - k.kh) / s + 1;
  const int ow = (x.w + 2 * p - k.kw) / s + 1;
  if (go.n != x.n || go.c != k.out_c || go.h != oh || go.w != ow) {
    throw invalid_argument("conv2d_backward: grad shape " + go.shape_str() + " does not match " +
                           dims_str(x.n, k.out_c, oh, ow));
  }

  ConvGrads g;
  g.bias.assign(k.b.size(), 0.0f);
  g.weights.assign(k.w.size(), 0.0f);

  for (int oc = 0; oc < k.out_c; ++oc) {
    double acc = 0.0;
    for (int in = 0; in < go.n; ++in) {
      for (int oy = 0; oy < oh; ++oy) {
        const float* gr = go.row(in, oc, oy);
        for (int ox = 0; ox < ow; ++ox) acc += gr[ox];
      }
    }
    g.bias[oc] = static_cast<float>(acc);
  }

  for (int oc = 0; oc < k.out_c; ++oc) {
    for (int ic = 0; ic < k.in_c; ++ic) {
      for (int ky = 0; ky < k.kh; ++ky) {
        for (int kx = 0; kx < k.kw; ++kx) {
          double acc = 0.0;
          for (int in = 0; in < x.n; ++in) {
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * s + ky - p;
              if (iy < 0 || iy >= x.h) continue;
              const float* gr = go.row(in, oc, oy);
              const float* xrow = x.row(in, ic, iy);
              int lo = kx < p ? (p - kx + s - 1) / s : 0;
              int hi = std::min(ow - 1, (x.w - 1 + p - kx) / s);
              if (s == 1) {
                const float* xr = xrow + kx - p;
                for (int ox = lo; ox <= hi; ++ox) acc += static_cast<double>(gr[ox]) * xr[ox];
              } else {
                for (int ox = lo; ox <= hi; ++ox) {
                  acc += static_cast<double>(gr[ox]) * xrow[ox * s + kx - p];
                }
              }
            }
          }
          g.weights[((static_cast<std::size_t>(oc) * k.in_c + ic) * k.kh + ky) * k.kw + kx] =
              static_cast<float>(acc);
        }
      }
    }
  }

  std::vector<double> gi(x.size(), 0.0);
  for (int in = 0; in < x.n; ++in) {
    for (int oc = 0; oc < k.out_c; ++oc) {
      for (int ic = 0; ic < k.in_c; ++ic) {
        for (int ky = 0; ky < k.kh; ++ky) {
          for (int kx = 0; kx < k.kw; ++kx) {
            const double wv = k.wat(oc, ic, ky, kx);
            if (wv == 0.0) continue;
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * s + ky - p;
              if (iy < 0 || iy >= x.h) continue;
              const float* gr = go.row(in, oc, oy);
              double* girow =
                  gi.data() + ((static_cast<std::size_t>(in) * x.c + ic) * x.h + iy) * x.w;
              int lo = kx < p ? (p - kx + s - 1) / s : 0;
              int hi = std::min(ow - 1, (x.w - 1 + p - kx) / s);
              if (s == 1) {
                double* gir = girow + kx - p;
                for (int ox = lo; ox <= hi; ++ox) gir[ox] += wv * gr[ox];
              } else {
                for (int ox = lo; ox <= hi; ++ox) girow[ox * s + kx - p] += wv * gr[ox];
              }
            }
          }
        }
      }
    }
  }
  g.input = Tensor(x.n, x.c, x.h, x.w);
  for (std::size_t i = 0; i < gi.size(); ++i) g.input.v[i] = static_cast<float>(gi[i]);
  return g;
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (float& f : out.v) f = f > 0.0f ? f : 0.0f;
  return out;
}

Tensor relu_backward(const Tensor& x, const Tensor& go) {
  if (!x.same_shape(go)) {
    throw invalid_argument("relu_backward: shapes " + x.shape_str() + " vs " + go.shape_str());
  }
  Tensor g(go.n, go.c, go.h, go.w);
  for (std::size_t i = 0; i < g.size(); ++i) g.v[i] = x.v[i] > 0.0f ? go.v[i] : 0.0f;
  return g;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  for (float& f : out.v) f = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(f))));
  return out;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& go) {
  if (!y.same_shape(go)) {
    throw invalid_argument("sigmoid_backward: shapes " + y.shape_str() + " vs " + go.shape_str());
  }
  Tensor g(go.n, go.c, go.h, go.w);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double s = y.v[i];
    g.v[i] = static_cast<float>(s * (1.0 - s) * go.v[i]);
  }
  return g;
}

double mse_loss(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) {
    throw invalid_argument("mse_loss: shapes " + pred.shape_str() + " vs " + target.shape_str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred.v[i]) - target.v[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

Tensor mse_loss_grad(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) {
    throw invalid_argument("mse_loss_grad: shapes " + pred.shape_str() + " vs " +
                           target.shape_str());
  }
  Tensor g(pred.n, pred.c, pred.h, pred.w);
  const double scale = 2.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.v[i] = static_cast<float>(scale * (static_cast<double>(pred.v[i]) - target.v[i]));
  }
  return g;
}

Tensor downsample2(const Tensor& x) {
  if (x.h % 2 != 0 || x.w % 2 != 0) {
    throw invalid_argument("downsample2: spatial dims of " + x.shape_str() +
                           " not divisible by 2");
  }
  Tensor out(x.n, x.c, x.h / 2, x.w / 2);
  for (int in = 0; in < x.n; ++in) {
    for (int ic = 0; ic < x.c; ++ic) {
      for (int oy = 0; oy < out.h; ++oy) {
        const float* r0 = x.row(in, ic, 2 * oy);
        const float* r1 = x.row(in, ic, 2 * oy + 1);
        float* orow = out.row(in, ic, oy);
        for (int ox = 0; ox < out.w; ++ox) {
          const double s = static_cast<double>(r0[2 * ox]) + r0[2 * ox + 1] + r1[2 * ox] +
                           r1[2 * ox + 1];
          orow[ox] = static_cast<float>(s * 0.25);
        }
      }
    }
  }
  return out;
}

Tensor downsample2_backward(const Tensor& go) {
  Tensor g(go.n, go.c, go.h * 2, go.w * 2);
  for (int in = 0; in < go.n; ++in) {
    for (int ic = 0; ic < go.c; ++ic) {
      for (int oy = 0; oy < go.h; ++oy) {
        const float* gr = go.row(in, ic, oy);
        float* r0 = g.row(in, ic, 2 * oy);
        float* r1 = g.row(in, ic, 2 * oy + 1);
        for (int ox = 0; ox < go.w; ++ox) {
          const float q = gr[ox] * 0.25f;
          r0[2 * ox] = q;
          r0[2 * ox + 1] = q;
          r1[2 * ox] = q;
          r1[2 * ox + 1] = q;
        }
      }
    }
  }
  return g;
}

Tensor upsample_nearest(const Tensor& x, int factor) {
  if (factor < 1) throw invalid_argument("upsample_nearest: factor must be >= 1");
  if (factor == 1) return x;
  Tensor out(x.n, x.c, x.h * factor, x.w * factor);
  for (int in = 0; in < x.n; ++in) {
    for (int ic = 0; ic < x.c; ++ic) {
      for (int iy = 0; iy < x.h; ++iy) {
        const float* xr = x.row(in, ic, iy);
        for (int fy = 0; fy < factor; ++fy) {
          float* orow = out.row(in, ic, iy * factor + fy);
          for (int ix = 0; ix < x.w; ++ix) {
            for (int fx = 0; fx < factor; ++fx) orow[ix * factor + fx] = xr[ix];
          }
        }
      }
    }
  }
  return out;
}

Tensor upsample_nearest_backward(const Tensor& go, int factor) {
  if (factor < 1) throw invalid_argument("upsample_nearest_backward: factor must be >= 1");
  if (factor == 1) return go;
  if (go.h % factor != 0 || go.w % factor != 0) {
    throw invalid_argument("upsample_nearest_backward: grad dims " + go.shape_str() +
                           " not divisible by factor " + std::to_string(factor));
  }
  Tensor g(go.n, go.c, go.h / factor, go.w / factor);
  for (int in = 0; in < go.n; ++in) {
    for (int ic = 0; ic < go.c; ++ic) {
      for (int iy = 0; iy < g.h; ++iy) {
        float* gr = g.row(in, ic, iy);
        for (int ix = 0; ix < g.w; ++ix) {
          double acc = 0.0;
          for (int fy = 0; fy < factor; ++fy) {
            const float* orow = go.row(in, ic, iy * factor + fy);
            for (int fx = 0; fx < factor; ++fx) acc += orow[ix * factor + fx];
          }
          gr[ix] = static_cast<float>(acc);
        }
      }
    }
  }
  return g;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw invalid_argument("add: shapes " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += b.v[i];
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w) {
    throw invalid_argument("concat_channels: shapes " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor out(a.n, a.c + b.c, a.h, a.w);
  const std::size_t plane = static_cast<std::size_t>(a.h) * a.w;
  for (int in = 0; in < a.n; ++in) {
    std::copy_n(a.v.data() + static_cast<std::size_t>(in) * a.c * plane, a.c * plane,
                out.v.data() + static_cast<std::size_t>(in) * out.c * plane);
    std::copy_n(b.v.data() + static_cast<std::size_t>(in) * b.c * plane, b.c * plane,
                out.v.data() + (static_cast<std::size_t>(in) * out.c + a.c) * plane);
  }
  return out;
}

Tensor slice_channels(const Tensor& x, int c_begin, int c_end) {
  if (c_begin < 0 || c_end > x.c || c_begin >= c_end) {
    throw invalid_argument("slice_channels: range [" + std::to_string(c_begin) + "," +
                           std::to_string(c_end) + ") out of " + std::to_string(x.c));
  }
  Tensor out(x.n, c_end - c_begin, x.h, x.w);
  const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
  for (int in = 0; in < x.n; ++in) {
    std::copy_n(x.v.data() + (static_cast<std::size_t>(in) * x.c + c_begin) * plane,
                static_cast<std::size_t>(out.c) * plane,
                out.v.data() + static_cast<std::size_t>(in) * out.c * plane);
  }
  return out;
}

AdamState make_adam_state(const std::vector<ParamView>& params, double lr) {
  AdamState st;
  st.lr = lr;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const ParamView& p : params) {
    st.m.emplace_back(p.size, 0.0f);
    st.v.emplace_back(p.size, 0.0f);
  }
  return st;
}

void adam_step(const std::vector<ParamView>& params,
               const std::vector<std::span<const float>>& grads, AdamState& st) {
  if (params.size() != grads.size() || params.size() != st.m.size()) {
    throw invalid_argument("adam_step: parameter/gradient/state count mismatch");
  }
  st.step += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t ip = 0; ip < params.size(); ++ip) {
    const ParamView& p = params[ip];
    if (grads[ip].size() != p.size || st.m[ip].size() != p.size) {
      throw invalid_argument("adam_step: shape mismatch for parameter " + p.name);
    }
    float* m = st.m[ip].data();
    float* vv = st.v[ip].data();
    const float* g = grads[ip].data();
    for (std::size_t i = 0; i < p.size; ++i) {
      const double gi = g[i];
      const double mi = st.beta1 * m[i] + (1.0 - st.beta1) * gi;
      const double vi = st.beta2 * vv[i] + (1.0 - st.beta2) * gi * gi;
      m[i] = static_cast<float>(mi);
      vv[i] = static_cast<float>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      p.data[i] = static_cast<float>(p.data[i] - st.lr * mhat / (std::sqrt(vhat) + st.eps));
    }
  }
}

}  // namespace afdm
