#include "mcgan/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace mcgan::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

struct ConvGeometry {
  int channels, height, width;  // image side
  int kernel, stride, pad;
  int out_h, out_w;             // column side
  int rows() const { return channels * kernel * kernel; }
  int cols() const { return out_h * out_w; }
};

// Output columns [lo, hi) whose input column ox*s - p + kx lies inside [0, width).
struct ColumnRange {
  int lo, hi;
};

ColumnRange valid_columns(const ConvGeometry& g, int kx) {
  const int off = kx - g.pad;
  int lo = off >= 0 ? 0 : (-off + g.stride - 1) / g.stride;
  int hi = g.width - 1 - off < 0 ? 0 : (g.width - 1 - off) / g.stride + 1;
  hi = std::min(hi, g.out_w);
  lo = std::min(lo, hi);
  return {lo, hi};
}

// cols[(c*k + ky)*k + kx][oy*out_w + ox] = image[c][oy*s - p + ky][ox*s - p + kx]
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* cols) {
  const std::size_t ncols = static_cast<std::size_t>(g.cols());
  for (int c = 0; c < g.channels; ++c) {
    const T* plane = image + static_cast<std::size_t>(c) * g.height * g.width;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        T* row = cols + (static_cast<std::size_t>(c * g.kernel + ky) * g.kernel + kx) * ncols;
        const auto [lo, hi] = valid_columns(g, kx);
        const int off = kx - g.pad;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          T* dst = row + static_cast<std::size_t>(oy) * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.width;
          std::fill(dst, dst + lo, T(0));
          if (g.stride == 1) {
            std::copy(src + lo + off, src + hi + off, dst + lo);
          } else {
            for (int ox = lo; ox < hi; ++ox) dst[ox] = src[ox * g.stride + off];
          }
          std::fill(dst + hi, dst + g.out_w, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* image) {
  const std::size_t ncols = static_cast<std::size_t>(g.cols());
  for (int c = 0; c < g.channels; ++c) {
    T* plane = image + static_cast<std::size_t>(c) * g.height * g.width;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const T* row = cols + (static_cast<std::size_t>(c * g.kernel + ky) * g.kernel + kx) * ncols;
        const auto [lo, hi] = valid_columns(g, kx);
        const int off = kx - g.pad;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.height) continue;
          const T* src = row + static_cast<std::size_t>(oy) * g.out_w;
          T* dst = plane + static_cast<std::size_t>(iy) * g.width;
          if (g.stride == 1) {
            for (int ox = lo; ox < hi; ++ox) dst[ox + off] += src[ox];
          } else {
            for (int ox = lo; ox < hi; ++ox) dst[ox * g.stride + off] += src[ox];
          }
        }
      }
    }
  }
}

void require_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.size() != rank) throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " + shape_string(s));
}

template <typename T, typename F, typename D>
Var<T> unary(const Var<T>& x, F f, D dfdx) {
  const auto& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return make_op<T>(std::move(out), {x}, [dfdx](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    Tensor<T> g(in.value.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * dfdx(in.value[i], self.value[i]);
    in.accumulate(g);
  });
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad) {
  require_rank(x.shape(), 3, "conv2d input");
  require_rank(weight.shape(), 4, "conv2d weight");
  const int cin = x.value().channels();
  const int cout = weight.value().dim(0);
  const int k = weight.value().dim(2);
  if (weight.value().dim(1) != cin || weight.value().dim(3) != k)
    throw ShapeError("conv2d: weight " + shape_string(weight.shape()) + " incompatible with input " + shape_string(x.shape()));
  if (bias.value().size() != static_cast<std::size_t>(cout)) throw ShapeError("conv2d: bias size mismatch");
  const ConvGeometry g{cin, x.value().height(), x.value().width(), k, stride, pad,
                       conv_out_size(x.value().height(), k, stride, pad), conv_out_size(x.value().width(), k, stride, pad)};
  if (g.out_h <= 0 || g.out_w <= 0) throw ShapeError("conv2d: empty output for input " + shape_string(x.shape()));

  auto cols = std::make_shared<AlignedVector<T>>(static_cast<std::size_t>(g.rows()) * g.cols());
  im2col(x.value().data(), g, cols->data());

  Tensor<T> out(Shape{cout, g.out_h, g.out_w});
  MapMat<T> out_m(out.data(), cout, g.cols());
  out_m.noalias() = CMapMat<T>(weight.value().data(), cout, g.rows()) * CMapMat<T>(cols->data(), g.rows(), g.cols());
  for (int o = 0; o < cout; ++o) out_m.row(o).array() += bias.value()[static_cast<std::size_t>(o)];

  return make_op<T>(std::move(out), {x, weight, bias}, [g, cout, cols](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    Node<T>& w = *self.parents[1];
    Node<T>& b = *self.parents[2];
    CMapMat<T> dout(self.grad.data(), cout, g.cols());
    if (w.requires_grad) {
      MapMat<T> dw(w.grad_buffer().data(), cout, g.rows());
      dw.noalias() += dout * CMapMat<T>(cols->data(), g.rows(), g.cols()).transpose();
    }
    if (b.requires_grad) {
      T* db = b.grad_buffer().data();
      for (int o = 0; o < cout; ++o) db[o] += dout.row(o).sum();
    }
    if (in.requires_grad) {
      RowMat<T> dcols = CMapMat<T>(w.value.data(), cout, g.rows()).transpose() * dout;
      col2im(dcols.data(), g, in.grad_buffer().data());
    }
  });
}

template <typename T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad,
                        int output_padding) {
  require_rank(x.shape(), 3, "conv_transpose2d input");
  require_rank(weight.shape(), 4, "conv_transpose2d weight");
  const int cin = x.value().channels();
  const int cout = weight.value().dim(1);
  const int k = weight.value().dim(2);
  if (weight.value().dim(0) != cin || weight.value().dim(3) != k)
    throw ShapeError("conv_transpose2d: weight " + shape_string(weight.shape()) + " incompatible with input " +
                     shape_string(x.shape()));
  if (bias.value().size() != static_cast<std::size_t>(cout)) throw ShapeError("conv_transpose2d: bias size mismatch");
  if (output_padding >= stride) throw ShapeError("conv_transpose2d: output_padding must be < stride");
  const int h = x.value().height();
  const int wd = x.value().width();
  // Geometry of the equivalent forward conv, whose input is our output.
  const ConvGeometry g{cout, conv_transpose_out_size(h, k, stride, pad, output_padding),
                       conv_transpose_out_size(wd, k, stride, pad, output_padding), k, stride, pad, h, wd};
  if (g.height <= 0 || g.width <= 0) throw ShapeError("conv_transpose2d: empty output");

  RowMat<T> cols = CMapMat<T>(weight.value().data(), cin, g.rows()).transpose() *
                   CMapMat<T>(x.value().data(), cin, g.cols());
  Tensor<T> out(Shape{cout, g.height, g.width});
  col2im(cols.data(), g, out.data());
  const std::size_t plane = static_cast<std::size_t>(g.height) * g.width;
  for (int o = 0; o < cout; ++o) {
    const T bo = bias.value()[static_cast<std::size_t>(o)];
    T* p = out.data() + o * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] += bo;
  }

  return make_op<T>(std::move(out), {x, weight, bias}, [g, cin, cout, plane](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    Node<T>& w = *self.parents[1];
    Node<T>& b = *self.parents[2];
    AlignedVector<T> dcols(static_cast<std::size_t>(g.rows()) * g.cols());
    im2col(self.grad.data(), g, dcols.data());
    CMapMat<T> dcols_m(dcols.data(), g.rows(), g.cols());
    if (w.requires_grad) {
      MapMat<T> dw(w.grad_buffer().data(), cin, g.rows());
      dw.noalias() += CMapMat<T>(in.value.data(), cin, g.cols()) * dcols_m.transpose();
    }
    if (b.requires_grad) {
      T* db = b.grad_buffer().data();
      for (int o = 0; o < cout; ++o) {
        const T* p = self.grad.data() + o * plane;
        T s = 0;
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
        db[o] += s;
      }
    }
    if (in.requires_grad) {
      MapMat<T> dx(in.grad_buffer().data(), cin, g.cols());
      dx.noalias() += CMapMat<T>(w.value.data(), cin, g.rows()) * dcols_m;
    }
  });
}

template <typename T>
Var<T> instance_norm(const Var<T>& x, T eps) {
  require_rank(x.shape(), 3, "instance_norm");
  const auto& xv = x.value();
  const int c = xv.channels();
  const std::size_t plane = static_cast<std::size_t>(xv.height()) * xv.width();
  Tensor<T> out(xv.shape());
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(c));
  for (int ch = 0; ch < c; ++ch) {
    const T* p = xv.data() + ch * plane;
    T m = 0;
    for (std::size_t i = 0; i < plane; ++i) m += p[i];
    m /= static_cast<T>(plane);
    T var = 0;
    for (std::size_t i = 0; i < plane; ++i) var += (p[i] - m) * (p[i] - m);
    var /= static_cast<T>(plane);
    const T is = T(1) / std::sqrt(var + eps);
    (*inv_std)[static_cast<std::size_t>(ch)] = is;
    T* o = out.data() + ch * plane;
    for (std::size_t i = 0; i < plane; ++i) o[i] = (p[i] - m) * is;
  }
  return make_op<T>(std::move(out), {x}, [c, plane, inv_std](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    Tensor<T> g(in.value.shape());
    for (int ch = 0; ch < c; ++ch) {
      const T* dy = self.grad.data() + ch * plane;
      const T* y = self.value.data() + ch * plane;
      T mdy = 0, mdyy = 0;
      for (std::size_t i = 0; i < plane; ++i) {
        mdy += dy[i];
        mdyy += dy[i] * y[i];
      }
      mdy /= static_cast<T>(plane);
      mdyy /= static_cast<T>(plane);
      const T is = (*inv_std)[static_cast<std::size_t>(ch)];
      T* gx = g.data() + ch * plane;
      for (std::size_t i = 0; i < plane; ++i) gx[i] = is * (dy[i] - mdy - y[i] * mdyy);
    }
    in.accumulate(g);
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  return unary<T>(x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  return unary<T>(
      x, [slope](T v) { return v > T(0) ? v : slope * v; }, [slope](T v, T) { return v > T(0) ? T(1) : slope; });
}

template <typename T>
Var<T> tanh(const Var<T>& x) {
  return unary<T>(x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  return unary<T>(
      x, [](T v) { return T(1) / (T(1) + std::exp(-v)); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("add: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_op<T>(std::move(out), {a, b}, [](Node<T>& self) {
    for (auto& p : self.parents)
      if (p->requires_grad) p->accumulate(self.grad);
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * factor;
  return make_op<T>(std::move(out), {a}, [factor](Node<T>& self) {
    Tensor<T> g(self.grad.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * factor;
    self.parents[0]->accumulate(g);
  });
}

template <typename T>
Var<T> mul_constant(const Var<T>& a, const Tensor<T>& mask) {
  if (a.shape() != mask.shape()) throw ShapeError("mul_constant: shape mismatch");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * mask[i];
  return make_op<T>(std::move(out), {a}, [mask](Node<T>& self) {
    Tensor<T> g(self.grad.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * mask[i];
    self.parents[0]->accumulate(g);
  });
}

template <typename T>
Var<T> avg_pool(const Var<T>& x, int factor) {
  require_rank(x.shape(), 3, "avg_pool");
  const auto& xv = x.value();
  const int c = xv.channels(), h = xv.height(), w = xv.width();
  if (factor < 1 || h % factor != 0 || w % factor != 0)
    throw ShapeError("avg_pool: " + shape_string(xv.shape()) + " not divisible by " + std::to_string(factor));
  if (factor == 1) return x;
  const int oh = h / factor, ow = w / factor;
  const T norm = T(1) / static_cast<T>(factor * factor);
  Tensor<T> out(Shape{c, oh, ow});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) out.at(ch, y / factor, xx / factor) += xv.at(ch, y, xx);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= norm;
  return make_op<T>(std::move(out), {x}, [c, h, w, factor, norm](Node<T>& self) {
    Tensor<T> g(Shape{c, h, w});
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) g.at(ch, y, xx) = self.grad.at(ch, y / factor, xx / factor) * norm;
    self.parents[0]->accumulate(g);
  });
}

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  require_rank(a.shape(), 3, "concat_channels");
  require_rank(b.shape(), 3, "concat_channels");
  if (a.value().height() != b.value().height() || a.value().width() != b.value().width())
    throw ShapeError("concat_channels: spatial mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  const int ca = a.value().channels(), cb = b.value().channels();
  Tensor<T> out(Shape{ca + cb, a.value().height(), a.value().width()});
  std::copy(a.value().storage().begin(), a.value().storage().end(), out.storage().begin());
  std::copy(b.value().storage().begin(), b.value().storage().end(),
            out.storage().begin() + static_cast<std::ptrdiff_t>(a.value().size()));
  const std::size_t na = a.value().size();
  return make_op<T>(std::move(out), {a, b}, [na](Node<T>& self) {
    Node<T>& pa = *self.parents[0];
    Node<T>& pb = *self.parents[1];
    if (pa.requires_grad) {
      Tensor<T> g(pa.value.shape(), typename Tensor<T>::Storage(self.grad.storage().begin(), self.grad.storage().begin() + na));
      pa.accumulate(g);
    }
    if (pb.requires_grad) {
      Tensor<T> g(pb.value.shape(), typename Tensor<T>::Storage(self.grad.storage().begin() + na, self.grad.storage().end()));
      pb.accumulate(g);
    }
  });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  T s = 0;
  for (T v : x.value().values()) s += v;
  const T n = static_cast<T>(x.value().size());
  return make_op<T>(Tensor<T>::scalar(s / n), {x}, [n](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    in.accumulate(Tensor<T>(in.value.shape(), self.grad[0] / n));
  });
}

template <typename T>
Var<T> sum(const std::vector<Var<T>>& terms) {
  T s = 0;
  for (const auto& t : terms) s += t.item();
  return make_op<T>(Tensor<T>::scalar(s), terms, [](Node<T>& self) {
    for (auto& p : self.parents)
      if (p->requires_grad) p->accumulate(self.grad);
  });
}

namespace {

template <typename T>
Var<T> neg_mean_log_impl(const Var<T>& x, T eps, std::size_t* clamped, bool complement) {
  const auto& xv = x.value();
  const T n = static_cast<T>(xv.size());
  const T lo = eps, hi = T(1) - eps;
  T s = 0;
  for (T v : xv.values()) {
    T c = v;  // NaN passes through so callers can detect it
    if (c < lo) c = lo;
    if (c > hi) c = hi;
    if (c != v && clamped) ++*clamped;
    s += std::log(complement ? T(1) - c : c);
  }
  return make_op<T>(Tensor<T>::scalar(-s / n), {x}, [n, lo, hi, complement](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    Tensor<T> g(in.value.shape());
    const T up = self.grad[0];
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T v = in.value[i];
      if (v < lo || v > hi) continue;  // clamped: flat
      g[i] = complement ? up / (n * (T(1) - v)) : -up / (n * v);
    }
    in.accumulate(g);
  });
}

}  // namespace

template <typename T>
Var<T> neg_mean_log(const Var<T>& x, T eps, std::size_t* clamped) {
  return neg_mean_log_impl(x, eps, clamped, false);
}

template <typename T>
Var<T> neg_mean_log1m(const Var<T>& x, T eps, std::size_t* clamped) {
  return neg_mean_log_impl(x, eps, clamped, true);
}

template <typename T>
Var<T> l1_mean(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("l1_mean: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  const auto& av = a.value();
  const auto& bv = b.value();
  T s = 0;
  for (std::size_t i = 0; i < av.size(); ++i) s += std::abs(av[i] - bv[i]);
  const T n = static_cast<T>(av.size());
  return make_op<T>(Tensor<T>::scalar(s / n), {a, b}, [n](Node<T>& self) {
    Node<T>& pa = *self.parents[0];
    Node<T>& pb = *self.parents[1];
    Tensor<T> g(pa.value.shape());
    const T up = self.grad[0] / n;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T d = pa.value[i] - pb.value[i];
      g[i] = d > T(0) ? up : (d < T(0) ? -up : T(0));
    }
    if (pa.requires_grad) pa.accumulate(g);
    if (pb.requires_grad) {
      for (auto& v : g.storage()) v = -v;
      pb.accumulate(g);
    }
  });
}

#define MCGAN_INSTANTIATE_OPS(T)                                                            \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, int, int);            \
  template Var<T> conv_transpose2d(const Var<T>&, const Var<T>&, const Var<T>&, int, int, int); \
  template Var<T> instance_norm(const Var<T>&, T);                                          \
  template Var<T> relu(const Var<T>&);                                                      \
  template Var<T> leaky_relu(const Var<T>&, T);                                             \
  template Var<T> tanh(const Var<T>&);                                                      \
  template Var<T> sigmoid(const Var<T>&);                                                   \
  template Var<T> add(const Var<T>&, const Var<T>&);                                        \
  template Var<T> scale(const Var<T>&, T);                                                  \
  template Var<T> mul_constant(const Var<T>&, const Tensor<T>&);                            \
  template Var<T> avg_pool(const Var<T>&, int);                                             \
  template Var<T> concat_channels(const Var<T>&, const Var<T>&);                            \
  template Var<T> mean(const Var<T>&);                                                      \
  template Var<T> sum(const std::vector<Var<T>>&);                                          \
  template Var<T> neg_mean_log(const Var<T>&, T, std::size_t*);                             \
  template Var<T> neg_mean_log1m(const Var<T>&, T, std::size_t*);                           \
  template Var<T> l1_mean(const Var<T>&, const Var<T>&);

MCGAN_INSTANTIATE_OPS(float)
MCGAN_INSTANTIATE_OPS(double)

}  // namespace mcgan::nn
