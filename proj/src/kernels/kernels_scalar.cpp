#include "hjbpinn/kernels.hpp"

namespace hjbpinn::kernels {

namespace {

void pre_activation(const NetView& net, const double* x, double t, double* z) {
  for (int q = 0; q < net.kp; ++q) z[q] = net.w2[q] * t;
  for (int i = 0; i < net.n; ++i) {
    const double* col = net.cols + static_cast<std::ptrdiff_t>(i) * net.kp;
    for (int q = 0; q < net.kp; ++q) z[q] += col[q] * x[i];
  }
}

double value(const NetView& net, const double* x, double t, const Scratch& ws) {
  pre_activation(net, x, t, ws.z);
  double h = 0.0;
  for (int q = 0; q < net.kp; ++q) {
    const auto d = eval_derivatives(net.activation, ws.z[q]);
    h += net.a[q] * d.value;
    ws.s1[q] = net.a[q] * d.d1;
  }
  return h;
}

void derivs(const NetView& net, const double* x, double t, const Scratch& ws, PointOut& out, double* grad_x) {
  pre_activation(net, x, t, ws.z);
  double h = 0.0, dt = 0.0, lap = 0.0;
  for (int q = 0; q < net.kp; ++q) {
    const auto d = eval_derivatives(net.activation, ws.z[q]);
    ws.s1[q] = net.a[q] * d.d1;
    ws.s2[q] = net.a[q] * d.d2;
    ws.s3[q] = net.a[q] * d.d3;
    h += net.a[q] * d.value;
    dt += ws.s1[q] * net.w2[q];
    lap += ws.s2[q] * net.rowsq[q];
  }
  for (int i = 0; i < net.n; ++i) {
    const double* col = net.cols + static_cast<std::ptrdiff_t>(i) * net.kp;
    double g = 0.0;
    for (int q = 0; q < net.kp; ++q) g += ws.s1[q] * col[q];
    grad_x[i] = g;
  }
  out.value = h;
  out.dt = dt;
  out.laplacian = lap;
}

void backprop_value(const NetView& net, const double* x, double t, const Scratch& ws, double g_value,
                    const GradView& grad) {
  for (int i = 0; i < net.n; ++i) {
    double* gc = grad.gcols + static_cast<std::ptrdiff_t>(i) * net.kp;
    const double c = g_value * x[i];
    for (int q = 0; q < net.kp; ++q) gc[q] += c * ws.s1[q];
  }
  const double c = g_value * t;
  for (int q = 0; q < net.kp; ++q) grad.gw2[q] += c * ws.s1[q];
}

void backprop(const NetView& net, const double* x, double t, const Scratch& ws, double g_value, double g_dt,
              const double* g_grad_x, double g_laplacian, const GradView& grad) {
  // ws.z is reused to hold dL/dz once the pre-activations are no longer needed.
  double* dz = ws.z;
  for (int q = 0; q < net.kp; ++q) {
    dz[q] = g_value * ws.s1[q] + g_dt * ws.s2[q] * net.w2[q] + g_laplacian * ws.s3[q] * net.rowsq[q];
  }
  for (int i = 0; i < net.n; ++i) {
    const double* col = net.cols + static_cast<std::ptrdiff_t>(i) * net.kp;
    for (int q = 0; q < net.kp; ++q) dz[q] += ws.s2[q] * g_grad_x[i] * col[q];
  }
  for (int i = 0; i < net.n; ++i) {
    const double* col = net.cols + static_cast<std::ptrdiff_t>(i) * net.kp;
    double* gc = grad.gcols + static_cast<std::ptrdiff_t>(i) * net.kp;
    for (int q = 0; q < net.kp; ++q) {
      gc[q] += dz[q] * x[i] + g_grad_x[i] * ws.s1[q] + 2.0 * g_laplacian * ws.s2[q] * col[q];
    }
  }
  for (int q = 0; q < net.kp; ++q) grad.gw2[q] += dz[q] * t + g_dt * ws.s1[q];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", &value, &derivs, &backprop_value, &backprop};
  return table;
}

}  // namespace hjbpinn::kernels
