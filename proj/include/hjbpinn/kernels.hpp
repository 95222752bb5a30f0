#pragma once

// Batched per-point evaluation of the shallow network, vectorized over the
// hidden units. Two implementations share the same POD interface: a scalar
// reference and an AVX2+FMA variant chosen at runtime. Their outputs agree to
// rounding (see tests/test_kernels.cpp); each one is deterministic on its own.

#include <cstddef>
#include <string_view>
#include <vector>

#include "hjbpinn/activation.hpp"
#include "hjbpinn/network.hpp"

namespace hjbpinn::kernels {

inline constexpr int kLanes = 4;

/// Raw views handed to a kernel. All arrays have length kp (k rounded up to a
/// multiple of kLanes), zero padded. cols is column-major: cols[i * kp + q]
/// holds W1[q][i].
struct NetView {
  int k = 0;
  int n = 0;
  int kp = 0;
  ActivationKind activation = ActivationKind::Tanh;
  const double* a = nullptr;
  const double* w2 = nullptr;
  const double* cols = nullptr;
  const double* rowsq = nullptr;
};

/// Per-point scratch, each array of length kp. After a value pass s1 holds
/// a*sigma'; after a full pass s1, s2, s3 hold a*sigma', a*sigma'', a*sigma'''.
struct Scratch {
  double* z = nullptr;
  double* s1 = nullptr;
  double* s2 = nullptr;
  double* s3 = nullptr;
};

/// Gradient accumulators in kernel layout: gcols (n * kp) and gw2 (kp).
struct GradView {
  double* gcols = nullptr;
  double* gw2 = nullptr;
};

/// value, dt, grad_x (n entries written to the caller's buffer), laplacian.
struct PointOut {
  double value = 0.0;
  double dt = 0.0;
  double laplacian = 0.0;
};

struct KernelTable {
  const char* name;
  double (*value)(const NetView& net, const double* x, double t, const Scratch& ws);
  void (*derivs)(const NetView& net, const double* x, double t, const Scratch& ws, PointOut& out,
                 double* grad_x);
  /// Accumulates g_value * d(value)/dw. Requires a preceding value or derivs call.
  void (*backprop_value)(const NetView& net, const double* x, double t, const Scratch& ws, double g_value,
                         const GradView& grad);
  /// Accumulates the full chain rule. Requires a preceding derivs call.
  void (*backprop)(const NetView& net, const double* x, double t, const Scratch& ws, double g_value,
                   double g_dt, const double* g_grad_x, double g_laplacian, const GradView& grad);
};

const KernelTable& scalar_table();
/// nullptr when the binary was built without AVX2 support.
const KernelTable* avx2_table();
bool cpu_has_avx2();

/// Table used by the library. Chosen once from HJBPINN_KERNEL
/// (scalar | avx2 | auto, default auto) unless overridden by select().
const KernelTable& active();
/// Throws InvalidArgument for an unknown name or an unsupported kernel.
void select(std::string_view name);

/// Owns the packed weights, scratch and gradient buffers for one network.
class PackedNet {
 public:
  explicit PackedNet(const NetworkParams& p);
  PackedNet(const PackedNet&) = delete;
  PackedNet& operator=(const PackedNet&) = delete;
  PackedNet(PackedNet&&) noexcept = default;
  PackedNet& operator=(PackedNet&&) noexcept = default;

  void repack(const NetworkParams& p);

  const NetView& view() const { return view_; }
  const Scratch& scratch() const { return scratch_; }
  GradView grad_view(std::vector<double>& buffer) const;

  /// Buffer length for one gradient accumulator in kernel layout.
  std::size_t grad_size() const { return static_cast<std::size_t>(view_.kp) * static_cast<std::size_t>(view_.n + 1); }

  /// Converts a kernel-layout gradient to flat order (W1 row-major, then w2), adding into flat.
  void add_to_flat(const std::vector<double>& buffer, std::vector<double>& flat) const;

 private:
  void bind();

  NetView view_;
  Scratch scratch_;
  std::vector<double> a_, w2_, cols_, rowsq_;
  std::vector<double> z_, s1_, s2_, s3_;
};

}  // namespace hjbpinn::kernels
