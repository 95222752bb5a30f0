#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include "hjbpinn/error.hpp"
#include "hjbpinn/kernels.hpp"

namespace hjbpinn::kernels {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelTable* resolve(std::string_view name) {
  if (name == "scalar") return &scalar_table();
  if (name == "avx2") {
    if (avx2_table() == nullptr) throw InvalidArgument("avx2 kernels were not compiled into this build");
    if (!cpu_has_avx2()) throw InvalidArgument("this CPU does not support AVX2+FMA");
    return avx2_table();
  }
  if (name == "auto") {
    return (avx2_table() != nullptr && cpu_has_avx2()) ? avx2_table() : &scalar_table();
  }
  throw InvalidArgument("unknown kernel '" + std::string(name) + "' (expected scalar, avx2 or auto)");
}

const KernelTable* initial() {
  const char* env = std::getenv("HJBPINN_KERNEL");
  return resolve(env != nullptr && *env != '\0' ? std::string_view(env) : std::string_view("auto"));
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial()};
  return table;
}

int padded(int k) { return (k + kLanes - 1) / kLanes * kLanes; }

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(std::string_view name) { current().store(resolve(name), std::memory_order_release); }

PackedNet::PackedNet(const NetworkParams& p) { repack(p); }

void PackedNet::repack(const NetworkParams& p) {
  const int kp = padded(p.k);
  const auto kps = static_cast<std::size_t>(kp);
  if (view_.k != p.k || view_.n != p.n) {
    a_.assign(kps, 0.0);
    w2_.assign(kps, 0.0);
    cols_.assign(kps * static_cast<std::size_t>(p.n), 0.0);
    rowsq_.assign(kps, 0.0);
    z_.assign(kps, 0.0);
    s1_.assign(kps, 0.0);
    s2_.assign(kps, 0.0);
    s3_.assign(kps, 0.0);
  }
  view_.k = p.k;
  view_.n = p.n;
  view_.kp = kp;
  view_.activation = p.activation;
  for (int q = 0; q < p.k; ++q) {
    const auto qs = static_cast<std::size_t>(q);
    a_[qs] = p.a[qs];
    w2_[qs] = p.w2[qs];
    double sq = 0.0;
    for (int i = 0; i < p.n; ++i) {
      const double w = p.w1(q, i);
      cols_[static_cast<std::size_t>(i) * kps + qs] = w;
      sq += w * w;
    }
    rowsq_[qs] = sq;
  }
  bind();
}

void PackedNet::bind() {
  view_.a = a_.data();
  view_.w2 = w2_.data();
  view_.cols = cols_.data();
  view_.rowsq = rowsq_.data();
  scratch_ = {z_.data(), s1_.data(), s2_.data(), s3_.data()};
}

GradView PackedNet::grad_view(std::vector<double>& buffer) const {
  if (buffer.size() != grad_size()) buffer.assign(grad_size(), 0.0);
  const auto off = static_cast<std::size_t>(view_.kp) * static_cast<std::size_t>(view_.n);
  return {buffer.data(), buffer.data() + off};
}

void PackedNet::add_to_flat(const std::vector<double>& buffer, std::vector<double>& flat) const {
  const auto k = static_cast<std::size_t>(view_.k);
  const auto n = static_cast<std::size_t>(view_.n);
  const auto kp = static_cast<std::size_t>(view_.kp);
  for (std::size_t q = 0; q < k; ++q) {
    for (std::size_t i = 0; i < n; ++i) flat[q * n + i] += buffer[i * kp + q];
    flat[k * n + q] += buffer[n * kp + q];
  }
}

}  // namespace hjbpinn::kernels
