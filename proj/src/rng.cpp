#include "lsam/rng.hpp"

#include <cmath>

namespace lsam {
namespace {

constexpr double kZigR = 3.442619855899;  // start of the ziggurat tail

struct ZigTables {
  std::uint32_t kn[128];
  double wn[128];
  double fn[128];

  ZigTables() {
    const double m1 = 2147483648.0;  // 2^31
    double dn = kZigR;
    double tn = dn;
    const double vn = 9.91256303526217e-3;

    const double q = vn / std::exp(-0.5 * dn * dn);
    kn[0] = static_cast<std::uint32_t>((dn / q) * m1);
    kn[1] = 0;
    wn[0] = q / m1;
    wn[127] = dn / m1;
    fn[0] = 1.0;
    fn[127] = std::exp(-0.5 * dn * dn);
    for (int i = 126; i >= 1; --i) {
      dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
      kn[i + 1] = static_cast<std::uint32_t>((dn / tn) * m1);
      tn = dn;
      fn[i] = std::exp(-0.5 * dn * dn);
      wn[i] = dn / m1;
    }
  }
};

const ZigTables kZig;

}  // namespace

Rng::Rng(std::uint64_t seed) noexcept {
  // Expand the seed through SplitMix64 so any seed (including 0) yields a
  // valid, well-spread state.
  std::uint64_t st = seed;
  for (auto& word : s_) {
    st += 0x9E3779B97F4A7C15ULL;
    word = splitmix_finalize(st);
  }
}

double Rng::normal() noexcept {
  for (;;) {
    const auto hz =
        static_cast<std::int32_t>(static_cast<std::uint32_t>(next_u64()));
    const std::uint32_t iz = static_cast<std::uint32_t>(hz) & 127u;
    const auto ahz = static_cast<std::uint32_t>(
        hz < 0 ? -static_cast<std::int64_t>(hz) : hz);
    if (ahz < kZig.kn[iz]) return hz * kZig.wn[iz];
    if (iz == 0) return normal_tail(hz < 0);
    const double x = hz * kZig.wn[iz];
    if (kZig.fn[iz] + uniform() * (kZig.fn[iz - 1] - kZig.fn[iz]) <
        std::exp(-0.5 * x * x)) {
      return x;
    }
  }
}

double Rng::normal_tail(bool negative) noexcept {
  double x;
  double y;
  do {
    x = -std::log(uniform_open()) / kZigR;
    y = -std::log(uniform_open());
  } while (y + y < x * x);
  return negative ? -(kZigR + x) : (kZigR + x);
}

}  // namespace lsam
