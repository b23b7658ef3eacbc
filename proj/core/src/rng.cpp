#include "cooplsvi/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace cooplsvi {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {
std::uint64_t combine(std::uint64_t seed, std::uint64_t v) {
  return mix64(seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}
}  // namespace

RngStream::RngStream(std::uint64_t master, StreamKind kind, std::uint64_t a,
                     std::uint64_t b, std::uint64_t c) {
  std::uint64_t k = mix64(master);
  k = combine(k, static_cast<std::uint64_t>(kind));
  k = combine(k, a);
  k = combine(k, b);
  k = combine(k, c);
  key_ = k;
}

std::uint64_t RngStream::next_u64() { return mix64(key_ + 0x632be59bd9b4e019ULL * ++counter_); }

double RngStream::next_uniform() {
  // 53 high bits -> double in [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int RngStream::next_index(int n) {
  if (n <= 0) throw std::invalid_argument("RngStream::next_index: n must be positive");
  int i = static_cast<int>(next_uniform() * n);
  return i < n ? i : n - 1;
}

double RngStream::next_gaussian() {
  double u1 = 1.0 - next_uniform();  // (0, 1]
  double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double RngStream::next_gamma(double shape) {
  if (shape <= 0.0) throw std::invalid_argument("RngStream::next_gamma: shape must be positive");
  if (shape < 1.0) {
    double u = 1.0 - next_uniform();
    return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = next_gaussian();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = 1.0 - next_uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

Eigen::VectorXd RngStream::next_dirichlet(int dim, double alpha) {
  if (dim <= 0) throw std::invalid_argument("RngStream::next_dirichlet: dim must be positive");
  Eigen::VectorXd g(dim);
  for (int i = 0; i < dim; ++i) {
    // Dirichlet(1) is uniform on the simplex; exponentials avoid the
    // rejection loop in that common case.
    g[i] = alpha == 1.0 ? -std::log(1.0 - next_uniform()) : next_gamma(alpha);
  }
  double total = g.sum();
  if (total <= 0.0) return Eigen::VectorXd::Constant(dim, 1.0 / dim);
  return g / total;
}

}  // namespace cooplsvi
