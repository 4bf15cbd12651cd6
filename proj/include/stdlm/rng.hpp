#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace stdlm {

// Seed for an independent stream derived from a master seed and a stream
// index (splitmix-style mixing).
std::uint64_t child_seed(std::uint64_t master, std::uint64_t stream);

// Seeded random stream. The mt19937_64 engine output is pinned by the
// standard and all distribution transforms below are implemented here, so a
// given seed produces the same draws on every platform / standard library.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  // Independent stream derived from a master seed and a stream index.
  static RngStream child(std::uint64_t master, std::uint64_t stream);

  double uniform();    // [0, 1)
  double normal();     // standard normal via Box-Muller
  double gamma(double shape);  // unit rate, Marsaglia-Tsang

  // X such that 1/X ~ Gamma(shape, rate = scale). This is the convention in
  // which IG(2, 0.01) has mean 0.01.
  double inv_gamma(double shape, double scale);

  Eigen::VectorXd normal_vector(Eigen::Index n);

 private:
  std::mt19937_64 eng_;
};

}  // namespace stdlm
