#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>

namespace scoretest {

// Identifier stored in simulation reports so reruns can be matched to the
// exact sampling algorithm (generator, seeding, normal transform).
extern const char* const kRngAlgorithmId;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256++ seeded via splitmix64. Normal variates by Box-Muller with a
// cached spare, so streams are reproducible across platforms.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Independent substream for one simulation run: the state depends only on
  // (seed, run_index), never on how runs are distributed over workers.
  static RngStream substream(std::uint64_t seed, std::uint64_t run_index);

  std::uint64_t next_u64();
  double uniform01();        // in [0, 1)
  double uniform01_open();   // in (0, 1]
  double normal();           // standard normal

  void fill_normal(Eigen::Ref<Eigen::MatrixXd> out);  // row-major fill order

 private:
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Haar-ish random orthogonal matrix: QR of a standard normal matrix with the
// R diagonal sign fixed. May contain reflections (|det| = 1).
Eigen::MatrixXd random_orthogonal(int n, RngStream& rng);

}  // namespace scoretest
