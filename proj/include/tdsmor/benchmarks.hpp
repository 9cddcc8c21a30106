#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tdsmor/delay_system.hpp"

namespace tdsmor {

struct Benchmark {
  DelaySystem system;
  InitialData init;
  std::string name;
};

/// Chain of vehicles: 3-state followers (spacing error, velocity, acceleration) and a 2-state
/// leader (velocity, acceleration), n = 3m + 2. Surrogate for the external platoon model.
Benchmark gen_platoon(int n = 512, double dt = 0.005, bool verify_stability = true);

/// Convection-diffusion on the unit square, h x h interior grid, delays (1, 2).
Benchmark gen_convdiff(int h = 25, bool verify_stability = true);

/// Heated rod, n interior points, delays (2, 4), two inputs and two outputs.
Benchmark gen_rod(int n = 1500);

struct RandomSpec {
  int n = 10;
  std::vector<int> delays{1};
  std::uint64_t seed = 1;
  double margin = 0.1;
  int inputs = 1;
  int outputs = 1;
};

/// Gaussian coefficients scaled so that the lifted spectral radius is 1 - margin;
/// unit-norm random history.
Benchmark gen_random_stable(const RandomSpec& spec);

/// mt19937_64 with Box-Muller normals; identical streams on every platform
/// (std::normal_distribution is implementation-defined).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
  /// Uniform in (0, 1).
  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tdsmor
