#pragma once
// Temporally correlated exploration noise with an approximately 1/f
// spectrum: per action dimension, a sum of 16 octave-spaced AR(1)
// processes (corner frequencies halving from 0.25), each stationary at
// unit variance, rescaled so the sum has unit marginal variance.

#include "mazemind/rng.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace mazemind {

class PinkNoiseGen {
  public:
    static constexpr int kOctaves = 16;

    explicit PinkNoiseGen(int dims = 2) : dims_(dims), state_(static_cast<size_t>(dims) * kOctaves) {
        for (int k = 0; k < kOctaves; ++k) {
            double f = 0.25 / std::pow(2.0, k);
            coeff_[k] = std::exp(-2.0 * M_PI * f);
            drive_[k] = std::sqrt(1.0 - coeff_[k] * coeff_[k]);
        }
    }

    // Stationary start: every octave begins at its unit-variance marginal.
    void reset(RngStream& rng) {
        for (double& s : state_) s = rng.gauss();
    }

    std::vector<double> sample(RngStream& rng) {
        std::vector<double> out(dims_, 0.0);
        const double norm = 1.0 / std::sqrt(static_cast<double>(kOctaves));
        for (int d = 0; d < dims_; ++d) {
            double acc = 0;
            for (int k = 0; k < kOctaves; ++k) {
                double& s = state_[static_cast<size_t>(d) * kOctaves + k];
                s = coeff_[k] * s + drive_[k] * rng.gauss();
                acc += s;
            }
            out[static_cast<size_t>(d)] = acc * norm;
        }
        return out;
    }

  private:
    int dims_;
    std::array<double, kOctaves> coeff_{}, drive_{};
    std::vector<double> state_;
};

}  // namespace mazemind
