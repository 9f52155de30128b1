#pragma once

#include <cmath>

namespace autolfd {

// The pair optimized by the outer loop, stored in log10 space: kernel width
// of the SE kernel and the regularization factor of the GP/KMP solve.
struct Hyperparams {
  double log10_kernel_width = 3.0;
  double log10_regularization = -6.0;

  double kernel_width() const { return std::pow(10.0, log10_kernel_width); }
  double regularization() const { return std::pow(10.0, log10_regularization); }
};

struct HyperBounds {
  Hyperparams lo{-2.0, -8.0};
  Hyperparams hi{6.0, 2.0};

  Hyperparams clamp(Hyperparams theta) const {
    theta.log10_kernel_width =
        std::fmin(std::fmax(theta.log10_kernel_width, lo.log10_kernel_width),
                  hi.log10_kernel_width);
    theta.log10_regularization =
        std::fmin(std::fmax(theta.log10_regularization, lo.log10_regularization),
                  hi.log10_regularization);
    return theta;
  }

  bool contains(const Hyperparams& theta) const {
    return theta.log10_kernel_width >= lo.log10_kernel_width &&
           theta.log10_kernel_width <= hi.log10_kernel_width &&
           theta.log10_regularization >= lo.log10_regularization &&
           theta.log10_regularization <= hi.log10_regularization;
  }
};

}  // namespace autolfd
