#pragma once

// Named kernel presets used by velocity fields, weight targets and initial data.
//
//   gaussian(s)       k(x, y) = exp(-|x - y|^2 / s^2)
//   constant(c)       k(x, y) = c
//   cosine-window(r)  k(x, y) = (1 + cos(pi |x - y| / r)) / 2  for |x - y| < r, else 0
//
// Every preset is multiplied by a scalar `strength`.

#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace conet {

enum class KernelShape { Gaussian, Constant, CosineWindow };

class PairKernel {
public:
    PairKernel() = default;
    PairKernel(KernelShape shape, double parameter, double strength = 1.0);

    /// Parses "gaussian(0.3)", "constant(1)", "cosine-window(0.25)".
    static PairKernel parse(std::string_view text, double strength = 1.0);

    template <class A, class B>
    double operator()(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) const
    {
        return strength_ * profile((x - y).squaredNorm());
    }

    /// sup over all (x, y) of |k(x, y)|.
    double sup_abs() const;

    KernelShape shape() const noexcept { return shape_; }
    double parameter() const noexcept { return parameter_; }
    double strength() const noexcept { return strength_; }
    /// Preset spelling, e.g. "gaussian(0.3)" (without the strength).
    std::string name() const;

    /// Kernel matrix K(i, k) = k(x_i, x_k) over the rows of `points`.
    Eigen::MatrixXd matrix(const Eigen::MatrixXd& points) const;

private:
    double profile(double squared_distance) const;

    KernelShape shape_ = KernelShape::Constant;
    double parameter_ = 1.0;
    double strength_ = 1.0;
};

/// g(t) = offset + amplitude * sin(frequency * t).
struct TimeProfile {
    double offset = 1.0;
    double amplitude = 0.0;
    double frequency = 0.0;

    double operator()(double t) const;
    double derivative(double t) const;
    /// Upper bound of |g| on any interval.
    double sup_abs() const;
    /// Upper bound of |g'| on any interval.
    double sup_abs_derivative() const;
};

}  // namespace conet
