#include "conet/kernels.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "conet/errors.hpp"

namespace conet {

PairKernel::PairKernel(KernelShape shape, double parameter, double strength)
    : shape_(shape), parameter_(parameter), strength_(strength)
{
    if (!std::isfinite(parameter) || !std::isfinite(strength))
        throw ValidationError("kernel parameters must be finite");
    if (shape != KernelShape::Constant && !(parameter > 0.0))
        throw ValidationError("kernel width must be positive");
}

PairKernel PairKernel::parse(std::string_view text, double strength)
{
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open ||
        close + 1 != text.size())
        throw ValidationError("malformed kernel preset '" + std::string(text) +
                              "' (expected name(parameter))");
    const auto name = text.substr(0, open);
    const auto arg = text.substr(open + 1, close - open - 1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), value);
    if (ec != std::errc() || ptr != arg.data() + arg.size())
        throw ValidationError("kernel preset '" + std::string(text) + "' has a non-numeric parameter");
    if (name == "gaussian") return PairKernel(KernelShape::Gaussian, value, strength);
    if (name == "constant") return PairKernel(KernelShape::Constant, value, strength);
    if (name == "cosine-window") return PairKernel(KernelShape::CosineWindow, value, strength);
    throw ValidationError("unknown kernel preset '" + std::string(name) +
                          "' (expected gaussian, constant or cosine-window)");
}

double PairKernel::profile(double r2) const
{
    switch (shape_) {
    case KernelShape::Gaussian:
        return std::exp(-r2 / (parameter_ * parameter_));
    case KernelShape::Constant:
        return parameter_;
    case KernelShape::CosineWindow: {
        const double r = std::sqrt(r2);
        if (r >= parameter_) return 0.0;
        return 0.5 * (1.0 + std::cos(std::numbers::pi * r / parameter_));
    }
    }
    return 0.0;
}

double PairKernel::sup_abs() const
{
    const double base = shape_ == KernelShape::Constant ? std::abs(parameter_) : 1.0;
    return std::abs(strength_) * base;
}

std::string PairKernel::name() const
{
    std::ostringstream out;
    out.precision(17);
    switch (shape_) {
    case KernelShape::Gaussian: out << "gaussian("; break;
    case KernelShape::Constant: out << "constant("; break;
    case KernelShape::CosineWindow: out << "cosine-window("; break;
    }
    out << parameter_ << ')';
    return out.str();
}

Eigen::MatrixXd PairKernel::matrix(const Eigen::MatrixXd& points) const
{
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        k(j, j) = strength_ * profile(0.0);
        for (Eigen::Index i = 0; i < j; ++i) {
            const double value = strength_ * profile((points.row(i) - points.row(j)).squaredNorm());
            k(i, j) = value;
            k(j, i) = value;
        }
    }
    return k;
}

double TimeProfile::operator()(double t) const
{
    return offset + amplitude * std::sin(frequency * t);
}

double TimeProfile::derivative(double t) const
{
    return amplitude * frequency * std::cos(frequency * t);
}

double TimeProfile::sup_abs() const
{
    return std::abs(offset) + (frequency == 0.0 ? 0.0 : std::abs(amplitude));
}

double TimeProfile::sup_abs_derivative() const
{
    return std::abs(amplitude * frequency);
}

}  // namespace conet
