#pragma once

#include <functional>

#include "uavnav/core/tensor.hpp"

namespace uavnav::ad {

// Central-difference check of reverse-mode gradients. f must build a scalar
// graph from x on every call. Returns the worst coordinate's
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
inline double gradient_check(const std::function<Tensor(const Tensor&)>& f, Tensor& x, double h) {
    if (h <= 0.0) throw ParameterError("gradient_check: h must be positive");
    x.zero_grad();
    Tensor loss = f(x);
    if (!std::isfinite(loss.item())) throw NumericError("gradient_check: f(x) is not finite");
    loss.backward();
    std::vector<double> analytic = x.grad();

    double worst = 0.0;
    auto& xv = x.values();
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double keep = xv[i];
        xv[i] = keep + h;
        const double fp = f(x).item();
        xv[i] = keep - h;
        const double fm = f(x).item();
        xv[i] = keep;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("gradient_check: perturbed f(x) is not finite");
        const double numeric = (fp - fm) / (2.0 * h);
        const double denom = std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

}  // namespace uavnav::ad
