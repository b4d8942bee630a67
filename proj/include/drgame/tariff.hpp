#pragma once

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "drgame/error.hpp"
#include "drgame/metrics.hpp"
#include "drgame/model.hpp"

namespace drgame::io {

struct TariffPoint {
    double load = 0.0;       // kWh
    double unit_price = 0.0; // cents / kWh
};

using TariffPoints = std::array<TariffPoint, 3>;

struct PriceCurve {
    double a0 = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;

    double total_cost(double load) const { return a0 + a1 * load + a2 * load * load; }
    double unit_price(double load) const { return total_cost(load) / load; }
};

/// Quadratic provider cost whose per-unit price C(L)/L passes through the three
/// tariff points: a0 + a1 L_i + a2 L_i^2 = price_i L_i.
inline PriceCurve fit_price_curve(const TariffPoints& points)
{
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].load > 0.0) || !std::isfinite(points[i].unit_price)) {
            throw ValidationError("tariff point " + std::to_string(i) + " needs a positive load and finite price");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (points[i].load == points[j].load) throw ValidationError("tariff loads must be pairwise distinct");
        }
    }
    Eigen::Matrix3d a;
    Eigen::Vector3d b;
    for (int i = 0; i < 3; ++i) {
        const double l = points[static_cast<std::size_t>(i)].load;
        a.row(i) << 1.0, l, l * l;
        b(i) = points[static_cast<std::size_t>(i)].unit_price * l;
    }
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
    if (!lu.isInvertible()) throw ValidationError("tariff interpolation system is singular");
    const Eigen::Vector3d c = lu.solve(b);
    PriceCurve curve{c(0), c(1), c(2)};
    if (!(curve.a2 > 0.0)) {
        throw ValidationError("tariff points give a non-convex cost curve (a2 = " + std::to_string(curve.a2) + ")");
    }
    return curve;
}

/// omega = C* / sum_n ||l*_n - pref_n||^2, which puts bills and discomfort on the
/// same scale at the system optimum.
inline double calibrate_omega(const GameInstance& instance, const LoadMatrix& system_optimum)
{
    if (system_optimum.users() != instance.users() || system_optimum.hours() != instance.hours()) {
        throw ValidationError("system optimum dimensions do not match the instance");
    }
    double distance = 0.0;
    for (std::size_t n = 0; n < instance.users(); ++n) {
        for (std::size_t h = 0; h < instance.hours(); ++h) {
            const double d = system_optimum(n, h) - instance.consumers[n].preferred_profile[h];
            distance += d * d;
        }
    }
    if (!(distance > 0.0)) {
        throw DegenerateError("preferred profiles already minimize the system cost; omega is undefined");
    }
    return system_cost(instance, system_optimum) / distance;
}

} // namespace drgame::io
