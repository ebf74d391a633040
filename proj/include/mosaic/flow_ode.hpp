#pragma once

#include <any>
#include <cstdint>
#include <functional>

#include <Eigen/Dense>

namespace mosaic {

/// Opaque conditioning record threaded through to the vector field; the
/// integrator never interprets it.
struct Conditions {
  std::any payload;
};

/// u(x, lambda, conditions) -> dx/dlambda, same shape as x.
using VectorField = std::function<Eigen::VectorXd(
    const Eigen::VectorXd&, double, const Conditions&)>;

enum class OdeMethod { kEuler, kHeun };

/// Fixed-grid integration of dx/dlambda = u from lambda 0 to 1. Default
/// step count mirrors the standard 50-step sampling schedule. Throws on
/// non-finite field output.
Eigen::VectorXd integrate(const VectorField& field, Eigen::VectorXd x0,
                          int steps = 50, OdeMethod method = OdeMethod::kHeun,
                          const Conditions& conditions = {});

/// Seeded standard-normal initial state.
Eigen::VectorXd gaussian_init(int size, uint64_t seed);

}  // namespace mosaic
