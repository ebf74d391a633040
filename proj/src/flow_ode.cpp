#include "mosaic/flow_ode.hpp"

#include <random>
#include <stdexcept>

namespace mosaic {

namespace {

Eigen::VectorXd eval(const VectorField& field, const Eigen::VectorXd& x,
                     double lambda, const Conditions& cond) {
  Eigen::VectorXd u = field(x, lambda, cond);
  if (u.size() != x.size())
    throw std::runtime_error("integrate: field output shape mismatch");
  if (!u.allFinite())
    throw std::runtime_error("integrate: non-finite field output");
  return u;
}

}  // namespace

Eigen::VectorXd integrate(const VectorField& field, Eigen::VectorXd x0,
                          int steps, OdeMethod method,
                          const Conditions& conditions) {
  if (steps < 1) throw std::invalid_argument("integrate: steps must be >= 1");
  const double h = 1.0 / steps;
  Eigen::VectorXd x = std::move(x0);
  for (int i = 0; i < steps; ++i) {
    const double lambda = i * h;
    const Eigen::VectorXd k1 = eval(field, x, lambda, conditions);
    if (method == OdeMethod::kEuler) {
      x += h * k1;
    } else {
      const Eigen::VectorXd k2 =
          eval(field, x + h * k1, lambda + h, conditions);
      x += 0.5 * h * (k1 + k2);
    }
  }
  return x;
}

Eigen::VectorXd gaussian_init(int size, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(size);
  for (int i = 0; i < size; ++i) x[i] = normal(rng);
  return x;
}

}  // namespace mosaic
