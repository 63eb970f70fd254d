#pragma once

#include <Eigen/Dense>
#include <functional>

namespace hsical {

struct LmSettings {
    int max_iterations = 200;
    double relative_cost_tolerance = 1e-10;
    double initial_damping = 1e-3;
    double damping_up = 10.0;
    double damping_down = 0.1;
    double max_damping = 1e16;
};

struct LmResult {
    Eigen::VectorXd params;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Least-squares problem exposed through its Gauss-Newton normal equations.
/// With residual vector e(p) and Jacobian J = de/dp, `normal` fills
/// JtJ = J^T J, Jte = J^T e and returns sum(e^2); `cost` returns sum(e^2) alone.
struct NormalEquationProblem {
    std::function<double(const Eigen::VectorXd&, Eigen::MatrixXd&, Eigen::VectorXd&)> normal;
    std::function<double(const Eigen::VectorXd&)> cost;
};

/// Levenberg-Marquardt with Marquardt's diagonal scaling: solves
/// (JtJ + lambda * diag(JtJ)) dp = -Jte, accepting steps that lower the cost.
/// Converges when an accepted step changes the cost by less than the
/// relative tolerance, the cost reaches zero, or damping saturates.
LmResult levenberg_marquardt(const NormalEquationProblem& problem, Eigen::VectorXd start,
                             const LmSettings& settings = {});

}  // namespace hsical
