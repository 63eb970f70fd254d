#include "hsical/lm.hpp"

#include <cmath>

namespace hsical {

LmResult levenberg_marquardt(const NormalEquationProblem& problem, Eigen::VectorXd start, const LmSettings& settings) {
    const Eigen::Index n = start.size();
    LmResult res;
    res.params = std::move(start);
    Eigen::MatrixXd A(n, n);
    Eigen::VectorXd g(n);
    res.cost = problem.normal(res.params, A, g);
    if (res.cost == 0.0) {
        res.converged = true;
        return res;
    }

    double lambda = settings.initial_damping;
    for (int it = 0; it < settings.max_iterations; ++it) {
        res.iterations = it + 1;
        Eigen::VectorXd d = A.diagonal();
        const double dmax = d.maxCoeff();
        for (Eigen::Index k = 0; k < n; ++k) d(k) = std::max(d(k), 1e-15 * dmax);

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = A;
            damped.diagonal() += lambda * d;
            const Eigen::VectorXd step = damped.ldlt().solve(-g);
            const Eigen::VectorXd trial = res.params + step;
            const double c = step.allFinite() ? problem.cost(trial) : HUGE_VAL;
            if (std::isfinite(c) && c < res.cost) {
                const double rel = (res.cost - c) / res.cost;
                res.params = trial;
                res.cost = c;
                lambda = std::max(lambda * settings.damping_down, 1e-15);
                accepted = true;
                if (rel < settings.relative_cost_tolerance || c == 0.0) {
                    res.converged = true;
                    return res;
                }
            } else {
                lambda *= settings.damping_up;
                if (lambda > settings.max_damping) {
                    // No representable descent step remains.
                    res.converged = true;
                    return res;
                }
            }
        }
        res.cost = problem.normal(res.params, A, g);
    }
    return res;
}

}  // namespace hsical
