// Minimizes a user-supplied function on a custom box with BIPOP restarts and saturation repair.
#include <modcma/modcma.hpp>

#include <cmath>
#include <iostream>

int main()
{
    using namespace modcma;

    auto objective = [](const Vector &x) {
        double f = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            f += x(i) * x(i) - std::cos(6.0 * x(i)) + 1.0;
        return f;
    };
    const Problem problem{objective, boundary::Box::uniform(3, -2.0, 2.0), 0.0, "cosine_bowl", 0};

    Configuration cfg;
    cfg.restart = Restart::bipop;
    cfg.bound_correction = BoundCorrection::scs;

    const auto result = run(cfg, problem, 30000, 7);
    std::cout << "best f " << result.best_f << " after " << result.trace.evals_used << " evaluations, "
              << result.restarts << " restarts\n";
    std::cout << "x = " << result.best_x.transpose() << "\n";
}
