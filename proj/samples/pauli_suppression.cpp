// Off-diagonal suppression of a two-arm interferometer under propagating
// Pauli fluctuations, compared with the analytic factor and the grid oracle.

#include <cstdio>

#include "stfluct/stfluct.hpp"

int main()
{
    using namespace stfluct;

    const auto geometry = make_triangle_geometry(1.0, 0.05, 200);
    const double gamma2_area = 0.001;
    const Scenario pauli(ScenarioKind::PauliPropagating, std::sqrt(gamma2_area / geometry.area));
    const auto rho0 = DensityOperator::normalize(ComplexOperator{{1.0, 1.0}, {1.0, 1.0}});

    const auto analytic = suppression_analytic(pauli, geometry);
    const auto oracle = suppression_oracle(pauli, geometry, geometry.n_steps);
    const auto mc = simulate_scenario_mc(pauli, geometry, rho0, 20000, 7);

    std::printf("area        %.6g\n", geometry.area);
    std::printf("analytic    %.6f\n", analytic.offdiag_ratio);
    std::printf("oracle      %.6f\n", oracle.offdiag_ratio);
    std::printf("monte carlo %.6f +- %.6f\n", mc.offdiag_ratio, mc.standard_error);
}
