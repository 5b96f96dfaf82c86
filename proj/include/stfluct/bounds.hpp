#pragma once

// Decoherence rate from the fluctuation time constant tau0, and the upper
// bounds on tau0 implied by a maximum observed suppression.

#include <cmath>
#include <string>

#include "stfluct/error.hpp"
#include "stfluct/interferometer.hpp"

namespace stfluct {

struct PhysicalConstants {
    double hbar = 1.054571817e-34;                  // J s
    double atomic_mass_unit_energy = 1.49241808e-10; // u c^2, J
    double planck_time = 5e-44;                      // s, reference scale only

    void validate() const
    {
        require(hbar > 0.0 && atomic_mass_unit_energy > 0.0 && planck_time > 0.0, ErrorCode::InvalidArgument,
                "PhysicalConstants: all constants must be positive");
    }
};

struct BoundsInput {
    int atomic_number = 1;
    double drift_time = 0.0; // s
    double area = 0.0;       // s^2
    double threshold = 0.1;
    ScenarioKind scenario = ScenarioKind::PauliPropagating;

    void validate() const
    {
        require(atomic_number >= 1, ErrorCode::InvalidArgument, "BoundsInput: atomic number must be >= 1");
        require(drift_time > 0.0 && std::isfinite(drift_time), ErrorCode::InvalidArgument,
                "BoundsInput: drift time must be positive");
        require(threshold > 0.0 && threshold < 1.0, ErrorCode::InvalidArgument,
                "BoundsInput: threshold must lie in (0, 1)");
        if (scenario != ScenarioKind::DeltaFluctuations)
            require(area > 0.0 && std::isfinite(area), ErrorCode::InvalidArgument,
                    "BoundsInput: area must be positive for propagating scenarios");
    }
};

/// (hbar / (A u c^2))^2, the squared Compton time of the atom.
inline double compton_time_squared(int atomic_number, const PhysicalConstants& c = {})
{
    c.validate();
    const double t = c.hbar / (static_cast<double>(atomic_number) * c.atomic_mass_unit_energy);
    return t * t;
}

/// gamma = (A u c^2 / hbar)^2 tau0
inline double decoherence_rate(int atomic_number, double tau0, const PhysicalConstants& c = {})
{
    require(atomic_number >= 1, ErrorCode::InvalidArgument, "decoherence_rate: atomic number must be >= 1");
    require(tau0 >= 0.0, ErrorCode::InvalidArgument, "decoherence_rate: tau0 must be >= 0");
    return tau0 / compton_time_squared(atomic_number, c);
}

/// Largest tau0 compatible with a suppression below the threshold eps:
///   delta:     gamma T = eps                 -> tau0 = (eps / T) t_C^2
///   Pauli:     (8/3) gamma^2 A = eps         -> tau0 = sqrt(3 eps / (8 A)) t_C^2
/// Commuting propagating fluctuations produce no decoherence, hence no bound.
inline double tau0_bound(const BoundsInput& in, const PhysicalConstants& c = {})
{
    in.validate();
    const double tc2 = compton_time_squared(in.atomic_number, c);
    switch (in.scenario) {
    case ScenarioKind::DeltaFluctuations: return in.threshold / in.drift_time * tc2;
    case ScenarioKind::PauliPropagating: return std::sqrt(3.0 * in.threshold / (8.0 * in.area)) * tc2;
    case ScenarioKind::CommutingPropagating: break;
    }
    throw Error(ErrorCode::NoBound, "no bound: scenario produces no decoherence");
}

/// Sodium interferometer: A = 23, area 1e-12 s^2, T = 50 ms, 10% threshold.
inline BoundsInput preset_kasevich_chu(ScenarioKind scenario = ScenarioKind::PauliPropagating)
{
    return {23, 0.05, 1e-12, 0.1, scenario};
}

} // namespace stfluct
