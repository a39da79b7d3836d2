#pragma once

#include "phasespace/ensemble.hpp"
#include "phasespace/lattice.hpp"

#include <vector>

namespace phasespace {

// Stochastic field trajectory on a lattice. `reservoir` holds the absorbed
// density rho_2 per component when number bookkeeping is enabled.
struct FieldState {
    std::vector<Field> psi;
    std::vector<std::vector<double>> reservoir;
    double t = 0.0;
    Ordering ordering;
    cplx weight{1.0, 0.0};

    std::size_t components() const { return psi.size(); }
    bool tracks_reservoir() const { return !reservoir.empty(); }
    void enable_reservoir()
    {
        reservoir.assign(psi.size(), std::vector<double>(psi.empty() ? 0 : psi.front().size(), 0.0));
    }
};

} // namespace phasespace
