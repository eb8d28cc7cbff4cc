#pragma once

#include <filesystem>
#include <string>

#include "mtdc/assembly.hpp"
#include "mtdc/equilibrium.hpp"
#include "mtdc/grid.hpp"

#ifndef MTDC_DATA_DIR
#define MTDC_DATA_DIR "data"
#endif

namespace mtdc::testing {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(MTDC_DATA_DIR) / name; }

inline GridSpec case4_spec() { return load_grid_file(data_path("case4.json")); }
inline AssembledSystem case4() { return assemble(case4_spec()); }

// Equilibrium state of a system, Picard from all ones.
inline VectorXd equilibrium_state(const AssembledSystem& sys, double delta = 0.5) {
    return solve_fixed_point(reduce(sys, delta)).state();
}

} // namespace mtdc::testing
