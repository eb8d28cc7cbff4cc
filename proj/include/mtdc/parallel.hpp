#pragma once

namespace mtdc {

/// Selects between the serial reference kernel and its OpenMP counterpart.
/// Both produce bit-identical results: parallel work is written to per-item
/// slots and reduced in a fixed order.
enum class Execution { serial, parallel };

/// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

} // namespace mtdc
