#pragma once

namespace dyntok {

// Rounds to 6 significant digits so emitted JSON numbers diff cleanly.
double round_sig6(double value);

}  // namespace dyntok
