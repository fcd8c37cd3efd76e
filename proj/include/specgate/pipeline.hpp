#pragma once

#include <optional>
#include <string>
#include <vector>

#include "specgate/baselines.hpp"
#include "specgate/gate.hpp"

namespace specgate {

enum class Algorithm { SpectralGate, SpectralGateNonstationary, Wiener, IterativeWiener, SavGol, SpecSub };

const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);
const std::vector<Algorithm>& all_algorithms();

struct PipelineConfig {
  Algorithm algorithm = Algorithm::SpectralGate;
  GateConfig gate;
  WienerParams wiener;
  IterWienerParams iterative_wiener{0};  // frame_size 0: 32 ms at the signal's rate
  SavGolParams savgol;
};

/// Runs the selected algorithm. `noise` feeds the stationary gate profile and spectral
/// subtraction (which requires it); the other methods ignore it.
Signal run_algorithm(const PipelineConfig& config, const Signal& signal, const std::optional<Signal>& noise);

/// Short human-readable parameter listing for the selected algorithm.
std::string describe(const PipelineConfig& config);

}  // namespace specgate
