#include "specgate/pipeline.hpp"

#include <sstream>

namespace specgate {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::SpectralGate: return "spectral-gate";
    case Algorithm::SpectralGateNonstationary: return "spectral-gate-nonstationary";
    case Algorithm::Wiener: return "wiener";
    case Algorithm::IterativeWiener: return "iterative-wiener";
    case Algorithm::SavGol: return "savgol";
    case Algorithm::SpecSub: return "specsub";
  }
  return "?";
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all{Algorithm::SpectralGate, Algorithm::SpectralGateNonstationary,
                                          Algorithm::Wiener,       Algorithm::IterativeWiener,
                                          Algorithm::SavGol,       Algorithm::SpecSub};
  return all;
}

Algorithm algorithm_from_string(const std::string& name) {
  for (const Algorithm a : all_algorithms()) {
    if (name == to_string(a)) return a;
  }
  throw Error(ErrorKind::InvalidParams, "unknown algorithm: " + name);
}

Signal run_algorithm(const PipelineConfig& config, const Signal& signal, const std::optional<Signal>& noise) {
  switch (config.algorithm) {
    case Algorithm::SpectralGate:
    case Algorithm::SpectralGateNonstationary: {
      GateConfig g = config.gate;
      g.mode = config.algorithm == Algorithm::SpectralGate ? GateMode::Stationary : GateMode::NonStationary;
      return apply_gate(signal, noise, g);
    }
    case Algorithm::Wiener:
      return wiener_filter(signal, config.wiener);
    case Algorithm::IterativeWiener: {
      IterWienerParams p = config.iterative_wiener;
      if (p.frame_size == 0) p.frame_size = IterWienerParams::for_rate(signal.sample_rate).frame_size;
      return iterative_wiener(signal, p);
    }
    case Algorithm::SavGol:
      return savitzky_golay(signal, config.savgol);
    case Algorithm::SpecSub:
      if (!noise) throw Error(ErrorKind::InvalidParams, "specsub needs a noise clip");
      return spectral_subtraction(signal, *noise, config.gate.stft);
  }
  throw Error(ErrorKind::InvalidParams, "unknown algorithm");
}

std::string describe(const PipelineConfig& config) {
  std::ostringstream out;
  const StftParams& s = config.gate.stft;
  switch (config.algorithm) {
    case Algorithm::SpectralGate:
    case Algorithm::SpectralGateNonstationary:
      out << "n_fft=" << s.n_fft << " win_length=" << s.win_length << " hop_length=" << s.hop_length
          << " n_std_thresh=" << config.gate.n_std_thresh << " prop_decrease=" << config.gate.prop_decrease;
      if (config.gate.smoothing_enabled) {
        out << " freq_mask_smooth_hz=" << config.gate.freq_mask_smooth_hz
            << " time_mask_smooth_ms=" << config.gate.time_mask_smooth_ms;
      } else {
        out << " smoothing=off";
      }
      if (config.algorithm == Algorithm::SpectralGateNonstationary) {
        out << " noise_window_ms=" << config.gate.noise_window_ms;
      }
      break;
    case Algorithm::Wiener:
      out << "window=" << config.wiener.window_size;
      break;
    case Algorithm::IterativeWiener:
      if (config.iterative_wiener.frame_size > 0) {
        out << "frame_size=" << config.iterative_wiener.frame_size;
      } else {
        out << "frame_size=32ms";
      }
      out << " lpc_order=" << config.iterative_wiener.lpc_order << " iterations=" << config.iterative_wiener.iterations;
      break;
    case Algorithm::SavGol:
      out << "window=" << config.savgol.window_size << " poly_order=" << config.savgol.poly_order;
      break;
    case Algorithm::SpecSub:
      out << "n_fft=" << s.n_fft << " hop_length=" << s.hop_length;
      break;
  }
  return out.str();
}

}  // namespace specgate
