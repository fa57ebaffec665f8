#pragma once

#include <iosfwd>
#include <span>
#include <vector>

namespace xbarsim {

/// VTEAM voltage-controlled memristor parameters.
///
/// The state variable w lives in [w_min, w_max]; w_max is the fully-on
/// (r_on) end. With the preset signs, k_off < 0 pushes w toward w_min under
/// positive over-threshold voltage and k_on > 0 pushes it toward w_max under
/// negative over-threshold voltage.
struct DeviceParams {
    double r_on = 50.0;       // ohm
    double r_off = 1000.0;    // ohm
    double v_on = -0.2;       // V
    double v_off = 0.02;      // V
    double k_on = 10.0;       // m/s
    double k_off = -5e-4;     // m/s
    double alpha_on = 3.0;
    double alpha_off = 1.0;
    double w_min = 0.0;       // m
    double w_max = 3e-9;      // m
    double dt = 1e-10;        // s

    /// Throws ConfigError when an invariant does not hold.
    void validate() const;

    double g_on() const { return 1.0 / r_on; }
    double g_off() const { return 1.0 / r_off; }

    /// Bundled Pt-Hf-Ti-like preset. These are fixture constants, not a
    /// calibration of any physical device.
    static DeviceParams pt_hf_ti();
};

struct DeviceState {
    double w = 0.0;  // m
    double g = 0.0;  // S
};

struct WaveformSample {
    double t = 0.0;  // s
    double v = 0.0;  // V
};

struct TraceSample {
    double t = 0.0;
    double v = 0.0;
    double i = 0.0;
    double w = 0.0;
};

struct HysteresisMetrics {
    bool pinched_at_origin = true;
    double loop_area = 0.0;  // A*V
};

inline constexpr double kPinchVoltageTolerance = 1e-6;
inline constexpr double kPinchCurrentTolerance = 1e-9;

/// G(w) = 1/R(w), R linear between r_off (w_min) and r_on (w_max).
/// Throws DomainError for w outside [w_min, w_max].
double conductance(const DeviceParams& params, double w);

/// Threshold power-law dw/dt; zero inside [v_on, v_off].
double state_rate(const DeviceParams& params, double v);

DeviceState make_state(const DeviceParams& params, double w);

/// One explicit Euler step of length params.dt, clamped to the state bounds.
DeviceState step_state(const DeviceParams& params, const DeviceState& state, double v);

/// Hold v for `duration`, integrating with steps no longer than params.dt.
DeviceState advance_state(const DeviceParams& params, const DeviceState& state, double v, double duration);

/// i(t) = G(w(t)) v(t). The state is carried between consecutive samples
/// with the earlier sample's voltage held (zero-order hold).
std::vector<TraceSample> simulate_waveform(const DeviceParams& params, const DeviceState& initial,
                                           std::span<const WaveformSample> waveform);

/// Pinch check plus enclosed I-V area. The area is the sum over lobes of
/// |closed integral of i dv|, each lobe delimited by the zero crossings of v;
/// a single lobe-free integral would cancel the two counter-rotating lobes
/// of a pinched loop. The trace must close (end at its starting voltage).
HysteresisMetrics hysteresis_metrics(std::span<const TraceSample> trace, double eps_v = kPinchVoltageTolerance,
                                     double eps_i = kPinchCurrentTolerance);

/// v(t) = amplitude * sin(2 pi f t), `periods` whole periods, the last
/// sample landing exactly on the end of the final period.
std::vector<WaveformSample> sine_waveform(double amplitude, double frequency, std::size_t periods,
                                          std::size_t samples_per_period);

/// CSV with header `t,v,i,w`, shortest round-trip double formatting.
void write_trace_csv(std::ostream& out, std::span<const TraceSample> trace);

}  // namespace xbarsim
