#include "xbarsim/device_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "xbarsim/errors.hpp"
#include "xbarsim/format.hpp"

namespace xbarsim {

void DeviceParams::validate() const {
    if (!(r_on > 0.0) || !(r_off > r_on)) {
        throw ConfigError("device: require r_off > r_on > 0");
    }
    if (!(v_off > 0.0) || !(v_on < 0.0)) {
        throw ConfigError("device: require v_on < 0 < v_off");
    }
    if (!(w_min >= 0.0) || !(w_max > w_min)) {
        throw ConfigError("device: require w_max > w_min >= 0");
    }
    if (!(dt > 0.0)) {
        throw ConfigError("device: require dt > 0");
    }
    if (!(alpha_on >= 0.0) || !(alpha_off >= 0.0)) {
        throw ConfigError("device: require alpha_on, alpha_off >= 0");
    }
}

DeviceParams DeviceParams::pt_hf_ti() { return DeviceParams{}; }

double conductance(const DeviceParams& params, double w) {
    if (!(w >= params.w_min && w <= params.w_max)) {
        throw DomainError("conductance: state outside [w_min, w_max]");
    }
    const double x = (w - params.w_min) / (params.w_max - params.w_min);
    return 1.0 / (params.r_on * x + params.r_off * (1.0 - x));
}

double state_rate(const DeviceParams& params, double v) {
    if (v > params.v_off) {
        return params.k_off * std::pow(v / params.v_off - 1.0, params.alpha_off);
    }
    if (v < params.v_on) {
        return params.k_on * std::pow(v / params.v_on - 1.0, params.alpha_on);
    }
    return 0.0;
}

DeviceState make_state(const DeviceParams& params, double w) { return {w, conductance(params, w)}; }

namespace {

DeviceState euler(const DeviceParams& params, const DeviceState& state, double v, double h) {
    const double rate = state_rate(params, v);
    if (rate == 0.0) {
        return state;
    }
    const double w = std::clamp(state.w + rate * h, params.w_min, params.w_max);
    return {w, conductance(params, w)};
}

}  // namespace

DeviceState step_state(const DeviceParams& params, const DeviceState& state, double v) {
    return euler(params, state, v, params.dt);
}

DeviceState advance_state(const DeviceParams& params, const DeviceState& state, double v, double duration) {
    if (!(duration > 0.0) || state_rate(params, v) == 0.0) {
        return state;
    }
    const auto steps = static_cast<std::size_t>(std::ceil(duration / params.dt - 1e-9));
    const double h = duration / static_cast<double>(std::max<std::size_t>(steps, 1));
    DeviceState s = state;
    for (std::size_t n = 0; n < std::max<std::size_t>(steps, 1); ++n) {
        s = euler(params, s, v, h);
    }
    return s;
}

std::vector<TraceSample> simulate_waveform(const DeviceParams& params, const DeviceState& initial,
                                           std::span<const WaveformSample> waveform) {
    if (waveform.empty()) {
        throw UsageError("simulate_waveform: empty waveform");
    }
    for (std::size_t k = 1; k < waveform.size(); ++k) {
        if (!(waveform[k].t > waveform[k - 1].t)) {
            throw UsageError("simulate_waveform: sample times must be strictly increasing");
        }
    }
    std::vector<TraceSample> trace;
    trace.reserve(waveform.size());
    DeviceState state = initial;
    for (std::size_t k = 0; k < waveform.size(); ++k) {
        const auto& s = waveform[k];
        trace.push_back({s.t, s.v, state.g * s.v, state.w});
        if (k + 1 < waveform.size()) {
            state = advance_state(params, state, s.v, waveform[k + 1].t - s.t);
        }
    }
    return trace;
}

HysteresisMetrics hysteresis_metrics(std::span<const TraceSample> trace, double eps_v, double eps_i) {
    if (trace.size() < 3) {
        throw UsageError("hysteresis_metrics: trace too short for a closed loop");
    }
    if (std::abs(trace.front().v - trace.back().v) > eps_v) {
        throw UsageError("hysteresis_metrics: trace does not cover a full period");
    }

    HysteresisMetrics m;
    for (const auto& s : trace) {
        if (std::abs(s.v) < eps_v && std::abs(s.i) >= eps_i) {
            m.pinched_at_origin = false;
        }
    }

    auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };
    double lobe = 0.0;
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
        const auto& a = trace[k];
        const auto& b = trace[k + 1];
        if (sign(a.v) * sign(b.v) < 0) {
            // Split the segment at the interpolated zero crossing.
            const double f = a.v / (a.v - b.v);
            const double i0 = a.i + f * (b.i - a.i);
            lobe += 0.5 * (a.i + i0) * (0.0 - a.v);
            area += std::abs(lobe);
            lobe = 0.5 * (i0 + b.i) * (b.v - 0.0);
        } else {
            lobe += 0.5 * (a.i + b.i) * (b.v - a.v);
            if (b.v == 0.0) {
                area += std::abs(lobe);
                lobe = 0.0;
            }
        }
    }
    m.loop_area = area + std::abs(lobe);
    return m;
}

std::vector<WaveformSample> sine_waveform(double amplitude, double frequency, std::size_t periods,
                                          std::size_t samples_per_period) {
    if (!(frequency > 0.0) || periods == 0 || samples_per_period < 4) {
        throw UsageError("sine_waveform: need frequency > 0, periods >= 1, samples_per_period >= 4");
    }
    const std::size_t n = periods * samples_per_period;
    std::vector<WaveformSample> out(n + 1);
    const double period = 1.0 / frequency;
    for (std::size_t k = 0; k <= n; ++k) {
        const std::size_t phase = k % samples_per_period;
        const double t = static_cast<double>(k) * period / static_cast<double>(samples_per_period);
        // Evaluate the phase from the integer index so zero crossings are exact.
        double v = 0.0;
        if (2 * phase != samples_per_period && phase != 0) {
            v = amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(phase) / static_cast<double>(samples_per_period));
        }
        out[k] = {t, v};
    }
    return out;
}

void write_trace_csv(std::ostream& out, std::span<const TraceSample> trace) {
    out << "t,v,i,w\n";
    for (const auto& s : trace) {
        out << format_double(s.t) << ',' << format_double(s.v) << ',' << format_double(s.i) << ','
            << format_double(s.w) << '\n';
    }
}

}  // namespace xbarsim
