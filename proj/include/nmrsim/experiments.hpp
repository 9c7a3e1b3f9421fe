/**
 * Copyright 2026 The nmrsim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Calibration and preparation procedures: pseudo-pure state by spatial
// averaging, Rabi nutation, inversion recovery and spin echo.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nmrsim/control.hpp"
#include "nmrsim/core.hpp"
#include "nmrsim/dynamics.hpp"
#include "nmrsim/fitting.hpp"
#include "nmrsim/spin_system.hpp"

namespace nmrsim {

struct ScanResult {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    FitResult fit;

    std::vector<double> fit_y() const {
        std::vector<double> out;
        out.reserve(x.size());
        for (double v : x) out.push_back(fit.evaluate(v));
        return out;
    }
};

namespace detail {

/// Square pulse on one channel (all its spins), phase in radians.
inline RfSegment channel_pulse(const SpinSystemConfig& c, int channel, double amp_hz, double phase, double theta) {
    const std::size_t nch = c.channels().size();
    RfSegment s;
    s.amplitudes_hz.assign(nch, 0.0);
    s.phases_rad.assign(nch, 0.0);
    if (theta < 0.0) {
        theta = -theta;
        phase += kPi;
    }
    s.amplitudes_hz[static_cast<std::size_t>(channel)] = amp_hz;
    s.phases_rad[static_cast<std::size_t>(channel)] = phase;
    s.duration_s = theta / (kTwoPi * amp_hz);
    return s;
}

/// Sum over the channel's spins of <sigma_x> + i <sigma_y>.
inline cplx transverse(const Matrix& rho, const SpinSystemConfig& c, const std::string& channel) {
    cplx acc = 0.0;
    for (int k : c.qubits_on_channel(channel)) {
        acc += pauli_trace(rho, PauliString::single(c.n(), k, Pauli::X)).real();
        acc += kI * pauli_trace(rho, PauliString::single(c.n(), k, Pauli::Y)).real();
    }
    return acc;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pseudo-pure state
// ---------------------------------------------------------------------------

struct PseudoPureResult {
    PulseProgram program;
    DensityMatrix state;
    /// States right after the first and second crusher.
    std::vector<DensityMatrix> checkpoints;
};

/// Spatial averaging on two spins: Rx(pi/3) on qubit 1, crusher, Rx(pi/4) on
/// qubit 0, free evolution for 1/2J, Ry(-pi/4) on qubit 0, crusher. Thermal
/// deviation eps (Z1 + Z2) ends as eps/2 (Z1 + Z2 + Z1Z2).
inline PseudoPureResult prepare_pseudo_pure(const SpinSystemConfig& c, double pulse_amp_hz = kHardPulseHz,
                                            Relaxation relaxation = Relaxation::off) {
    c.validate();
    if (c.n() != 2) throw ValidationError("prepare_pseudo_pure: requires exactly 2 qubits");
    const double j = c.j(0, 1);
    if (j == 0.0) throw ValidationError("prepare_pseudo_pure: J = 0, coupling step impossible");
    const double t = j > 0.0 ? 1.0 / (2.0 * j) : 3.0 / (2.0 * std::abs(j));
    const int ch0 = c.channel_of(0);
    const int ch1 = c.channel_of(1);
    if (ch0 == ch1) throw ValidationError("prepare_pseudo_pure: the two spins need separate channels");

    PulseProgram first;
    first.events.emplace_back(detail::channel_pulse(c, ch1, pulse_amp_hz, 0.0, kPi / 3));
    first.events.emplace_back(Crusher{});
    PulseProgram second;
    second.events.emplace_back(detail::channel_pulse(c, ch0, pulse_amp_hz, 0.0, kPi / 4));
    second.events.emplace_back(Delay{t});
    second.events.emplace_back(detail::channel_pulse(c, ch0, pulse_amp_hz, kPi / 2, -kPi / 4));
    second.events.emplace_back(Crusher{});

    const DensityMatrix rho0 = thermal_state(c);
    const DensityMatrix mid = evolve_program(rho0, first, c, relaxation);
    const DensityMatrix out = evolve_program(mid, second, c, relaxation);
    PulseProgram all = first;
    all.append(second);
    return {all, out, {mid, out}};
}

/// Traceless part in units of eps: c_P / eps for every non-identity string.
inline PauliCoefficients deviation_coefficients(const DensityMatrix& rho, double eps) {
    if (eps == 0.0) throw ValidationError("deviation_coefficients: eps must be nonzero");
    PauliCoefficients c = pauli_expand(rho);
    for (std::size_t i = 1; i < c.size(); ++i) c.by_index(i) /= eps;
    c.by_index(0) = 0.0;
    return c;
}

// ---------------------------------------------------------------------------
// Rabi calibration
// ---------------------------------------------------------------------------

struct RabiResult {
    ScanResult scan;
    double t90 = 0.0;
    double t180 = 0.0;
};

/// Nutation of the thermal state under a resonant x pulse of fixed power.
inline RabiResult rabi_calibration(const SpinSystemConfig& c, const std::string& channel, double amplitude_hz,
                                   const std::vector<double>& durations, Relaxation relaxation = Relaxation::off) {
    c.validate();
    if (durations.size() < 8) throw ValidationError("rabi_calibration: need at least 8 durations");
    if (!(amplitude_hz >= 0.0)) throw ValidationError("rabi_calibration: amplitude must be >= 0");
    const auto [lo, hi] = std::minmax_element(durations.begin(), durations.end());
    if (amplitude_hz > 0.0 && *hi - *lo < 1.0 / (2.0 * amplitude_hz) * (1.0 - 1e-9)) {
        throw ValidationError("rabi_calibration: durations must span at least one period");
    }
    const int ch = c.channel_index(channel);
    const DensityMatrix rho0 = thermal_state(c);
    ScanResult scan;
    scan.name = "rabi";
    for (double t : durations) {
        if (t < 0.0) throw ValidationError("rabi_calibration: negative duration");
        PulseProgram p;
        RfSegment s;
        s.amplitudes_hz.assign(c.channels().size(), 0.0);
        s.phases_rad.assign(c.channels().size(), 0.0);
        s.amplitudes_hz[static_cast<std::size_t>(ch)] = amplitude_hz;
        s.duration_s = t;
        p.events.emplace_back(std::move(s));
        const Matrix rho = evolve_operator(rho0.matrix(), p, c, relaxation);
        scan.x.push_back(t);
        scan.y.push_back(std::abs(detail::transverse(rho, c, channel)));
    }
    scan.fit = fit_model(scan.x, scan.y, FitModel::abs_sine);
    return {scan, scan.fit.parameter / 2.0, scan.fit.parameter};
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

// ---------------------------------------------------------------------------
// Relaxation experiments
// ---------------------------------------------------------------------------

enum class RelaxationMode { T1, T2 };

struct RelaxationOptions {
    double amplitude_hz = 12500.0;
    /// Static offsets (Hz) added to the channel's spins; the signal is the
    /// average over members. Empty means a single homogeneous sample.
    std::vector<double> ensemble_offsets_hz;
};

/// Symmetric grid of `points` offsets spanning [-spread, spread].
inline std::vector<double> offset_ensemble(double spread_hz, std::size_t points = 11) {
    if (points < 2) return {0.0};
    return linspace(-spread_hz, spread_hz, points);
}

/// Inversion recovery (T1): X180, delay t, X90; signal is the longitudinal
/// magnetization rotated onto -y. Spin echo (T2): X90, t/2, Y180, t/2;
/// signal is the transverse magnitude. `delays` are total delays t.
inline ScanResult relaxation_experiment(const SpinSystemConfig& c, const std::string& channel, RelaxationMode mode,
                                        const std::vector<double>& delays, const RelaxationOptions& opt = {}) {
    c.validate();
    if (delays.size() < 5) throw ValidationError("relaxation_experiment: need at least 5 delays");
    if (!(opt.amplitude_hz > 0.0)) throw ValidationError("relaxation_experiment: pulse amplitude must be > 0");
    const int ch = c.channel_index(channel);
    const auto spins = c.qubits_on_channel(channel);
    std::vector<double> offsets = opt.ensemble_offsets_hz.empty() ? std::vector<double>{0.0} : opt.ensemble_offsets_hz;

    ScanResult scan;
    scan.name = mode == RelaxationMode::T1 ? "t1" : "t2";
    for (double t : delays) {
        if (t < 0.0) throw ValidationError("relaxation_experiment: negative delay");
        PulseProgram p;
        if (mode == RelaxationMode::T1) {
            p.events.emplace_back(detail::channel_pulse(c, ch, opt.amplitude_hz, 0.0, kPi));
            p.events.emplace_back(Delay{t});
            p.events.emplace_back(detail::channel_pulse(c, ch, opt.amplitude_hz, 0.0, kPi / 2));
        } else {
            p.events.emplace_back(detail::channel_pulse(c, ch, opt.amplitude_hz, 0.0, kPi / 2));
            p.events.emplace_back(Delay{t / 2});
            p.events.emplace_back(detail::channel_pulse(c, ch, opt.amplitude_hz, kPi / 2, kPi));
            p.events.emplace_back(Delay{t / 2});
        }
        cplx signal = 0.0;
        for (double off : offsets) {
            SpinSystemConfig member = c;
            for (int k : spins) member.nuclei[static_cast<std::size_t>(k)].offset_hz += off;
            const Matrix rho = evolve_operator(thermal_state(member).matrix(), p, member, Relaxation::on);
            signal += detail::transverse(rho, member, channel);
        }
        signal /= static_cast<double>(offsets.size());
        scan.x.push_back(t);
        scan.y.push_back(mode == RelaxationMode::T1 ? -signal.imag() : std::abs(signal));
    }
    scan.fit = fit_model(scan.x, scan.y, mode == RelaxationMode::T1 ? FitModel::inversion_recovery : FitModel::exp_decay);
    return scan;
}

/// Inversion-recovery delays for a proton-like T1 of a few seconds.
inline std::vector<double> t1_delays_proton() {
    return {20e-6, 50e-6, 100e-6, 200e-6, 400e-6, 1.2e-3, 4e-3, 12e-3, 50e-3, 200e-3, 1.0, 4.0, 15.0};
}

/// Inversion-recovery delays for a slower-relaxing heteronucleus.
inline std::vector<double> t1_delays_phosphorus() {
    return {20e-6, 50e-6, 100e-6, 200e-6, 400e-6, 1.2e-3, 4e-3, 12e-3, 50e-3, 250e-3, 1.2, 6.0, 20.0};
}

/// Spin-echo total delays t (twice the listed half-delays).
inline std::vector<double> t2_delays() {
    const std::vector<double> half{10e-6, 20e-6, 40e-6, 80e-6, 160e-6, 500e-6, 1.5e-3, 5e-3, 20e-3, 80e-3, 320e-3, 1.5};
    std::vector<double> t;
    for (double h : half) t.push_back(2.0 * h);
    return t;
}

}  // namespace nmrsim
