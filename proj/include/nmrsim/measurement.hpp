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

// Observation: FIDs, spectra, peak readout of single-coherence Pauli terms,
// and readout-pulse tomography.
//
// S(t) = Tr(rho(t) sum_k (sigma_x^k + i sigma_y^k)) e^{-t/T2}. With
// H = +2 pi nu I_z a spin precesses as e^{+i 2 pi nu t}, so a positive offset
// shows up at positive frequency. Qubit k's lines sit at
// nu_k + sum_j (+-) J_kj / 2, with the + sign for partner j in |0>.

#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "nmrsim/control.hpp"
#include "nmrsim/core.hpp"
#include "nmrsim/dynamics.hpp"
#include "nmrsim/spin_system.hpp"

namespace nmrsim {

struct FIDSignal {
    std::string channel;
    std::vector<cplx> samples;
    double dt = 0.0;

    double time(std::size_t m) const { return static_cast<double>(m) * dt; }
};

struct Spectrum {
    std::string channel;
    std::vector<double> frequencies;  // ascending, Hz
    std::vector<cplx> amplitudes;
};

struct Peak {
    double frequency = 0.0;
    cplx amplitude;
};

namespace detail {

inline double channel_t2(const SpinSystemConfig& c, const std::string& channel) {
    return c.nuclei.at(static_cast<std::size_t>(c.qubits_on_channel(channel).front())).t2_s;
}

}  // namespace detail

/// FID of any operator (density or deviation matrix). `decay` applies the
/// channel's T2 envelope.
inline FIDSignal synthesize_fid(const Matrix& rho, const SpinSystemConfig& c, const std::string& channel,
                                double duration, double dt, bool decay = true) {
    if (rho.rows() != c.dim() || rho.cols() != c.dim()) throw ValidationError("synthesize_fid: dimension mismatch");
    if (!(dt > 0.0)) throw ValidationError("synthesize_fid: dt must be > 0");
    const auto qubits = c.qubits_on_channel(channel);
    const auto m = static_cast<std::size_t>(std::llround(duration / dt));
    if (m < 2) throw ValidationError("synthesize_fid: fewer than 2 samples");
    const int n = c.n();
    Matrix obs = Matrix::Zero(c.dim(), c.dim());
    for (int k : qubits) obs += PauliString::single(n, k, Pauli::X).matrix() + kI * PauliString::single(n, k, Pauli::Y).matrix();

    // Work in the eigenbasis of H0: rho_ab(t) = rho_ab e^{-i (E_a - E_b) t}.
    Eigen::SelfAdjointEigenSolver<Matrix> es(internal_hamiltonian(c));
    const Matrix& v = es.eigenvectors();
    const Matrix r = v.adjoint() * rho * v;
    const Matrix o = v.adjoint() * obs * v;
    const double t2 = detail::channel_t2(c, channel);
    const Eigen::Index d = c.dim();
    // S(t) = sum_ab r_ab o_ba e^{-i (E_a - E_b) t}
    std::vector<std::pair<double, cplx>> terms;
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = 0; b < d; ++b) {
            const cplx w = r(a, b) * o(b, a);
            if (std::abs(w) < 1e-300) continue;
            terms.emplace_back(es.eigenvalues()(a) - es.eigenvalues()(b), w);
        }
    }
    FIDSignal fid{channel, std::vector<cplx>(m), dt};
    for (std::size_t s = 0; s < m; ++s) {
        const double t = fid.time(s);
        cplx acc = 0.0;
        for (const auto& [w, amp] : terms) acc += amp * std::exp(cplx{0.0, -w * t});
        fid.samples[s] = decay ? acc * std::exp(-t / t2) : acc;
    }
    return fid;
}

inline FIDSignal synthesize_fid(const DensityMatrix& rho, const SpinSystemConfig& c, const std::string& channel,
                                double duration, double dt, bool decay = true) {
    return synthesize_fid(rho.matrix(), c, channel, duration, dt, decay);
}

/// Unitary DFT (FFTW), reordered so frequencies ascend from -1/(2 dt).
inline Spectrum spectrum(const FIDSignal& fid) {
    const std::size_t m = fid.samples.size();
    if (m < 2) throw ValidationError("spectrum: FID needs at least 2 samples");
    if (!(fid.dt > 0.0)) throw ValidationError("spectrum: dt must be > 0");
    auto* in = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * m));
    auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * m));
    if (in == nullptr || out == nullptr) {
        fftw_free(in);
        fftw_free(out);
        throw NumericalError("spectrum: FFT buffer allocation failed");
    }
    const fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(m), in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    for (std::size_t i = 0; i < m; ++i) {
        in[i][0] = fid.samples[i].real();
        in[i][1] = fid.samples[i].imag();
    }
    fftw_execute(plan);
    Spectrum s;
    s.channel = fid.channel;
    s.frequencies.resize(m);
    s.amplitudes.resize(m);
    const double norm = 1.0 / std::sqrt(static_cast<double>(m));
    const double df = 1.0 / (static_cast<double>(m) * fid.dt);
    const std::size_t half = m / 2;  // bins >= m - half are negative frequencies
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t src = (i + (m - half)) % m;
        const auto k = static_cast<long long>(src) - (src >= m - half ? static_cast<long long>(m) : 0LL);
        s.frequencies[i] = static_cast<double>(k) * df;
        s.amplitudes[i] = cplx{out[src][0], out[src][1]} * norm;
    }
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
    return s;
}

inline constexpr double kPeakThreshold = 0.05;

/// Local maxima of |X| at or above 5% of the largest magnitude.
inline std::vector<Peak> spectrum_peaks(const Spectrum& s, double threshold = kPeakThreshold) {
    std::vector<Peak> peaks;
    const std::size_t m = s.amplitudes.size();
    double top = 0.0;
    for (const auto& a : s.amplitudes) top = std::max(top, std::abs(a));
    if (top <= 1e-14) return peaks;
    for (std::size_t i = 0; i < m; ++i) {
        const double here = std::abs(s.amplitudes[i]);
        if (here < threshold * top) continue;
        const double left = i > 0 ? std::abs(s.amplitudes[i - 1]) : -1.0;
        const double right = i + 1 < m ? std::abs(s.amplitudes[i + 1]) : -1.0;
        if (here > left && here >= right) peaks.push_back({s.frequencies[i], s.amplitudes[i]});
    }
    return peaks;
}

inline std::vector<Peak> spectrum_peaks(const FIDSignal& fid, double threshold = kPeakThreshold) {
    return spectrum_peaks(spectrum(fid), threshold);
}

// ---------------------------------------------------------------------------
// Line model and readout
// ---------------------------------------------------------------------------

/// One resolved transition of `qubit`; `partners` holds the other qubits'
/// states as bits (qubit order, skipping `qubit`).
struct Line {
    int qubit = 0;
    std::size_t partners = 0;
    double frequency = 0.0;
    /// Normalized amplitude: the sum over partner-Z strings of
    /// (+-)(c_X + i c_Y); with one partner, c_X0 +- c_XZ + i (c_Y0 +- c_YZ).
    cplx amplitude;
};

inline std::vector<int> other_qubits(int n, int k) {
    std::vector<int> o;
    for (int j = 0; j < n; ++j) {
        if (j != k) o.push_back(j);
    }
    return o;
}

inline double line_frequency(const SpinSystemConfig& c, int k, std::size_t partners) {
    const auto others = other_qubits(c.n(), k);
    const int m = static_cast<int>(others.size());
    double f = c.nuclei[static_cast<std::size_t>(k)].offset_hz;
    for (int i = 0; i < m; ++i) {
        const bool one = (partners >> (m - 1 - i)) & 1U;
        f += (one ? -0.5 : 0.5) * c.j_hz(k, others[static_cast<std::size_t>(i)]);
    }
    return f;
}

/// Lines of every qubit on a channel, in qubit then partner order.
inline std::vector<Line> channel_lines(const SpinSystemConfig& c, const std::string& channel) {
    std::vector<Line> lines;
    for (int k : c.qubits_on_channel(channel)) {
        const std::size_t configs = std::size_t{1} << (c.n() - 1);
        for (std::size_t s = 0; s < configs; ++s) lines.push_back({k, s, line_frequency(c, k, s), {}});
    }
    return lines;
}

/// Acquisition settings that place every line inside the window with at
/// least four bins between the closest pair.
struct Acquisition {
    double dt = 0.0;
    double duration = 0.0;
};

inline Acquisition default_acquisition(const SpinSystemConfig& c, const std::string& channel) {
    const auto lines = channel_lines(c, channel);
    double fmax = 0.0;
    double sep = 1e300;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        fmax = std::max(fmax, std::abs(lines[i].frequency));
        for (std::size_t j = 0; j < i; ++j) sep = std::min(sep, std::abs(lines[i].frequency - lines[j].frequency));
    }
    if (lines.size() < 2) sep = 100.0;
    sep = std::max(sep, 1e-3);
    const double dt = 1.0 / (2.5 * (fmax + std::max(50.0, 2.0 * sep)));
    std::size_t m = 256;
    while (1.0 / (static_cast<double>(m) * dt) > sep / 4.0 && m < (std::size_t{1} << 16)) m *= 2;
    return {dt, static_cast<double>(m) * dt};
}

namespace detail {

inline std::size_t nearest_bin(const Spectrum& s, double f) {
    const auto it = std::lower_bound(s.frequencies.begin(), s.frequencies.end(), f);
    std::size_t i = static_cast<std::size_t>(it - s.frequencies.begin());
    if (i >= s.frequencies.size()) return s.frequencies.size() - 1;
    if (i > 0 && std::abs(s.frequencies[i - 1] - f) < std::abs(s.frequencies[i] - f)) --i;
    return i;
}

inline void check_resolved(const SpinSystemConfig& c, const std::string& channel, const std::vector<Line>& lines) {
    const double width = 1.0 / (kPi * detail::channel_t2(c, channel));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (std::abs(lines[i].frequency - lines[j].frequency) < 3.0 * width) {
                throw NumericalError("unresolved: lines at " + std::to_string(lines[j].frequency) + " Hz and " +
                                     std::to_string(lines[i].frequency) + " Hz on channel " + channel +
                                     " are closer than 3 linewidths");
            }
        }
    }
}

}  // namespace detail

/// Complex amplitudes of the given lines in a measured FID. The spectrum is
/// sampled at each line's nearest bin and the leakage between lines is undone
/// with a K x K solve against the DFTs of unit decaying lines.
inline std::vector<Line> measure_lines(const FIDSignal& fid, const SpinSystemConfig& c, std::vector<Line> lines) {
    detail::check_resolved(c, fid.channel, lines);
    const Spectrum data = spectrum(fid);
    const double t2 = detail::channel_t2(c, fid.channel);
    const auto k = static_cast<Eigen::Index>(lines.size());
    Matrix a(k, k);
    Vector b(k);
    std::vector<std::size_t> bins;
    for (const auto& l : lines) bins.push_back(detail::nearest_bin(data, l.frequency));
    for (Eigen::Index j = 0; j < k; ++j) {
        FIDSignal unit{fid.channel, std::vector<cplx>(fid.samples.size()), fid.dt};
        for (std::size_t s = 0; s < unit.samples.size(); ++s) {
            const double t = unit.time(s);
            unit.samples[s] = std::exp(cplx{0.0, kTwoPi * lines[static_cast<std::size_t>(j)].frequency * t}) * std::exp(-t / t2);
        }
        const Spectrum model = spectrum(unit);
        for (Eigen::Index i = 0; i < k; ++i) a(i, j) = model.amplitudes[bins[static_cast<std::size_t>(i)]];
    }
    for (Eigen::Index i = 0; i < k; ++i) b(i) = data.amplitudes[bins[static_cast<std::size_t>(i)]];
    const Vector x = a.colPivHouseholderQr().solve(b);
    const double scale = static_cast<double>(std::size_t{1} << (c.n() - 1));
    for (Eigen::Index i = 0; i < k; ++i) lines[static_cast<std::size_t>(i)].amplitude = x(i) * scale;
    return lines;
}

/// Coefficients of every Pauli string with exactly one X/Y factor, read from
/// synthesized spectra. Other coefficients are left at 0.
struct Readout {
    PauliCoefficients coefficients;
    std::map<std::string, std::vector<Line>> lines;  // per channel
};

inline Readout readout(const Matrix& rho, const SpinSystemConfig& c) {
    c.validate();
    if (c.coupling_model != CouplingModel::weak) throw ValidationError("readout: requires the weak coupling model");
    if (c.n() > 3) throw ValidationError("readout: defined for n <= 3");
    const int n = c.n();
    Readout r{PauliCoefficients(n), {}};
    r.coefficients.by_index(0) = rho.trace().real();
    for (const auto& ch : c.channels()) {
        const Acquisition acq = default_acquisition(c, ch);
        const FIDSignal fid = synthesize_fid(rho, c, ch, acq.duration, acq.dt);
        const auto lines = measure_lines(fid, c, channel_lines(c, ch));
        // Walsh-Hadamard over partner configurations.
        const std::size_t configs = std::size_t{1} << (n - 1);
        for (int k : c.qubits_on_channel(ch)) {
            const auto others = other_qubits(n, k);
            for (std::size_t q = 0; q < configs; ++q) {
                cplx acc = 0.0;
                for (const auto& l : lines) {
                    if (l.qubit != k) continue;
                    acc += ((std::popcount(l.partners & q) & 1) ? -1.0 : 1.0) * l.amplitude;
                }
                acc /= static_cast<double>(configs);
                std::vector<Pauli> fx(static_cast<std::size_t>(n), Pauli::I);
                for (std::size_t i = 0; i < others.size(); ++i) {
                    if ((q >> (others.size() - 1 - i)) & 1U) fx[static_cast<std::size_t>(others[i])] = Pauli::Z;
                }
                fx[static_cast<std::size_t>(k)] = Pauli::X;
                r.coefficients[PauliString(fx)] = acc.real();
                fx[static_cast<std::size_t>(k)] = Pauli::Y;
                r.coefficients[PauliString(fx)] = acc.imag();
            }
        }
        r.lines[ch] = lines;
    }
    return r;
}

inline PauliCoefficients readout_pauli_coefficients(const DensityMatrix& rho, const SpinSystemConfig& c) {
    return readout(rho.matrix(), c).coefficients;
}

// ---------------------------------------------------------------------------
// Tomography
// ---------------------------------------------------------------------------

enum class ReadoutPulse : std::uint8_t { none = 0, x90 = 1, y90 = 2 };

inline Matrix readout_pulse_matrix(ReadoutPulse p) {
    switch (p) {
        case ReadoutPulse::none: return Matrix::Identity(2, 2);
        case ReadoutPulse::x90: return rx(kPi / 2);
        case ReadoutPulse::y90: return ry(kPi / 2);
    }
    return Matrix::Identity(2, 2);
}

inline std::string to_string(ReadoutPulse p) {
    switch (p) {
        case ReadoutPulse::none: return "I";
        case ReadoutPulse::x90: return "X90";
        case ReadoutPulse::y90: return "Y90";
    }
    return "?";
}

struct TomographySetting {
    std::vector<ReadoutPulse> pulses;
    Readout readout;
};

struct TomographyResult {
    DensityMatrix state;
    std::vector<TomographySetting> settings;
};

namespace detail {

/// R^dag P R for a single-qubit Pauli P: returns the image and its sign.
inline std::pair<Pauli, double> heisenberg_image(ReadoutPulse r, Pauli p) {
    if (p == Pauli::I) return {Pauli::I, 1.0};
    const Matrix u = readout_pulse_matrix(r);
    const Matrix img = u.adjoint() * pauli_matrix(p) * u;
    for (Pauli q : {Pauli::X, Pauli::Y, Pauli::Z}) {
        const double c = 0.5 * (img * pauli_matrix(q)).trace().real();
        if (std::abs(std::abs(c) - 1.0) < 1e-12) return {q, c > 0 ? 1.0 : -1.0};
    }
    throw NumericalError("readout pulse does not map Paulis to Paulis");
}

}  // namespace detail

/// Full state reconstruction from the 3^n readout settings {I, X90, Y90}^n,
/// applied as ideal unitaries.
inline TomographyResult tomography_report(const DensityMatrix& rho, const SpinSystemConfig& c) {
    const int n = c.n();
    if (n > 3) throw ValidationError("tomography: defined for n <= 3");
    if (rho.n() != n) throw ValidationError("tomography: dimension mismatch");
    const std::size_t nsettings = static_cast<std::size_t>(std::pow(3, n));
    const std::size_t npauli = std::size_t{1} << (2 * n);
    std::vector<double> sum(npauli, 0.0);
    std::vector<int> count(npauli, 0);
    TomographyResult out{rho, {}};
    for (std::size_t s = 0; s < nsettings; ++s) {
        std::vector<ReadoutPulse> pulses(static_cast<std::size_t>(n));
        std::size_t code = s;
        for (int q = n - 1; q >= 0; --q) {
            pulses[static_cast<std::size_t>(q)] = static_cast<ReadoutPulse>(code % 3);
            code /= 3;
        }
        Matrix u = Matrix::Identity(1, 1);
        for (auto p : pulses) u = tensor(u, readout_pulse_matrix(p));
        const Matrix rotated = u * rho.matrix() * u.adjoint();
        Readout r = readout(rotated, c);
        for (std::size_t i = 1; i < npauli; ++i) {
            const PauliString obs = PauliString::from_index(i, n);
            if (obs.transverse_weight() != 1) continue;
            std::vector<Pauli> img(static_cast<std::size_t>(n));
            double sign = 1.0;
            for (int q = 0; q < n; ++q) {
                const auto [p, sg] = detail::heisenberg_image(pulses[static_cast<std::size_t>(q)], obs[q]);
                img[static_cast<std::size_t>(q)] = p;
                sign *= sg;
            }
            const std::size_t idx = PauliString(img).index();
            sum[idx] += sign * r.coefficients.by_index(i);
            ++count[idx];
        }
        out.settings.push_back({pulses, std::move(r)});
    }
    PauliCoefficients coeffs(n);
    for (std::size_t i = 1; i < npauli; ++i) {
        if (count[i] == 0) throw NumericalError("tomography: Pauli string not covered by any setting");
        coeffs.by_index(i) = sum[i] / count[i];
    }
    Matrix m = pauli_operator(coeffs);
    m = 0.5 * (m + m.adjoint());
    out.state = DensityMatrix(std::move(m), DensityMatrix::Unchecked{});
    return out;
}

inline DensityMatrix tomography(const DensityMatrix& rho, const SpinSystemConfig& c) {
    return tomography_report(rho, c).state;
}

}  // namespace nmrsim
