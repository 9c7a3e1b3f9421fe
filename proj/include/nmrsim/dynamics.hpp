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

#pragma once

#include <cmath>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "json.hpp"
#include "nmrsim/core.hpp"
#include "nmrsim/spin_system.hpp"

namespace nmrsim {

/// Square RF pulse: one (amplitude, phase) pair per channel.
struct RfSegment {
    std::vector<double> amplitudes_hz;
    std::vector<double> phases_rad;
    double duration_s = 0.0;
};

/// Free evolution under the internal Hamiltonian.
struct Delay {
    double duration_s = 0.0;
};

/// Ideal gradient dephasing; instantaneous.
struct Crusher {};

using PulseEvent = std::variant<RfSegment, Delay, Crusher>;

inline double event_duration(const PulseEvent& e) {
    return std::visit(
        [](const auto& ev) -> double {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, Crusher>) {
                return 0.0;
            } else {
                return ev.duration_s;
            }
        },
        e);
}

struct PulseProgram {
    std::vector<PulseEvent> events;

    double total_duration() const {
        double t = 0.0;
        for (const auto& e : events) t += event_duration(e);
        return t;
    }

    std::size_t size() const { return events.size(); }
    bool empty() const { return events.empty(); }

    void append(const PulseProgram& other) { events.insert(events.end(), other.events.begin(), other.events.end()); }

    template <typename Event>
    std::size_t count() const {
        return static_cast<std::size_t>(std::count_if(events.begin(), events.end(),
                                                      [](const PulseEvent& e) { return std::holds_alternative<Event>(e); }));
    }
};

// ---------------------------------------------------------------------------
// Propagators
// ---------------------------------------------------------------------------

/// exp(-i h dt) through the Hermitian eigendecomposition of h.
inline Matrix segment_propagator(const Matrix& h, double dt) {
    if (h.rows() != h.cols()) throw ValidationError("segment_propagator: generator must be square");
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw ValidationError("segment_propagator: dt must be finite and >= 0");
    const double scale = std::max(1.0, detail::max_abs(h));
    if (!detail::is_hermitian(h, 1e-10 * scale)) throw ValidationError("segment_propagator: generator is not Hermitian");
    if (dt == 0.0) return Matrix::Identity(h.rows(), h.cols());
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
    Vector phases(h.rows());
    for (Eigen::Index i = 0; i < h.rows(); ++i) phases(i) = std::exp(cplx{0.0, -es.eigenvalues()(i) * dt});
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

namespace detail {

inline void check_segment(const SpinSystemConfig& c, const RfSegment& s) {
    const std::size_t nch = c.channels().size();
    if (s.amplitudes_hz.size() != nch || s.phases_rad.size() != nch) {
        throw ValidationError("rf segment: expected " + std::to_string(nch) + " channel entries");
    }
    if (!(s.duration_s >= 0.0)) throw ValidationError("rf segment: negative duration");
}

}  // namespace detail

/// Unitary for one timed event; Crusher has none.
inline Matrix event_propagator(const PulseEvent& e, const SpinSystemConfig& c, const Matrix& h0) {
    if (const auto* s = std::get_if<RfSegment>(&e)) {
        detail::check_segment(c, *s);
        return segment_propagator(h0 + rf_hamiltonian(c, s->amplitudes_hz, s->phases_rad), s->duration_s);
    }
    if (const auto* d = std::get_if<Delay>(&e)) {
        if (!(d->duration_s >= 0.0)) throw ValidationError("delay: negative duration");
        return segment_propagator(h0, d->duration_s);
    }
    throw ValidationError("crusher has no unitary representation");
}

/// Product of all event unitaries in time order. Programs with crushers are
/// rejected.
inline Matrix program_unitary(const PulseProgram& p, const SpinSystemConfig& c) {
    const Matrix h0 = internal_hamiltonian(c);
    Matrix u = Matrix::Identity(c.dim(), c.dim());
    for (const auto& e : p.events) u = event_propagator(e, c, h0) * u;
    return u;
}

// ---------------------------------------------------------------------------
// Non-unitary maps
// ---------------------------------------------------------------------------

inline Matrix crush(const Matrix& m) { return m.diagonal().asDiagonal(); }

inline DensityMatrix apply_crusher(const DensityMatrix& rho) {
    return DensityMatrix(crush(rho.matrix()), DensityMatrix::Unchecked{});
}

/// Product-Pauli relaxation channel over dt, acting on any operator with the
/// thermal restoration scaled by its trace.
inline Matrix relax(const Matrix& m, double dt, const SpinSystemConfig& c) {
    if (!(dt >= 0.0)) throw ValidationError("apply_relaxation: dt must be >= 0");
    if (dt == 0.0) return m;
    const int n = c.n();
    if (m.rows() != c.dim()) throw ValidationError("apply_relaxation: dimension mismatch");
    std::vector<double> d1(static_cast<std::size_t>(n)), d2(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        d1[static_cast<std::size_t>(k)] = std::exp(-dt / c.nuclei[static_cast<std::size_t>(k)].t1_s);
        d2[static_cast<std::size_t>(k)] = std::exp(-dt / c.nuclei[static_cast<std::size_t>(k)].t2_s);
    }
    // The channel is real-linear; split into Hermitian parts so coefficients stay real.
    const Matrix herm = 0.5 * (m + m.adjoint());
    const Matrix anti = (m - m.adjoint()) / cplx{0.0, 2.0};
    auto channel = [&](const Matrix& x) {
        PauliCoefficients coeffs = pauli_expand_operator(x);
        const double tr = coeffs.identity();
        for (std::size_t i = 1; i < coeffs.size(); ++i) {
            const PauliString p = PauliString::from_index(i, n);
            double f = 1.0;
            for (int k = 0; k < n; ++k) {
                const Pauli a = p[k];
                if (a == Pauli::X || a == Pauli::Y) f *= d2[static_cast<std::size_t>(k)];
                if (a == Pauli::Z) f *= d1[static_cast<std::size_t>(k)];
            }
            coeffs.by_index(i) *= f;
        }
        for (int k = 0; k < n; ++k) {
            const std::size_t idx = PauliString::single(n, k, Pauli::Z).index();
            coeffs.by_index(idx) += tr * c.nuclei[static_cast<std::size_t>(k)].polarization *
                                    (1.0 - d1[static_cast<std::size_t>(k)]);
        }
        return pauli_operator(coeffs);
    };
    Matrix out = channel(herm);
    if (detail::max_abs(anti) > 0.0) out += kI * channel(anti);
    return out;
}

inline DensityMatrix apply_relaxation(const DensityMatrix& rho, double dt, const SpinSystemConfig& c) {
    return DensityMatrix(relax(rho.matrix(), dt, c), DensityMatrix::Unchecked{});
}

// ---------------------------------------------------------------------------
// Program execution
// ---------------------------------------------------------------------------

enum class Relaxation { off, on };

/// Runs the program on an arbitrary operator (state or deviation matrix).
inline Matrix evolve_operator(const Matrix& m, const PulseProgram& p, const SpinSystemConfig& c, Relaxation relaxation) {
    if (m.rows() != c.dim() || m.cols() != c.dim()) throw ValidationError("evolve_program: dimension mismatch");
    const Matrix h0 = internal_hamiltonian(c);
    Matrix x = m;
    for (const auto& e : p.events) {
        if (std::holds_alternative<Crusher>(e)) {
            x = crush(x);
            continue;
        }
        const Matrix u = event_propagator(e, c, h0);
        x = u * x * u.adjoint();
        if (relaxation == Relaxation::on) x = relax(x, event_duration(e), c);
    }
    return x;
}

inline DensityMatrix evolve_program(const DensityMatrix& rho, const PulseProgram& p, const SpinSystemConfig& c,
                                    Relaxation relaxation = Relaxation::off) {
    Matrix out = evolve_operator(rho.matrix(), p, c, relaxation);
    out = 0.5 * (out + out.adjoint());
    return DensityMatrix(std::move(out), DensityMatrix::Unchecked{});
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const PulseProgram& p) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : p.events) {
        if (const auto* s = std::get_if<RfSegment>(&e)) {
            events.push_back({{"type", "rf"}, {"amp_hz", s->amplitudes_hz}, {"phase_rad", s->phases_rad}, {"dur_s", s->duration_s}});
        } else if (const auto* d = std::get_if<Delay>(&e)) {
            events.push_back({{"type", "delay"}, {"dur_s", d->duration_s}});
        } else {
            events.push_back({{"type", "crusher"}});
        }
    }
    return {{"events", events}};
}

inline PulseProgram program_from_json(const nlohmann::json& j) {
    PulseProgram p;
    try {
        const auto& events = j.at("events");
        for (std::size_t i = 0; i < events.size(); ++i) {
            const auto& e = events[i];
            const std::string type = e.at("type").get<std::string>();
            if (type == "rf") {
                RfSegment s{e.at("amp_hz").get<std::vector<double>>(), e.at("phase_rad").get<std::vector<double>>(),
                            e.at("dur_s").get<double>()};
                if (s.duration_s < 0.0) throw ValidationError("events[" + std::to_string(i) + "].dur_s: negative");
                p.events.emplace_back(std::move(s));
            } else if (type == "delay") {
                Delay d{e.at("dur_s").get<double>()};
                if (d.duration_s < 0.0) throw ValidationError("events[" + std::to_string(i) + "].dur_s: negative");
                p.events.emplace_back(d);
            } else if (type == "crusher") {
                p.events.emplace_back(Crusher{});
            } else {
                throw ValidationError("events[" + std::to_string(i) + "].type: unknown event '" + type + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("pulse program JSON: ") + e.what());
    }
    return p;
}

}  // namespace nmrsim
