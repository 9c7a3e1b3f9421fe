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

// Gate library, circuits, single-qubit Euler decomposition and the
// circuit-to-pulse compiler.

#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nmrsim/core.hpp"
#include "nmrsim/dynamics.hpp"
#include "nmrsim/spin_system.hpp"

namespace nmrsim {

enum class GateName { I, X, Y, Z, H, P, X90, Y90, Rx, Ry, Rz, CNOT, CZ, CY, SWAP, Delay, Custom };

namespace detail {

struct GateInfo {
    GateName name;
    const char* label;
    int arity;   // -1: any (custom)
    int params;  // number of real parameters
};

inline constexpr std::array<GateInfo, 17> kGateTable{{
    {GateName::I, "I", 1, 0},       {GateName::X, "X", 1, 0},       {GateName::Y, "Y", 1, 0},
    {GateName::Z, "Z", 1, 0},       {GateName::H, "H", 1, 0},       {GateName::P, "P", 1, 1},
    {GateName::X90, "X90", 1, 0},   {GateName::Y90, "Y90", 1, 0},   {GateName::Rx, "Rx", 1, 1},
    {GateName::Ry, "Ry", 1, 1},     {GateName::Rz, "Rz", 1, 1},     {GateName::CNOT, "CNOT", 2, 0},
    {GateName::CZ, "CZ", 2, 0},     {GateName::CY, "CY", 2, 0},     {GateName::SWAP, "SWAP", 2, 0},
    {GateName::Delay, "Delay", -1, 1}, {GateName::Custom, "Custom", -1, 0},
}};

inline const GateInfo& gate_info(GateName g) {
    for (const auto& info : kGateTable) {
        if (info.name == g) return info;
    }
    throw ValidationError("unknown gate");
}

}  // namespace detail

inline std::string to_string(GateName g) { return detail::gate_info(g).label; }

inline GateName gate_name_from_string(const std::string& s) {
    for (const auto& info : detail::kGateTable) {
        if (s == info.label) return info.name;
    }
    std::string upper = s;
    for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    for (const auto& info : detail::kGateTable) {
        std::string l = info.label;
        for (auto& ch : l) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (upper == l) return info.name;
    }
    throw ValidationError("unknown gate name '" + s + "'");
}

/// One circuit element. Two-qubit gates list the control first. Delay acts on
/// the whole register (targets may be empty) and needs a machine config.
struct Gate {
    GateName name = GateName::I;
    std::vector<int> targets;
    std::vector<double> params;
    Matrix matrix;  // Custom only

    static Gate make(GateName g, std::vector<int> targets, std::vector<double> params = {}) {
        return Gate{g, std::move(targets), std::move(params), Matrix()};
    }
    static Gate custom(Matrix u, std::vector<int> targets) {
        return Gate{GateName::Custom, std::move(targets), {}, std::move(u)};
    }

    bool is_two_qubit() const { return targets.size() >= 2 && name != GateName::Delay; }

    double param(std::size_t i = 0) const { return params.at(i); }

    void validate(int n) const {
        const auto& info = detail::gate_info(name);
        const std::string label = info.label;
        if (info.arity > 0 && static_cast<int>(targets.size()) != info.arity) {
            throw ValidationError(label + ": expected " + std::to_string(info.arity) + " target(s)");
        }
        if (static_cast<int>(params.size()) != info.params) {
            throw ValidationError(label + ": expected " + std::to_string(info.params) + " parameter(s)");
        }
        for (double p : params) {
            if (!std::isfinite(p)) throw ValidationError(label + ": non-finite parameter");
        }
        for (std::size_t i = 0; i < targets.size(); ++i) {
            if (targets[i] < 0 || targets[i] >= n) {
                throw ValidationError(label + ": target " + std::to_string(targets[i]) + " out of range for n=" +
                                      std::to_string(n));
            }
            for (std::size_t k = 0; k < i; ++k) {
                if (targets[k] == targets[i]) throw ValidationError(label + ": repeated target");
            }
        }
        if (name == GateName::Delay && params[0] < 0.0) throw ValidationError("Delay: negative duration");
        if (name == GateName::Custom) {
            if (targets.empty()) throw ValidationError("Custom: needs at least one target");
            const Eigen::Index d = Eigen::Index{1} << targets.size();
            if (matrix.rows() != d || matrix.cols() != d) throw ValidationError("Custom: matrix size does not match targets");
            if (!is_unitary(matrix, 1e-10)) throw ValidationError("Custom: matrix is not unitary");
        }
    }
};

struct Circuit {
    int n = 1;
    std::vector<Gate> gates;

    Circuit() = default;
    explicit Circuit(int qubits) : n(qubits) {
        if (n < 1 || n > kMaxQubits) throw ValidationError("circuit: bad qubit count");
    }

    Circuit& add(GateName g, std::vector<int> targets, std::vector<double> params = {}) {
        Gate gate = Gate::make(g, std::move(targets), std::move(params));
        gate.validate(n);
        gates.push_back(std::move(gate));
        return *this;
    }

    Circuit& add(Gate g) {
        g.validate(n);
        gates.push_back(std::move(g));
        return *this;
    }

    Circuit& append(const Circuit& other) {
        if (other.n != n) throw ValidationError("circuit append: register size mismatch");
        gates.insert(gates.end(), other.gates.begin(), other.gates.end());
        return *this;
    }

    std::size_t two_qubit_gate_count() const {
        return static_cast<std::size_t>(
            std::count_if(gates.begin(), gates.end(), [](const Gate& g) { return g.is_two_qubit(); }));
    }

    void validate() const {
        if (n < 1 || n > kMaxQubits) throw ValidationError("circuit: bad qubit count");
        for (const auto& g : gates) g.validate(n);
    }
};

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

inline Matrix rx(double theta) {
    Matrix m(2, 2);
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    m << c, -kI * s, -kI * s, c;
    return m;
}

inline Matrix ry(double theta) {
    Matrix m(2, 2);
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    m << c, -s, s, c;
    return m;
}

inline Matrix rz(double theta) {
    Matrix m(2, 2);
    m << std::exp(-kI * (theta / 2)), 0, 0, std::exp(kI * (theta / 2));
    return m;
}

inline Matrix hadamard() {
    Matrix m(2, 2);
    m << 1, 1, 1, -1;
    return m / std::sqrt(2.0);
}

inline Matrix phase_gate(double phi) {
    Matrix m(2, 2);
    m << 1, 0, 0, std::exp(kI * phi);
    return m;
}

/// Controlled-g on (control, target) as a 4x4 with the control as the
/// leftmost factor.
inline Matrix controlled(const Matrix& g) {
    Matrix m = Matrix::Identity(4, 4);
    m.block(2, 2, 2, 2) = g;
    return m;
}

/// Embeds a k-qubit operator acting on `targets` (first target = most
/// significant local bit) into an n-qubit register.
inline Matrix embed(const Matrix& g, const std::vector<int>& targets, int n) {
    const int k = static_cast<int>(targets.size());
    const std::size_t d = std::size_t{1} << n;
    const std::size_t dk = std::size_t{1} << k;
    if (static_cast<std::size_t>(g.rows()) != dk) throw ValidationError("embed: operator size does not match targets");
    std::size_t tmask = 0;
    for (int t : targets) tmask |= std::size_t{1} << (n - 1 - t);
    auto local = [&](std::size_t full) {
        std::size_t s = 0;
        for (int i = 0; i < k; ++i) {
            s = (s << 1) | ((full >> (n - 1 - targets[static_cast<std::size_t>(i)])) & 1U);
        }
        return s;
    };
    auto spread = [&](std::size_t s) {
        std::size_t full = 0;
        for (int i = 0; i < k; ++i) {
            if ((s >> (k - 1 - i)) & 1U) full |= std::size_t{1} << (n - 1 - targets[static_cast<std::size_t>(i)]);
        }
        return full;
    };
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t col = 0; col < d; ++col) {
        const std::size_t rest = col & ~tmask;
        const std::size_t sc = local(col);
        for (std::size_t sr = 0; sr < dk; ++sr) {
            const cplx v = g(static_cast<Eigen::Index>(sr), static_cast<Eigen::Index>(sc));
            if (v == cplx{0.0, 0.0}) continue;
            out(static_cast<Eigen::Index>(rest | spread(sr)), static_cast<Eigen::Index>(col)) = v;
        }
    }
    return out;
}

/// Local (unembedded) matrix of a gate. Delay needs a config.
inline Matrix gate_local_matrix(const Gate& g, const SpinSystemConfig* config = nullptr) {
    switch (g.name) {
        case GateName::I: return Matrix::Identity(2, 2);
        case GateName::X: return sigma_x();
        case GateName::Y: return sigma_y();
        case GateName::Z: return sigma_z();
        case GateName::H: return hadamard();
        case GateName::P: return phase_gate(g.param());
        case GateName::X90: return rx(kPi / 2);
        case GateName::Y90: return ry(kPi / 2);
        case GateName::Rx: return rx(g.param());
        case GateName::Ry: return ry(g.param());
        case GateName::Rz: return rz(g.param());
        case GateName::CNOT: return controlled(sigma_x());
        case GateName::CZ: return controlled(sigma_z());
        case GateName::CY: return controlled(-kI * sigma_y());
        case GateName::SWAP: {
            Matrix m = Matrix::Zero(4, 4);
            m(0, 0) = m(1, 2) = m(2, 1) = m(3, 3) = 1.0;
            return m;
        }
        case GateName::Delay: {
            if (config == nullptr) throw ValidationError("Delay gate needs a machine config");
            return segment_propagator(internal_hamiltonian(*config), g.param());
        }
        case GateName::Custom: return g.matrix;
    }
    throw ValidationError("unknown gate");
}

inline Matrix gate_matrix(const Gate& g, int n, const SpinSystemConfig* config = nullptr) {
    g.validate(n);
    if (g.name == GateName::Delay) {
        if (config == nullptr) throw ValidationError("Delay gate needs a machine config");
        if (config->n() != n) throw ValidationError("Delay gate: config size does not match circuit");
        return gate_local_matrix(g, config);
    }
    return embed(gate_local_matrix(g, config), g.targets, n);
}

inline Matrix gate_matrix(const Gate& g, int n, const SpinSystemConfig& config) { return gate_matrix(g, n, &config); }

/// Later gates multiply on the left.
inline Matrix circuit_unitary(const Circuit& c, const SpinSystemConfig* config = nullptr) {
    c.validate();
    const Eigen::Index d = Eigen::Index{1} << c.n;
    Matrix u = Matrix::Identity(d, d);
    for (const auto& g : c.gates) u = gate_matrix(g, c.n, config) * u;
    return u;
}

inline Matrix circuit_unitary(const Circuit& c, const SpinSystemConfig& config) { return circuit_unitary(c, &config); }

/// |Tr(u target^dagger)|^2 / d^2.
inline double gate_fidelity(const Matrix& u, const Matrix& target) {
    if (u.rows() != target.rows() || u.cols() != target.cols() || u.rows() != u.cols()) {
        throw ValidationError("gate_fidelity: dimension mismatch");
    }
    const double d = static_cast<double>(u.rows());
    return std::clamp(std::norm((u * target.adjoint()).trace()) / (d * d), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Single-qubit decomposition: u = e^{i alpha} Rx(beta) Ry(gamma) Rx(delta)
// ---------------------------------------------------------------------------

struct EulerAngles {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;

    Matrix matrix() const { return std::exp(kI * alpha) * rx(beta) * ry(gamma) * rx(delta); }
};

inline EulerAngles decompose_single_qubit(const Matrix& u) {
    if (u.rows() != 2 || u.cols() != 2) throw ValidationError("decompose_single_qubit: expected a 2x2 matrix");
    if (!is_unitary(u, 1e-10)) throw ValidationError("decompose_single_qubit: matrix is not unitary");
    // Conjugating by Ry(pi/2) turns Rx(t) into Rz(-t), so solve a ZYZ problem.
    const Matrix v = ry(kPi / 2) * u * ry(-kPi / 2);
    const double alpha = std::arg(v.determinant()) / 2.0;
    const Matrix w = v * std::exp(-kI * alpha);
    const cplx p = w(0, 0);
    const cplx q = w(1, 0);
    const double gamma = 2.0 * std::atan2(std::abs(q), std::abs(p));
    constexpr double eps = 1e-14;
    const double sum = std::abs(p) > eps ? -2.0 * std::arg(p) : 0.0;   // a + b
    const double diff = std::abs(q) > eps ? 2.0 * std::arg(q) : 0.0;   // a - b
    const double a = 0.5 * (sum + diff);
    const double b = 0.5 * (sum - diff);
    EulerAngles e{alpha, -a, gamma, -b};
    // The half-angle sqrt of det leaves a sign ambiguity; fold it into alpha.
    if ((e.matrix() - u).cwiseAbs().maxCoeff() > 1e-8) e.alpha += kPi;
    return e;
}

// ---------------------------------------------------------------------------
// Compilation to square pulses
// ---------------------------------------------------------------------------

/// Hard-pulse amplitude used when none is requested. Coupling evolution
/// during a pulse leaves an amplitude error of order J / amplitude per pulse.
inline constexpr double kHardPulseHz = 1e10;

namespace detail {

class PulseBuilder {
public:
    PulseBuilder(const SpinSystemConfig& c, double amp_hz) : c_(c), amp_(amp_hz), nch_(c.channels().size()) {
        if (!(amp_hz > 0.0) || !std::isfinite(amp_hz)) throw ValidationError("compile: pulse amplitude must be positive");
    }

    /// Rotation by theta about the axis at angle phi in the xy plane.
    void rotate(int qubit, double theta, double phi) {
        if (theta == 0.0) return;
        if (theta < 0.0) {
            theta = -theta;
            phi += kPi;
        }
        phi = std::remainder(phi, kTwoPi);
        if (phi < 0.0) phi += kTwoPi;
        RfSegment s;
        s.amplitudes_hz.assign(nch_, 0.0);
        s.phases_rad.assign(nch_, 0.0);
        const auto ch = static_cast<std::size_t>(c_.channel_of(qubit));
        s.amplitudes_hz[ch] = amp_;
        s.phases_rad[ch] = phi;
        s.duration_s = theta / (kTwoPi * amp_);
        program_.events.emplace_back(std::move(s));
    }

    void x(int q, double theta) { rotate(q, theta, 0.0); }
    void y(int q, double theta) { rotate(q, theta, kPi / 2); }

    /// Rz(theta) as y(pi/2), x(theta), y(-pi/2) in time order.
    void z(int q, double theta) {
        if (theta == 0.0) return;
        y(q, kPi / 2);
        x(q, theta);
        y(q, -kPi / 2);
    }

    void single(int q, const Matrix& u) {
        const EulerAngles e = decompose_single_qubit(u);
        x(q, e.delta);
        y(q, e.gamma);
        x(q, e.beta);
    }

    /// U_J(1/2J) between a and b with every other spin refocused.
    void coupling_delay(int a, int b) {
        const double jab = c_.j(a, b);
        if (jab == 0.0) {
            throw ValidationError("uncoupled pair (" + std::to_string(a) + "," + std::to_string(b) +
                                  "): J = 0, two-qubit gate not realizable");
        }
        // A negative J reaches the same phase after 3/(2|J|), up to global phase.
        const double t = jab > 0.0 ? 1.0 / (2.0 * jab) : 3.0 / (2.0 * std::abs(jab));
        std::vector<int> spectators;
        for (int k = 0; k < c_.n(); ++k) {
            if (k != a && k != b) spectators.push_back(k);
        }
        for (std::size_t i = 0; i < spectators.size(); ++i) {
            for (std::size_t k = i + 1; k < spectators.size(); ++k) {
                if (c_.j(spectators[i], spectators[k]) != 0.0) {
                    throw ValidationError("compile: coupled spectator spins cannot be refocused");
                }
            }
        }
        if (spectators.empty()) {
            program_.events.emplace_back(Delay{t});
            return;
        }
        program_.events.emplace_back(Delay{t / 2});
        for (int s : spectators) x(s, kPi);
        program_.events.emplace_back(Delay{t / 2});
        for (int s : spectators) x(s, kPi);
    }

    void cnot(int control, int target) {
        y(target, kPi / 2);
        coupling_delay(control, target);
        y(target, -kPi / 2);
        x(target, kPi / 2);
        x(control, -kPi / 2);
        y(control, kPi / 2);
        x(control, kPi / 2);
    }

    void delay(double t) { program_.events.emplace_back(Delay{t}); }

    PulseProgram take() { return std::move(program_); }

private:
    const SpinSystemConfig& c_;
    double amp_;
    std::size_t nch_;
    PulseProgram program_;
};

inline void check_compilable(const SpinSystemConfig& c) {
    c.validate();
    if (c.coupling_model != CouplingModel::weak) throw ValidationError("compile: requires the weak coupling model");
    for (int k = 0; k < c.n(); ++k) {
        if (c.nuclei[static_cast<std::size_t>(k)].offset_hz != 0.0) {
            throw ValidationError("compile: nuclei[" + std::to_string(k) + "].offset_hz must be 0 (on-resonance)");
        }
    }
    if (c.channels().size() != static_cast<std::size_t>(c.n())) {
        throw ValidationError("compile: every qubit needs its own RF channel (distinct labels)");
    }
}

}  // namespace detail

/// Square-pulse program realizing the circuit up to global phase.
inline PulseProgram compile_circuit(const Circuit& circuit, const SpinSystemConfig& config,
                                    double pulse_amp_hz = kHardPulseHz) {
    circuit.validate();
    detail::check_compilable(config);
    if (config.n() != circuit.n) throw ValidationError("compile: circuit size does not match machine");
    detail::PulseBuilder b(config, pulse_amp_hz);
    for (const auto& g : circuit.gates) {
        const auto& t = g.targets;
        switch (g.name) {
            case GateName::I: break;
            case GateName::X: b.x(t[0], kPi / 2); b.x(t[0], kPi / 2); break;
            case GateName::Y: b.y(t[0], kPi / 2); b.y(t[0], kPi / 2); break;
            case GateName::Z: b.z(t[0], kPi); break;
            case GateName::H: b.y(t[0], kPi / 2); b.x(t[0], kPi); break;
            case GateName::P: b.z(t[0], g.param()); break;
            case GateName::X90: b.x(t[0], kPi / 2); break;
            case GateName::Y90: b.y(t[0], kPi / 2); break;
            case GateName::Rx: b.x(t[0], g.param()); break;
            case GateName::Ry: b.y(t[0], g.param()); break;
            case GateName::Rz: b.z(t[0], g.param()); break;
            case GateName::CNOT: b.cnot(t[0], t[1]); break;
            case GateName::CZ:
                b.y(t[1], kPi / 2); b.x(t[1], kPi);
                b.cnot(t[0], t[1]);
                b.y(t[1], kPi / 2); b.x(t[1], kPi);
                break;
            case GateName::CY:
                // (S^dag on control)(S on target) CNOT (S^dag on target)
                b.z(t[1], -kPi / 2);
                b.cnot(t[0], t[1]);
                b.z(t[1], kPi / 2);
                b.z(t[0], -kPi / 2);
                break;
            case GateName::SWAP:
                b.cnot(t[0], t[1]);
                b.cnot(t[1], t[0]);
                b.cnot(t[0], t[1]);
                break;
            case GateName::Delay: b.delay(g.param()); break;
            case GateName::Custom:
                if (t.size() != 1) throw ValidationError("compile: custom gates must act on one qubit");
                b.single(t[0], g.matrix);
                break;
        }
    }
    return b.take();
}

// ---------------------------------------------------------------------------
// JSON: {"n": int, "gates": [{"name": str, "targets": [int], "params": [num]}]}
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Gate& g) {
    nlohmann::json j = {{"name", to_string(g.name)}, {"targets", g.targets}, {"params", g.params}};
    if (g.name == GateName::Custom) j["matrix"] = matrix_to_json(g.matrix);
    return j;
}

inline nlohmann::json to_json(const Circuit& c) {
    nlohmann::json gates = nlohmann::json::array();
    for (const auto& g : c.gates) gates.push_back(to_json(g));
    return {{"n", c.n}, {"gates", gates}};
}

inline Circuit circuit_from_json(const nlohmann::json& j) {
    try {
        Circuit c(j.at("n").get<int>());
        const auto& gates = j.at("gates");
        if (!gates.is_array()) throw ValidationError("gates: expected an array");
        for (std::size_t i = 0; i < gates.size(); ++i) {
            const auto& e = gates[i];
            Gate g;
            g.name = gate_name_from_string(e.at("name").get<std::string>());
            if (e.contains("targets")) g.targets = e.at("targets").get<std::vector<int>>();
            if (e.contains("params")) g.params = e.at("params").get<std::vector<double>>();
            if (g.name == GateName::Custom) g.matrix = matrix_from_json(e.at("matrix"));
            try {
                c.add(std::move(g));
            } catch (const ValidationError& err) {
                throw ValidationError("gates[" + std::to_string(i) + "]: " + err.what());
            }
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("circuit JSON: ") + e.what());
    }
}

}  // namespace nmrsim
