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

// Small-register algorithms run either as ideal circuit unitaries or as
// compiled square-pulse programs on a machine model. Measurement is the
// diagonal of the final density matrix (ensemble average).

#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nmrsim/control.hpp"
#include "nmrsim/core.hpp"
#include "nmrsim/dynamics.hpp"
#include "nmrsim/measurement.hpp"
#include "nmrsim/spin_system.hpp"

namespace nmrsim {

enum class ExecutionPath { ideal, pulse };

inline std::string to_string(ExecutionPath p) { return p == ExecutionPath::ideal ? "ideal" : "pulse"; }

inline ExecutionPath execution_path_from_string(const std::string& s) {
    if (s == "ideal") return ExecutionPath::ideal;
    if (s == "pulse") return ExecutionPath::pulse;
    throw ValidationError("path: expected 'ideal' or 'pulse', got '" + s + "'");
}

struct RunOptions {
    ExecutionPath path = ExecutionPath::ideal;
    Relaxation relaxation = Relaxation::off;
    double pulse_amp_hz = kHardPulseHz;
    SpinSystemConfig machine = gemini();
};

struct AlgorithmReport {
    std::string algorithm;
    Circuit circuit;
    DensityMatrix final_state = DensityMatrix::maximally_mixed(1);
    std::map<std::string, double> probabilities;
    nlohmann::json derived = nlohmann::json::object();
    ExecutionPath path = ExecutionPath::ideal;
    std::optional<double> fidelity;

    double probability(const std::string& label) const {
        const auto it = probabilities.find(label);
        return it == probabilities.end() ? 0.0 : it->second;
    }

    /// Basis label with the largest population.
    std::string dominant() const {
        std::string best;
        double p = -1.0;
        for (const auto& [k, v] : probabilities) {
            if (v > p) {
                p = v;
                best = k;
            }
        }
        return best;
    }
};

inline std::map<std::string, double> basis_probabilities(const DensityMatrix& rho) {
    std::map<std::string, double> out;
    const Eigen::VectorXd p = rho.probabilities();
    for (Eigen::Index i = 0; i < p.size(); ++i) out[basis_label(static_cast<std::size_t>(i), rho.n())] = p(i);
    return out;
}

/// Runs `c` from `initial` (|0...0> by default) along the requested path.
inline DensityMatrix execute(const Circuit& c, const RunOptions& opt, std::optional<DensityMatrix> initial = std::nullopt) {
    c.validate();
    const DensityMatrix rho0 = initial ? *initial : DensityMatrix::from_ket(Ket::basis(c.n, 0));
    if (rho0.n() != c.n) throw ValidationError("execute: initial state size does not match circuit");
    if (opt.path == ExecutionPath::ideal) {
        const SpinSystemConfig* cfg = opt.machine.n() == c.n ? &opt.machine : nullptr;
        return rho0.evolved(circuit_unitary(c, cfg));
    }
    if (opt.machine.n() != c.n) throw ValidationError("execute: circuit size does not match the machine");
    const PulseProgram p = compile_circuit(c, opt.machine, opt.pulse_amp_hz);
    return evolve_program(rho0, p, opt.machine, opt.relaxation);
}

inline AlgorithmReport make_report(std::string name, Circuit c, const RunOptions& opt,
                                   std::optional<DensityMatrix> initial = std::nullopt) {
    AlgorithmReport r;
    r.algorithm = std::move(name);
    r.final_state = execute(c, opt, std::move(initial));
    r.circuit = std::move(c);
    r.probabilities = basis_probabilities(r.final_state);
    r.path = opt.path;
    return r;
}

// ---------------------------------------------------------------------------
// Deutsch
// ---------------------------------------------------------------------------

enum class DeutschCase { f1, f2, f3, f4 };

inline DeutschCase deutsch_case_from_string(const std::string& s) {
    if (s == "f1") return DeutschCase::f1;
    if (s == "f2") return DeutschCase::f2;
    if (s == "f3") return DeutschCase::f3;
    if (s == "f4") return DeutschCase::f4;
    throw ValidationError("deutsch: case must be f1..f4");
}

/// Oracle for the four one-bit functions: f1 = 0, f2 = 1, f3 = x, f4 = 1 - x.
inline Circuit deutsch_oracle(DeutschCase f) {
    Circuit c(2);
    switch (f) {
        case DeutschCase::f1: break;
        case DeutschCase::f2: c.add(GateName::X, {1}); break;
        case DeutschCase::f3: c.add(GateName::CNOT, {0, 1}); break;
        case DeutschCase::f4:
            c.add(GateName::X, {0});
            c.add(GateName::CNOT, {0, 1});
            c.add(GateName::X, {0});
            break;
    }
    return c;
}

inline AlgorithmReport run_deutsch(DeutschCase f, const RunOptions& opt = {}) {
    Circuit c(2);
    c.add(GateName::X, {1});
    c.add(GateName::H, {0}).add(GateName::H, {1});
    c.append(deutsch_oracle(f));
    c.add(GateName::H, {0}).add(GateName::H, {1});
    AlgorithmReport r = make_report("deutsch", std::move(c), opt);
    const bool balanced = r.probability("11") > 0.5;
    const std::string expected = (f == DeutschCase::f1 || f == DeutschCase::f2) ? "01" : "11";
    r.fidelity = state_fidelity(Ket::from_bits(expected), r.final_state);
    r.derived = {{"verdict", balanced ? "balanced" : "constant"}, {"expected_state", expected}};
    return r;
}

// ---------------------------------------------------------------------------
// Grover, N = 4
// ---------------------------------------------------------------------------

/// Oracle marking basis state target-1 (1 -> |00>, ..., 4 -> |11>).
inline Circuit grover_oracle(int target) {
    if (target < 1 || target > 4) throw ValidationError("grover4: target must be 1..4");
    const int bits = target - 1;
    Circuit c(2);
    std::vector<int> flip;
    for (int q = 0; q < 2; ++q) {
        if (((bits >> (1 - q)) & 1) == 0) flip.push_back(q);
    }
    for (int q : flip) c.add(GateName::X, {q});
    c.add(GateName::CZ, {0, 1});
    for (int q : flip) c.add(GateName::X, {q});
    return c;
}

/// Inversion about the mean: H H X X CZ X X H H.
inline Circuit grover_diffusion() {
    Circuit c(2);
    c.add(GateName::H, {0}).add(GateName::H, {1});
    c.add(GateName::X, {0}).add(GateName::X, {1});
    c.add(GateName::CZ, {0, 1});
    c.add(GateName::X, {0}).add(GateName::X, {1});
    c.add(GateName::H, {0}).add(GateName::H, {1});
    return c;
}

inline Matrix grover_operator(int target) {
    Circuit g = grover_oracle(target);
    g.append(grover_diffusion());
    return circuit_unitary(g);
}

inline AlgorithmReport run_grover4(int target, const RunOptions& opt = {}) {
    Circuit c(2);
    c.add(GateName::H, {0}).add(GateName::H, {1});
    c.append(grover_oracle(target));
    c.append(grover_diffusion());
    AlgorithmReport r = make_report("grover4", std::move(c), opt);
    const std::string label = basis_label(static_cast<std::size_t>(target - 1), 2);
    r.fidelity = state_fidelity(Ket::from_bits(label), r.final_state);
    r.derived = {{"target", target}, {"target_state", label}, {"p_target", r.probability(label)}};
    return r;
}

// ---------------------------------------------------------------------------
// Bernstein-Vazirani (phase-oracle form)
// ---------------------------------------------------------------------------

inline AlgorithmReport run_bernstein_vazirani(const std::string& a, const RunOptions& opt = {}) {
    const int n = static_cast<int>(a.size());
    if (n < 1 || n > 3) throw ValidationError("bv: secret string must have 1..3 bits");
    for (char ch : a) {
        if (ch != '0' && ch != '1') throw ValidationError("bv: secret string must be binary");
    }
    Circuit c(n);
    for (int q = 0; q < n; ++q) c.add(GateName::H, {q});
    for (int q = 0; q < n; ++q) {
        if (a[static_cast<std::size_t>(q)] == '1') c.add(GateName::Z, {q});
    }
    for (int q = 0; q < n; ++q) c.add(GateName::H, {q});
    AlgorithmReport r = make_report("bv", std::move(c), opt);
    r.fidelity = state_fidelity(Ket::from_bits(a), r.final_state);
    r.derived = {{"secret", a},
                 {"measured", r.dominant()},
                 {"two_qubit_gates", r.circuit.two_qubit_gate_count()}};
    return r;
}

// ---------------------------------------------------------------------------
// Approximate counting
// ---------------------------------------------------------------------------

enum class CountingCase { M0, M1_first, M1_second, M2 };

inline CountingCase counting_case_from_string(const std::string& s) {
    if (s == "M0") return CountingCase::M0;
    if (s == "M1_first") return CountingCase::M1_first;
    if (s == "M1_second") return CountingCase::M1_second;
    if (s == "M2") return CountingCase::M2;
    throw ValidationError("count: case must be M0, M1_first, M1_second or M2");
}

inline double counting_theta(CountingCase c) {
    switch (c) {
        case CountingCase::M0: return 0.0;
        case CountingCase::M1_first:
        case CountingCase::M1_second: return kPi / 2;
        case CountingCase::M2: return kPi;
    }
    return 0.0;
}

/// Controlled-G with qubit 0 as control and qubit 1 as the one-qubit search
/// register: controlled-R1 for the case, then controlled-R2 = CNOT.
inline Circuit controlled_grover(CountingCase m) {
    Circuit c(2);
    switch (m) {
        case CountingCase::M0: break;
        case CountingCase::M1_first:
            c.add(GateName::X, {1});
            c.add(GateName::CZ, {0, 1});
            c.add(GateName::X, {1});
            break;
        case CountingCase::M1_second: c.add(GateName::CZ, {0, 1}); break;
        case CountingCase::M2: c.add(GateName::Z, {0}); break;
    }
    c.add(GateName::CNOT, {0, 1});
    return c;
}

struct CountingResult {
    std::vector<int> l_values;
    std::vector<double> sigma_z;  // control <sigma_z> per l
    std::vector<DensityMatrix> control_states;
    double theta = 0.0;
    double m_estimate = 0.0;
    int m_rounded = 0;
    AlgorithmReport report;  // final l
};

/// Best theta in [0, pi] for <sigma_z>(l) = cos(l theta), by grid then
/// golden-section refinement of the squared error.
inline double fit_counting_theta(const std::vector<int>& l, const std::vector<double>& z) {
    auto err = [&](double th) {
        double s = 0.0;
        for (std::size_t i = 0; i < l.size(); ++i) {
            const double r = z[i] - std::cos(l[i] * th);
            s += r * r;
        }
        return s;
    };
    const int grid = 20000;
    double best = 0.0, best_e = err(0.0);
    for (int i = 1; i <= grid; ++i) {
        const double th = kPi * i / grid;
        const double e = err(th);
        if (e < best_e) {
            best_e = e;
            best = th;
        }
    }
    double a = std::max(0.0, best - kPi / grid), b = std::min(kPi, best + kPi / grid);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 100; ++it) {
        const double c1 = b - g * (b - a), c2 = a + g * (b - a);
        if (err(c1) <= err(c2)) {
            b = c2;
        } else {
            a = c1;
        }
    }
    const double th = 0.5 * (a + b);
    return err(th) <= best_e ? th : best;
}

inline CountingResult run_counting(CountingCase m, const std::vector<int>& l_values, const RunOptions& opt = {}) {
    if (l_values.empty()) throw ValidationError("count: l_values must be nonempty");
    CountingResult out;
    out.l_values = l_values;
    for (int l : l_values) {
        if (l < 0) throw ValidationError("count: l must be >= 0");
        Circuit c(2);
        c.add(GateName::H, {0}).add(GateName::H, {1});
        const Circuit cg = controlled_grover(m);
        for (int i = 0; i < l; ++i) c.append(cg);
        c.add(GateName::H, {0});
        AlgorithmReport r = make_report("count", std::move(c), opt);
        const DensityMatrix control = partial_trace(r.final_state, {0});
        out.sigma_z.push_back((control.matrix()(0, 0) - control.matrix()(1, 1)).real());
        out.control_states.push_back(control);
        out.report = std::move(r);
    }
    constexpr double kSearchSpace = 2.0;
    out.theta = fit_counting_theta(out.l_values, out.sigma_z);
    out.m_estimate = kSearchSpace * std::pow(std::sin(out.theta / 2.0), 2);
    out.m_rounded = static_cast<int>(std::lround(out.m_estimate));
    out.report.derived = {{"l_values", out.l_values},
                          {"sigma_z", out.sigma_z},
                          {"theta", out.theta},
                          {"m_estimate", out.m_estimate},
                          {"m_rounded", out.m_rounded}};
    return out;
}

// ---------------------------------------------------------------------------
// Bell states: Psi+- = |00> +- |11>, Phi+- = |01> +- |10>
// ---------------------------------------------------------------------------

enum class BellState { psi_plus, psi_minus, phi_plus, phi_minus };
enum class BellRecipe { CY, CNOT };

inline BellState bell_state_from_string(const std::string& s) {
    if (s == "psi+" || s == "psi_plus") return BellState::psi_plus;
    if (s == "psi-" || s == "psi_minus") return BellState::psi_minus;
    if (s == "phi+" || s == "phi_plus") return BellState::phi_plus;
    if (s == "phi-" || s == "phi_minus") return BellState::phi_minus;
    throw ValidationError("bell: state must be psi+, psi-, phi+ or phi-");
}

inline BellRecipe bell_recipe_from_string(const std::string& s) {
    if (s == "CY" || s == "cy") return BellRecipe::CY;
    if (s == "CNOT" || s == "cnot") return BellRecipe::CNOT;
    throw ValidationError("bell: recipe must be CY or CNOT");
}

inline Ket bell_ket(BellState b) {
    Vector v = Vector::Zero(4);
    const double s = 1.0 / std::sqrt(2.0);
    switch (b) {
        case BellState::psi_plus: v(0) = s; v(3) = s; break;
        case BellState::psi_minus: v(0) = s; v(3) = -s; break;
        case BellState::phi_plus: v(1) = s; v(2) = s; break;
        case BellState::phi_minus: v(1) = s; v(2) = -s; break;
    }
    return Ket(v);
}

inline std::string to_string(BellState b) {
    switch (b) {
        case BellState::psi_plus: return "psi+";
        case BellState::psi_minus: return "psi-";
        case BellState::phi_plus: return "phi+";
        case BellState::phi_minus: return "phi-";
    }
    return "?";
}

inline Circuit bell_circuit(BellState b, BellRecipe recipe) {
    Circuit c(2);
    c.add(GateName::H, {0});
    const bool phi = b == BellState::phi_plus || b == BellState::phi_minus;
    const bool minus = b == BellState::psi_minus || b == BellState::phi_minus;
    if (recipe == BellRecipe::CY) {
        if (b != BellState::phi_minus) throw ValidationError("bell: the CY recipe only prepares phi-");
        c.add(GateName::X, {1});
        c.add(GateName::CY, {0, 1});
        return c;
    }
    if (phi) c.add(GateName::X, {1});
    if (minus) c.add(GateName::Z, {0});
    c.add(GateName::CNOT, {0, 1});
    return c;
}

inline AlgorithmReport prepare_bell(BellState b, BellRecipe recipe, const RunOptions& opt = {}) {
    AlgorithmReport r = make_report("bell", bell_circuit(b, recipe), opt);
    r.fidelity = state_fidelity(bell_ket(b), r.final_state);
    const double p0 = partial_trace(r.final_state, {0}).purity();
    const double p1 = partial_trace(r.final_state, {1}).purity();
    r.derived = {{"state", to_string(b)},
                 {"recipe", recipe == BellRecipe::CY ? "CY" : "CNOT"},
                 {"reduced_purity", {p0, p1}}};
    return r;
}

// ---------------------------------------------------------------------------
// Harmonic oscillator levels on two spins: |n=0..3> -> |00>,|10>,|11>,|01>
// ---------------------------------------------------------------------------

enum class QhoInitial { n0, n0_plus_n3, uniform4 };

inline QhoInitial qho_initial_from_string(const std::string& s) {
    if (s == "n0") return QhoInitial::n0;
    if (s == "n0_plus_n3") return QhoInitial::n0_plus_n3;
    if (s == "uniform4") return QhoInitial::uniform4;
    throw ValidationError("qho: initial must be n0, n0_plus_n3 or uniform4");
}

inline std::string to_string(QhoInitial q) {
    switch (q) {
        case QhoInitial::n0: return "n0";
        case QhoInitial::n0_plus_n3: return "n0_plus_n3";
        case QhoInitial::uniform4: return "uniform4";
    }
    return "?";
}

/// Delay producing the coupling part of the evolution for a given Omega t.
inline double qho_delay(double omega_t, double j_hz) {
    if (j_hz == 0.0) throw ValidationError("qho: J = 0");
    return omega_t / (kPi * std::abs(j_hz));
}

inline Circuit qho_circuit(QhoInitial init, double omega_t, const SpinSystemConfig& machine) {
    if (machine.n() != 2) throw ValidationError("qho: requires a 2-qubit machine");
    if (!std::isfinite(omega_t)) throw ValidationError("qho: omega*t must be finite");
    const double j = machine.j(0, 1);
    Circuit c(2);
    switch (init) {
        case QhoInitial::n0: break;
        case QhoInitial::n0_plus_n3: c.add(GateName::Y90, {1}); break;
        case QhoInitial::uniform4: c.add(GateName::H, {0}).add(GateName::H, {1}); break;
    }
    const double t = qho_delay(omega_t, j);
    // The pi pulses invert the sign of the coupling phase; for J < 0 it is
    // already inverted.
    const double flip = j > 0.0 ? kPi : 0.0;
    if (flip != 0.0) c.add(GateName::Rx, {0}, {flip});
    c.add(GateName::Delay, {}, {t});
    if (flip != 0.0) c.add(GateName::Rx, {0}, {-flip});
    c.add(GateName::Rx, {1}, {kPi / 2});
    c.add(GateName::Ry, {1}, {2.0 * omega_t});
    c.add(GateName::Rx, {1}, {-kPi / 2});
    return c;
}

inline Ket qho_initial_ket(QhoInitial init) {
    Vector v = Vector::Zero(4);
    switch (init) {
        case QhoInitial::n0: v(0) = 1.0; break;
        case QhoInitial::n0_plus_n3: v(0) = v(1) = 1.0 / std::sqrt(2.0); break;
        case QhoInitial::uniform4: v.setConstant(0.5); break;
    }
    return Ket(v);
}

inline double wrap_phase(double a) {
    a = std::remainder(a, kTwoPi);
    return a;
}

inline std::vector<AlgorithmReport> simulate_qho(QhoInitial init, const std::vector<double>& omega_t_values,
                                                 const RunOptions& opt = {}) {
    std::vector<AlgorithmReport> out;
    for (double wt : omega_t_values) {
        Circuit c = qho_circuit(init, wt, opt.machine);
        AlgorithmReport r = make_report("qho", std::move(c), opt);
        const DensityMatrix rho = tomography(r.final_state, opt.machine);
        const double phase = std::arg(rho.matrix()(0, 1));
        r.fidelity = init == QhoInitial::n0 ? std::optional<double>(state_fidelity(Ket::basis(2, 0), rho)) : std::nullopt;
        r.derived = {{"initial", to_string(init)},
                     {"omega_t", wt},
                     {"delay_s", qho_delay(wt, opt.machine.j(0, 1))},
                     {"coherence_phase", phase},
                     {"expected_phase", wrap_phase(3.0 * wt)}};
        r.final_state = rho;
        r.probabilities = basis_probabilities(rho);
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// DQC1
// ---------------------------------------------------------------------------

/// Normalized trace Tr(u) / 2^n from one polarized control qubit and a
/// maximally mixed register.
inline cplx dqc1_trace(const Matrix& u, double epsilon) {
    if (epsilon == 0.0) throw ValidationError("dqc1: epsilon must be nonzero");
    if (std::abs(epsilon) > 1.0) throw ValidationError("dqc1: |epsilon| must be <= 1");
    if (u.rows() != u.cols()) throw ValidationError("dqc1: u must be square");
    const int n = detail::qubits_for_dimension(u.rows());
    if (n > 2) throw ValidationError("dqc1: register limited to 2 qubits");
    if (!is_unitary(u, 1e-10)) throw ValidationError("dqc1: u is not unitary");
    const Eigen::Index d = u.rows();
    Matrix control(2, 2);
    control << (1.0 + epsilon) / 2.0, 0, 0, (1.0 - epsilon) / 2.0;
    const Matrix rho0 = tensor(control, Matrix(Matrix::Identity(d, d) / static_cast<double>(d)));
    Matrix cu = Matrix::Identity(2 * d, 2 * d);
    cu.block(d, d, d, d) = u;
    const Matrix h = tensor(hadamard(), Matrix(Matrix::Identity(d, d)));
    const Matrix step = cu * h;
    const Matrix rho = step * rho0 * step.adjoint();
    const int total = n + 1;
    const double sx = pauli_trace(rho, PauliString::single(total, 0, Pauli::X)).real();
    const double sy = pauli_trace(rho, PauliString::single(total, 0, Pauli::Y)).real();
    return cplx{sx, sy} / epsilon;
}

// ---------------------------------------------------------------------------
// CNOT truth tables
// ---------------------------------------------------------------------------

struct TruthTableRow {
    std::string input;
    std::string output;
    double probability = 0.0;
};

inline std::vector<TruthTableRow> cnot_truth_table(int direction, const RunOptions& opt = {}) {
    if (direction != 12 && direction != 21) throw ValidationError("cnot-table: direction must be 12 or 21");
    const int control = direction == 12 ? 0 : 1;
    const int target = 1 - control;
    std::vector<TruthTableRow> rows;
    for (std::size_t in = 0; in < 4; ++in) {
        const std::string label = basis_label(in, 2);
        Circuit c(2);
        for (int q = 0; q < 2; ++q) {
            if (label[static_cast<std::size_t>(q)] == '1') c.add(GateName::X, {q});
        }
        c.add(GateName::CNOT, {control, target});
        const DensityMatrix out = execute(c, opt);
        const DensityMatrix seen = opt.machine.n() == 2 ? tomography(out, opt.machine) : out;
        const auto probs = basis_probabilities(seen);
        TruthTableRow row{label, "", -1.0};
        for (const auto& [k, v] : probs) {
            if (v > row.probability) {
                row.probability = v;
                row.output = k;
            }
        }
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Shot sampling
// ---------------------------------------------------------------------------

inline std::map<std::string, int> sample_shots(const std::map<std::string, double>& probabilities, int shots, Rng& rng) {
    if (shots < 0) throw ValidationError("sample_shots: shots must be >= 0");
    std::vector<std::string> labels;
    std::vector<double> weights;
    for (const auto& [k, v] : probabilities) {
        labels.push_back(k);
        weights.push_back(std::max(0.0, v));
    }
    std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
    std::map<std::string, int> counts;
    for (const auto& k : labels) counts[k] = 0;
    for (int s = 0; s < shots; ++s) ++counts[labels[dist(rng)]];
    return counts;
}

inline nlohmann::json to_json(const AlgorithmReport& r) {
    nlohmann::json probs = nlohmann::json::object();
    for (const auto& [k, v] : r.probabilities) probs[k] = v;
    nlohmann::json j = {{"algorithm", r.algorithm},
                        {"path", to_string(r.path)},
                        {"probabilities", probs},
                        {"derived", r.derived},
                        {"circuit", to_json(r.circuit)}};
    j["fidelity"] = r.fidelity ? nlohmann::json(*r.fidelity) : nlohmann::json(nullptr);
    return j;
}

}  // namespace nmrsim
