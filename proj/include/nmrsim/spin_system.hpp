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

// Machine model. Frequencies are configured in Hz; Hamiltonians come out in
// rad/s with hbar = 1 and I_a = sigma_a / 2.

#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nmrsim/core.hpp"
#include "nmrsim/errors.hpp"

namespace nmrsim {

struct NucleusSpec {
    std::string label;
    double offset_hz = 0.0;
    double t1_s = 1.0;
    double t2_s = 1.0;
    /// Thermal polarization; positive means excess population in |0>.
    double polarization = 0.0;
};

enum class CouplingModel { weak, isotropic };

inline std::string to_string(CouplingModel m) { return m == CouplingModel::weak ? "weak" : "isotropic"; }

struct SpinSystemConfig {
    std::string name;
    CouplingModel coupling_model = CouplingModel::weak;
    std::vector<NucleusSpec> nuclei;
    RealMatrix j_hz;

    int n() const { return static_cast<int>(nuclei.size()); }
    Eigen::Index dim() const { return Eigen::Index{1} << n(); }

    /// Distinct nucleus labels in order of first appearance; one RF channel each.
    std::vector<std::string> channels() const {
        std::vector<std::string> out;
        for (const auto& nuc : nuclei) {
            if (std::find(out.begin(), out.end(), nuc.label) == out.end()) out.push_back(nuc.label);
        }
        return out;
    }

    int channel_index(const std::string& label) const {
        const auto ch = channels();
        const auto it = std::find(ch.begin(), ch.end(), label);
        if (it == ch.end()) throw ValidationError("unknown channel '" + label + "'");
        return static_cast<int>(it - ch.begin());
    }

    int channel_of(int qubit) const { return channel_index(nuclei.at(static_cast<std::size_t>(qubit)).label); }

    std::vector<int> qubits_on_channel(const std::string& label) const {
        std::vector<int> q;
        for (int k = 0; k < n(); ++k) {
            if (nuclei[static_cast<std::size_t>(k)].label == label) q.push_back(k);
        }
        if (q.empty()) throw ValidationError("unknown channel '" + label + "'");
        return q;
    }

    double j(int a, int b) const { return j_hz(a, b); }

    /// Throws ValidationError naming the offending field.
    void validate() const {
        const int count = n();
        if (count < 1 || count > kMaxQubits) {
            throw ValidationError("nuclei: expected 1.." + std::to_string(kMaxQubits) + " entries, got " +
                                  std::to_string(count));
        }
        for (int k = 0; k < count; ++k) {
            const auto& nuc = nuclei[static_cast<std::size_t>(k)];
            const std::string where = "nuclei[" + std::to_string(k) + "].";
            if (nuc.label.empty()) throw ValidationError(where + "label: must be nonempty");
            if (!std::isfinite(nuc.offset_hz)) throw ValidationError(where + "offset_hz: must be finite");
            if (!(nuc.t1_s > 0.0) || !std::isfinite(nuc.t1_s)) throw ValidationError(where + "t1_s: must be positive");
            if (!(nuc.t2_s > 0.0) || !std::isfinite(nuc.t2_s)) throw ValidationError(where + "t2_s: must be positive");
            if (!(std::abs(nuc.polarization) <= 1.0)) throw ValidationError(where + "polarization: |value| must be <= 1");
        }
        if (j_hz.rows() != count || j_hz.cols() != count) {
            throw ValidationError("j_hz: expected " + std::to_string(count) + "x" + std::to_string(count) + " matrix");
        }
        for (int a = 0; a < count; ++a) {
            if (j_hz(a, a) != 0.0) throw ValidationError("j_hz: diagonal entry [" + std::to_string(a) + "] must be 0");
            for (int b = a + 1; b < count; ++b) {
                if (!std::isfinite(j_hz(a, b)) || !std::isfinite(j_hz(b, a))) {
                    throw ValidationError("j_hz: non-finite entry");
                }
                if (std::abs(j_hz(a, b) - j_hz(b, a)) > 1e-12) {
                    throw ValidationError("j_hz: matrix is not symmetric at [" + std::to_string(a) + "][" +
                                          std::to_string(b) + "]");
                }
            }
        }
    }
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline SpinSystemConfig config_from_json(const nlohmann::json& j) {
    SpinSystemConfig c;
    auto field = [](const nlohmann::json& obj, const std::string& key, const std::string& where) -> const nlohmann::json& {
        if (!obj.is_object() || !obj.contains(key)) throw ValidationError(where + key + ": missing");
        return obj.at(key);
    };
    auto number = [&](const nlohmann::json& obj, const std::string& key, const std::string& where) {
        const auto& v = field(obj, key, where);
        if (!v.is_number()) throw ValidationError(where + key + ": expected a number");
        return v.get<double>();
    };

    if (j.contains("name")) {
        if (!j.at("name").is_string()) throw ValidationError("name: expected a string");
        c.name = j.at("name").get<std::string>();
    }
    const auto& model = field(j, "coupling_model", "");
    if (model == "weak") {
        c.coupling_model = CouplingModel::weak;
    } else if (model == "isotropic") {
        c.coupling_model = CouplingModel::isotropic;
    } else {
        throw ValidationError("coupling_model: expected \"weak\" or \"isotropic\"");
    }
    const auto& nuclei = field(j, "nuclei", "");
    if (!nuclei.is_array()) throw ValidationError("nuclei: expected an array");
    for (std::size_t k = 0; k < nuclei.size(); ++k) {
        const std::string where = "nuclei[" + std::to_string(k) + "].";
        const auto& e = nuclei[k];
        NucleusSpec s;
        const auto& label = field(e, "label", where);
        if (!label.is_string()) throw ValidationError(where + "label: expected a string");
        s.label = label.get<std::string>();
        s.offset_hz = number(e, "offset_hz", where);
        s.t1_s = number(e, "t1_s", where);
        s.t2_s = number(e, "t2_s", where);
        s.polarization = number(e, "polarization", where);
        c.nuclei.push_back(std::move(s));
    }
    const auto& jm = field(j, "j_hz", "");
    if (!jm.is_array() || jm.size() != nuclei.size()) throw ValidationError("j_hz: expected one row per nucleus");
    const auto n = static_cast<Eigen::Index>(nuclei.size());
    c.j_hz = RealMatrix::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        const auto& row = jm[static_cast<std::size_t>(a)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
            throw ValidationError("j_hz: row " + std::to_string(a) + " has wrong length");
        }
        for (Eigen::Index b = 0; b < n; ++b) {
            const auto& v = row[static_cast<std::size_t>(b)];
            if (!v.is_number()) throw ValidationError("j_hz: entry [" + std::to_string(a) + "][" + std::to_string(b) + "] is not a number");
            c.j_hz(a, b) = v.get<double>();
        }
    }
    c.validate();
    return c;
}

inline nlohmann::json to_json(const SpinSystemConfig& c) {
    nlohmann::json nuclei = nlohmann::json::array();
    for (const auto& s : c.nuclei) {
        nuclei.push_back({{"label", s.label},
                          {"offset_hz", s.offset_hz},
                          {"t1_s", s.t1_s},
                          {"t2_s", s.t2_s},
                          {"polarization", s.polarization}});
    }
    nlohmann::json jm = nlohmann::json::array();
    for (Eigen::Index a = 0; a < c.j_hz.rows(); ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index b = 0; b < c.j_hz.cols(); ++b) row.push_back(c.j_hz(a, b));
        jm.push_back(std::move(row));
    }
    return {{"name", c.name}, {"coupling_model", to_string(c.coupling_model)}, {"nuclei", nuclei}, {"j_hz", jm}};
}

inline SpinSystemConfig parse_machine_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("machine config: ") + e.what());
    }
    return config_from_json(j);
}

inline SpinSystemConfig load_machine_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("machine config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_machine_config(ss.str());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

/// Built-in heteronuclear pair: qubit 0 = 1H, qubit 1 = 31P, J = 697.4 Hz,
/// on-resonance. Relaxation times are representative values.
inline SpinSystemConfig gemini() {
    SpinSystemConfig c;
    c.name = "gemini";
    c.coupling_model = CouplingModel::weak;
    c.nuclei = {{"1H", 0.0, 4.0, 0.5, 1e-5}, {"31P", 0.0, 8.0, 0.6, 1e-5}};
    c.j_hz = RealMatrix::Zero(2, 2);
    c.j_hz(0, 1) = c.j_hz(1, 0) = 697.4;
    return c;
}

/// Three homonuclear 19F spins with isotropic coupling. Shift and J values
/// are placeholders of realistic magnitude.
inline SpinSystemConfig triangulum() {
    SpinSystemConfig c;
    c.name = "triangulum";
    c.coupling_model = CouplingModel::isotropic;
    c.nuclei = {{"19F", -1500.0, 5.0, 1.0, 1e-5}, {"19F", 0.0, 5.0, 1.0, 1e-5}, {"19F", 2000.0, 5.0, 1.0, 1e-5}};
    c.j_hz = RealMatrix::Zero(3, 3);
    c.j_hz(0, 1) = c.j_hz(1, 0) = 69.8;
    c.j_hz(0, 2) = c.j_hz(2, 0) = 47.5;
    c.j_hz(1, 2) = c.j_hz(2, 1) = -128.3;
    return c;
}

// ---------------------------------------------------------------------------
// Operators and Hamiltonians
// ---------------------------------------------------------------------------

/// I_a on qubit k of an n-qubit register.
inline Matrix spin_operator(int n, int k, Pauli a) { return 0.5 * PauliString::single(n, k, a).matrix(); }

inline Matrix internal_hamiltonian(const SpinSystemConfig& c) {
    c.validate();
    const int n = c.n();
    const Eigen::Index d = c.dim();
    Matrix h = Matrix::Zero(d, d);
    for (int k = 0; k < n; ++k) {
        h += kTwoPi * c.nuclei[static_cast<std::size_t>(k)].offset_hz * spin_operator(n, k, Pauli::Z);
    }
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const double jab = c.j_hz(a, b);
            if (jab == 0.0) continue;
            h += kTwoPi * jab * spin_operator(n, a, Pauli::Z) * spin_operator(n, b, Pauli::Z);
            if (c.coupling_model == CouplingModel::isotropic) {
                h += kTwoPi * jab * spin_operator(n, a, Pauli::X) * spin_operator(n, b, Pauli::X);
                h += kTwoPi * jab * spin_operator(n, a, Pauli::Y) * spin_operator(n, b, Pauli::Y);
            }
        }
    }
    return h;
}

/// Control operators per channel: (sum I_x, sum I_y) over the channel's spins.
inline std::vector<std::pair<Matrix, Matrix>> channel_operators(const SpinSystemConfig& c) {
    const int n = c.n();
    std::vector<std::pair<Matrix, Matrix>> ops;
    for (const auto& label : c.channels()) {
        Matrix ix = Matrix::Zero(c.dim(), c.dim());
        Matrix iy = Matrix::Zero(c.dim(), c.dim());
        for (int k : c.qubits_on_channel(label)) {
            ix += spin_operator(n, k, Pauli::X);
            iy += spin_operator(n, k, Pauli::Y);
        }
        ops.emplace_back(std::move(ix), std::move(iy));
    }
    return ops;
}

inline Matrix rf_hamiltonian(const SpinSystemConfig& c, const std::vector<double>& amplitudes_hz,
                             const std::vector<double>& phases_rad) {
    const auto ops = channel_operators(c);
    if (amplitudes_hz.size() != ops.size() || phases_rad.size() != ops.size()) {
        throw ValidationError("rf_hamiltonian: expected " + std::to_string(ops.size()) +
                              " (amplitude, phase) pairs, got " + std::to_string(amplitudes_hz.size()) + "/" +
                              std::to_string(phases_rad.size()));
    }
    Matrix h = Matrix::Zero(c.dim(), c.dim());
    for (std::size_t ch = 0; ch < ops.size(); ++ch) {
        const double u = amplitudes_hz[ch];
        if (u == 0.0) continue;
        const double phi = phases_rad[ch];
        h += kTwoPi * u * (std::cos(phi) * ops[ch].first + std::sin(phi) * ops[ch].second);
    }
    return h;
}

/// rho = (I + sum_k eps_k sigma_z^k) / 2^n, so <sigma_z^k> = eps_k.
inline DensityMatrix thermal_state(const SpinSystemConfig& c) {
    c.validate();
    const int n = c.n();
    const Eigen::Index d = c.dim();
    Matrix m = Matrix::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        double v = 1.0;
        for (int k = 0; k < n; ++k) {
            const bool one = (static_cast<std::size_t>(j) >> (n - 1 - k)) & 1U;
            v += (one ? -1.0 : 1.0) * c.nuclei[static_cast<std::size_t>(k)].polarization;
        }
        if (v < 0.0) throw ValidationError("polarization: thermal state would have a negative population");
        m(j, j) = v / static_cast<double>(d);
    }
    return DensityMatrix(std::move(m), DensityMatrix::Unchecked{});
}

}  // namespace nmrsim
