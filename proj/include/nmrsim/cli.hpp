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

// Batch front end. Each command turns a RunRequest into an ArtifactSet that
// is written in one step; failures map to exit codes 2 (validation),
// 3 (numerical) and 4 (I/O) with a one-line message on stderr.

#pragma once

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nmrsim/algorithms.hpp"
#include "nmrsim/control.hpp"
#include "nmrsim/experiments.hpp"
#include "nmrsim/grape.hpp"
#include "nmrsim/measurement.hpp"
#include "nmrsim/report.hpp"
#include "nmrsim/spin_system.hpp"

namespace nmrsim {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitNumerical = 3, kExitIo = 4 };

struct RunRequest {
    std::string command;     // simulate, tomography, compile, grape, experiment, algorithm
    std::string subcommand;  // experiment / algorithm kind
    std::string machine = "gemini";
    std::string out = ".";
    std::uint64_t seed = 1;
    std::string path = "ideal";
    std::string relaxation = "off";

    // simulate / tomography / compile
    std::string circuit;
    std::string initial = "ground";
    double pulse_amp_hz = kHardPulseHz;

    // grape
    std::string gate = "Rx";
    std::vector<int> targets{0};
    std::vector<double> params{kPi / 2};
    GrapeConfig grape;
    std::string grape_init = "random";
    std::string grape_direction = "gradient";
    std::string grape_gradient = "exact";

    // experiments
    std::string channel;
    double amplitude_hz = 12500.0;
    int points = 41;
    double periods = 2.0;
    double ensemble_spread_hz = 0.0;
    int ensemble_points = 11;

    // algorithms
    std::string deutsch_case = "f3";
    int grover_target = 4;
    std::string secret = "10";
    std::string counting_case = "M1_first";
    int l_max = 10;
    std::string bell_state = "phi-";
    std::string bell_recipe = "CY";
    std::string qho_initial = "n0_plus_n3";
    std::vector<double> omega_t;
    int dqc1_qubits = 1;
    double epsilon = 1e-5;
    std::string matrix_file;
    int direction = 12;
};

namespace detail {

inline SpinSystemConfig resolve_machine(const std::string& m) {
    if (m == "gemini") return gemini();
    if (m == "triangulum") return triangulum();
    return load_machine_config(m);
}

inline Relaxation parse_relaxation(const std::string& s) {
    if (s == "on") return Relaxation::on;
    if (s == "off") return Relaxation::off;
    throw ValidationError("relaxation: expected 'on' or 'off', got '" + s + "'");
}

inline Circuit load_circuit(const std::string& path) {
    if (path.empty()) throw ValidationError("--circuit is required");
    const std::string text = read_text_file(path, "circuit");
    try {
        return circuit_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

inline RunOptions run_options(const RunRequest& r, const SpinSystemConfig& machine) {
    RunOptions o;
    o.path = execution_path_from_string(r.path);
    o.relaxation = parse_relaxation(r.relaxation);
    o.pulse_amp_hz = r.pulse_amp_hz;
    o.machine = machine;
    return o;
}

inline DensityMatrix initial_state(const RunRequest& r, const SpinSystemConfig& machine, int n) {
    if (r.initial == "ground") return DensityMatrix::from_ket(Ket::basis(n, 0));
    if (r.initial == "thermal") {
        if (machine.n() != n) throw ValidationError("initial: thermal state needs circuit size == machine size");
        return thermal_state(machine);
    }
    throw ValidationError("initial: expected 'ground' or 'thermal', got '" + r.initial + "'");
}

inline std::string channel_or_default(const RunRequest& r, const SpinSystemConfig& c) {
    if (!r.channel.empty()) return r.channel;
    return c.channels().front();
}

inline std::string file_safe(std::string s) {
    for (char& ch : s) {
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
    }
    return s;
}

inline std::vector<int> count_l_values(int l_max) {
    if (l_max < 1) throw ValidationError("--l-max must be >= 1");
    std::vector<int> l;
    for (int i = 1; i <= l_max; ++i) l.push_back(i);
    return l;
}

inline std::vector<double> qho_default_grid() {
    std::vector<double> v;
    for (int i = 1; i <= 10; ++i) v.push_back(0.1 * i * kTwoPi);
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline void cmd_simulate(const RunRequest& r, const SpinSystemConfig& machine, ArtifactSet& out) {
    const Circuit c = detail::load_circuit(r.circuit);
    const RunOptions opt = detail::run_options(r, machine);
    const DensityMatrix rho0 = detail::initial_state(r, machine, c.n);
    AlgorithmReport rep = make_report("simulate", c, opt, rho0);
    RunOptions ideal = opt;
    ideal.path = ExecutionPath::ideal;
    const DensityMatrix reference = execute(c, ideal, rho0);
    rep.fidelity = state_fidelity(reference, rep.final_state);
    rep.derived = {{"initial", r.initial}, {"machine", machine.name}, {"relaxation", r.relaxation}};
    out.add_json("simulate.json", to_json(rep));
    out.add_json("state.json", to_json(rep.final_state));
    if (machine.n() == c.n) {
        for (const auto& ch : machine.channels()) {
            const Acquisition acq = default_acquisition(machine, ch);
            const FIDSignal fid = synthesize_fid(rep.final_state, machine, ch, acq.duration, acq.dt);
            out.add("fid_" + detail::file_safe(ch) + ".csv", fid_csv(fid));
            out.add("spectrum_" + detail::file_safe(ch) + ".csv", spectrum_csv(spectrum(fid)));
        }
    }
}

inline void cmd_tomography(const RunRequest& r, const SpinSystemConfig& machine, ArtifactSet& out) {
    const Circuit c = r.circuit.empty() ? Circuit(machine.n()) : detail::load_circuit(r.circuit);
    if (c.n != machine.n()) throw ValidationError("tomography: circuit size does not match the machine");
    const RunOptions opt = detail::run_options(r, machine);
    const DensityMatrix rho = execute(c, opt, detail::initial_state(r, machine, c.n));
    const TomographyResult t = tomography_report(rho, machine);
    const double err = detail::max_abs(Matrix(t.state.matrix() - rho.matrix()));
    out.add_json("tomography.json", {{"state", to_json(rho)},
                                     {"reconstructed", to_json(t.state)},
                                     {"max_abs_error", err},
                                     {"coefficients", to_json(pauli_expand(t.state))},
                                     {"settings", t.settings.size()}});
}

inline void cmd_compile(const RunRequest& r, const SpinSystemConfig& machine, ArtifactSet& out) {
    const Circuit c = detail::load_circuit(r.circuit);
    const PulseProgram p = compile_circuit(c, machine, r.pulse_amp_hz);
    out.add_json("program.json", to_json(p));
}

inline void cmd_grape(const RunRequest& r, const SpinSystemConfig& machine, ArtifactSet& out) {
    GrapeConfig g = r.grape;
    if (r.grape_init == "random") {
        g.initial = GrapeInit::random;
    } else if (r.grape_init == "constant") {
        g.initial = GrapeInit::constant;
    } else {
        throw ValidationError("--init: expected 'random' or 'constant'");
    }
    if (r.grape_direction == "gradient") {
        g.direction = GrapeDirection::gradient;
    } else if (r.grape_direction == "lbfgs") {
        g.direction = GrapeDirection::lbfgs;
    } else {
        throw ValidationError("--direction: expected 'gradient' or 'lbfgs'");
    }
    if (r.grape_gradient == "exact") {
        g.gradient = GradientMode::exact;
    } else if (r.grape_gradient == "first_order") {
        g.gradient = GradientMode::first_order;
    } else {
        throw ValidationError("--gradient: expected 'exact' or 'first_order'");
    }
    Circuit c(machine.n());
    c.add(gate_name_from_string(r.gate), r.targets, r.params);
    const Matrix target = circuit_unitary(c, &machine);
    const GrapeResult res = grape_optimize(target, machine, g, r.seed);
    nlohmann::json meta = grape_metadata(res);
    meta["target"] = to_json(c);
    meta["direction"] = r.grape_direction;
    out.add("grape.csv", grape_csv(res));
    out.add_json("grape.json", meta);
}

inline void cmd_experiment(const RunRequest& r, const SpinSystemConfig& machine, ArtifactSet& out) {
    const std::string& kind = r.subcommand;
    if (kind == "pps") {
        const PseudoPureResult pps = prepare_pseudo_pure(machine, r.pulse_amp_hz, detail::parse_relaxation(r.relaxation));
        const double eps = machine.nuclei.front().polarization;
        out.add_json("pps.json", {{"program", to_json(pps.program)},
                                  {"state", to_json(pps.state)},
                                  {"deviation", to_json(deviation_coefficients(pps.state, eps))},
                                  {"checkpoints",
                                   {to_json(deviation_coefficients(pps.checkpoints.at(0), eps)),
                                    to_json(deviation_coefficients(pps.checkpoints.at(1), eps))}}});
        return;
    }
    const std::string ch = detail::channel_or_default(r, machine);
    if (kind == "rabi") {
        if (!(r.amplitude_hz > 0.0)) throw ValidationError("--amplitude-hz must be > 0");
        if (r.points < 8) throw ValidationError("--points must be >= 8");
        const auto durations = linspace(0.0, r.periods / r.amplitude_hz, static_cast<std::size_t>(r.points));
        const RabiResult res = rabi_calibration(machine, ch, r.amplitude_hz, durations, detail::parse_relaxation(r.relaxation));
        out.add("rabi.csv", scan_csv(res.scan));
        out.add_json("rabi.json", {{"channel", ch},
                                   {"amplitude_hz", r.amplitude_hz},
                                   {"t90_s", res.t90},
                                   {"t180_s", res.t180},
                                   {"expected_t180_s", 1.0 / (2.0 * r.amplitude_hz)},
                                   {"fit", to_json(res.scan.fit)}});
        return;
    }
    if (kind == "t1" || kind == "t2") {
        RelaxationOptions ro;
        ro.amplitude_hz = r.amplitude_hz;
        if (r.ensemble_spread_hz > 0.0) ro.ensemble_offsets_hz = offset_ensemble(r.ensemble_spread_hz, static_cast<std::size_t>(r.ensemble_points));
        const int k = machine.qubits_on_channel(ch).front();
        const auto& nuc = machine.nuclei[static_cast<std::size_t>(k)];
        const bool t1 = kind == "t1";
        const auto delays = t1 ? (nuc.t1_s > 5.0 ? t1_delays_phosphorus() : t1_delays_proton()) : t2_delays();
        const ScanResult s = relaxation_experiment(machine, ch, t1 ? RelaxationMode::T1 : RelaxationMode::T2, delays, ro);
        out.add(kind + ".csv", scan_csv(s));
        out.add_json(kind + ".json", {{"channel", ch},
                                      {"fitted_s", s.fit.parameter},
                                      {"configured_s", t1 ? nuc.t1_s : nuc.t2_s},
                                      {"ensemble_points", ro.ensemble_offsets_hz.size()},
                                      {"fit", to_json(s.fit)}});
        return;
    }
    throw ValidationError("experiment: unknown kind '" + kind + "'");
}

inline void cmd_algorithm(const RunRequest& r, const SpinSystemConfig& machine, ArtifactSet& out) {
    const RunOptions opt = detail::run_options(r, machine);
    const std::string& kind = r.subcommand;
    if (kind == "deutsch") {
        out.add_json("deutsch.json", to_json(run_deutsch(deutsch_case_from_string(r.deutsch_case), opt)));
    } else if (kind == "grover4") {
        out.add_json("grover4.json", to_json(run_grover4(r.grover_target, opt)));
    } else if (kind == "bv") {
        out.add_json("bv.json", to_json(run_bernstein_vazirani(r.secret, opt)));
    } else if (kind == "count") {
        const CountingResult res = run_counting(counting_case_from_string(r.counting_case), detail::count_l_values(r.l_max), opt);
        nlohmann::json j = to_json(res.report);
        j["derived"]["case"] = r.counting_case;
        out.add_json("count.json", j);
    } else if (kind == "bell") {
        out.add_json("bell.json", to_json(prepare_bell(bell_state_from_string(r.bell_state), bell_recipe_from_string(r.bell_recipe), opt)));
    } else if (kind == "qho") {
        const auto grid = r.omega_t.empty() ? detail::qho_default_grid() : r.omega_t;
        nlohmann::json reps = nlohmann::json::array();
        for (const auto& rep : simulate_qho(qho_initial_from_string(r.qho_initial), grid, opt)) reps.push_back(to_json(rep));
        out.add_json("qho.json", {{"algorithm", "qho"}, {"path", r.path}, {"reports", reps}});
    } else if (kind == "dqc1") {
        Matrix u;
        if (!r.matrix_file.empty()) {
            try {
                u = matrix_from_json(nlohmann::json::parse(read_text_file(r.matrix_file, "matrix")));
            } catch (const nlohmann::json::exception& e) {
                throw ValidationError(r.matrix_file + ": " + e.what());
            }
        } else {
            if (r.dqc1_qubits < 1 || r.dqc1_qubits > 2) throw ValidationError("--qubits must be 1 or 2");
            Rng rng(r.seed);
            u = random_unitary(Eigen::Index{1} << r.dqc1_qubits, rng);
        }
        const cplx est = dqc1_trace(u, r.epsilon);
        const cplx exact = u.trace() / static_cast<double>(u.rows());
        out.add_json("dqc1.json", {{"algorithm", "dqc1"},
                                   {"path", "ideal"},
                                   {"unitary", matrix_to_json(u)},
                                   {"epsilon", r.epsilon},
                                   {"estimate", {{"re", est.real()}, {"im", est.imag()}}},
                                   {"exact", {{"re", exact.real()}, {"im", exact.imag()}}},
                                   {"abs_error", std::abs(est - exact)}});
    } else if (kind == "cnot-table") {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : cnot_truth_table(r.direction, opt)) {
            rows.push_back({{"input", row.input}, {"output", row.output}, {"probability", row.probability}});
        }
        out.add_json("cnot-table.json", {{"algorithm", "cnot-table"}, {"direction", r.direction}, {"path", r.path}, {"rows", rows}});
    } else {
        throw ValidationError("algorithm: unknown kind '" + kind + "'");
    }
}

/// Runs one request and writes its artifacts. Throws on failure.
inline std::vector<std::filesystem::path> dispatch(const RunRequest& r) {
    const SpinSystemConfig machine = detail::resolve_machine(r.machine);
    machine.validate();
    ArtifactSet out(r.out);
    if (r.command == "simulate") {
        cmd_simulate(r, machine, out);
    } else if (r.command == "tomography") {
        cmd_tomography(r, machine, out);
    } else if (r.command == "compile") {
        cmd_compile(r, machine, out);
    } else if (r.command == "grape") {
        cmd_grape(r, machine, out);
    } else if (r.command == "experiment") {
        cmd_experiment(r, machine, out);
    } else if (r.command == "algorithm") {
        cmd_algorithm(r, machine, out);
    } else {
        throw ValidationError("unknown command '" + r.command + "'");
    }
    return out.commit();
}

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    RunRequest r;
    CLI::App app{"nmrsim: pulse-level NMR quantum computer emulator"};
    app.fallthrough();
    app.require_subcommand(1);
    app.add_option("--machine", r.machine, "machine config JSON, or 'gemini' / 'triangulum'");
    app.add_option("--seed", r.seed, "random seed");
    app.add_option("--path", r.path, "ideal | pulse")->check(CLI::IsMember({"ideal", "pulse"}));
    app.add_option("--relaxation", r.relaxation, "on | off")->check(CLI::IsMember({"on", "off"}));
    app.add_option("--out", r.out, "output directory");
    app.add_option("--pulse-amp-hz", r.pulse_amp_hz, "hard-pulse amplitude for compiled programs");

    auto* sim = app.add_subcommand("simulate", "run a circuit file");
    sim->add_option("--circuit", r.circuit, "circuit JSON")->required();
    sim->add_option("--initial", r.initial, "ground | thermal");

    auto* tomo = app.add_subcommand("tomography", "reconstruct the state after a circuit");
    tomo->add_option("--circuit", r.circuit, "circuit JSON (default: empty)");
    tomo->add_option("--initial", r.initial, "ground | thermal");

    auto* comp = app.add_subcommand("compile", "circuit to pulse program");
    comp->add_option("--circuit", r.circuit, "circuit JSON")->required();

    auto* gr = app.add_subcommand("grape", "optimize a pulse for one gate");
    gr->add_option("--gate", r.gate, "gate name");
    gr->add_option("--targets", r.targets, "gate qubits");
    gr->add_option("--params", r.params, "gate angles (rad)");
    gr->add_option("--segments", r.grape.segments);
    gr->add_option("--dt", r.grape.dt, "segment length (s)");
    gr->add_option("--max-iters", r.grape.max_iters);
    gr->add_option("--target-fidelity", r.grape.target_fidelity);
    gr->add_option("--init", r.grape_init, "random | constant");
    gr->add_option("--init-max-hz", r.grape.initial_max_hz);
    gr->add_option("--init-constant-hz", r.grape.initial_constant_hz);
    gr->add_option("--max-step-hz", r.grape.max_step_hz);
    gr->add_option("--shrink", r.grape.shrink);
    gr->add_option("--max-trials", r.grape.max_trials);
    gr->add_option("--direction", r.grape_direction, "gradient | lbfgs");
    gr->add_option("--gradient", r.grape_gradient, "exact | first_order");

    auto* ex = app.add_subcommand("experiment", "calibration and preparation experiments");
    ex->add_option("kind", r.subcommand, "rabi | t1 | t2 | pps")->required()->check(CLI::IsMember({"rabi", "t1", "t2", "pps"}));
    ex->add_option("--channel", r.channel, "nucleus label");
    ex->add_option("--amplitude-hz", r.amplitude_hz);
    ex->add_option("--points", r.points, "rabi scan points");
    ex->add_option("--periods", r.periods, "rabi scan length in nutation periods");
    ex->add_option("--ensemble-spread-hz", r.ensemble_spread_hz, "static offset spread (0 = homogeneous)");
    ex->add_option("--ensemble-points", r.ensemble_points);

    auto* al = app.add_subcommand("algorithm", "run a textbook algorithm");
    al->add_option("kind", r.subcommand, "deutsch | grover4 | bv | count | bell | qho | dqc1 | cnot-table")
        ->required()
        ->check(CLI::IsMember({"deutsch", "grover4", "bv", "count", "bell", "qho", "dqc1", "cnot-table"}));
    al->add_option("--case", r.deutsch_case, "deutsch: f1..f4; count: M0 | M1_first | M1_second | M2");
    al->add_option("--target", r.grover_target, "grover4 target 1..4");
    al->add_option("--secret", r.secret, "bv bit string");
    al->add_option("--l-max", r.l_max, "count: l = 1..l_max");
    al->add_option("--state", r.bell_state, "bell: psi+ | psi- | phi+ | phi-");
    al->add_option("--recipe", r.bell_recipe, "bell: CY | CNOT");
    al->add_option("--initial", r.qho_initial, "qho: n0 | n0_plus_n3 | uniform4");
    al->add_option("--omega-t", r.omega_t, "qho: Omega*t values (rad)");
    al->add_option("--qubits", r.dqc1_qubits, "dqc1: register size for a random unitary");
    al->add_option("--epsilon", r.epsilon, "dqc1: control polarization");
    al->add_option("--matrix", r.matrix_file, "dqc1: unitary JSON {re, im}");
    al->add_option("--direction", r.direction, "cnot-table: 12 | 21");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "nmrsim: error: validation: " << detail::one_line(e.what()) << "\n";
        return kExitValidation;
    }
    for (auto* sub : app.get_subcommands()) r.command = sub->get_name();
    if (r.command == "algorithm" && r.subcommand == "count" && !al->get_option("--case")->empty()) {
        r.counting_case = r.deutsch_case;
    }

    try {
        for (const auto& f : dispatch(r)) out << f.string() << "\n";
        return kExitOk;
    } catch (const ValidationError& e) {
        err << "nmrsim: error: validation: " << detail::one_line(e.what()) << "\n";
        return kExitValidation;
    } catch (const NumericalError& e) {
        err << "nmrsim: error: numerical: " << detail::one_line(e.what()) << "\n";
        return kExitNumerical;
    } catch (const IoError& e) {
        err << "nmrsim: error: io: " << detail::one_line(e.what()) << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "nmrsim: error: numerical: " << detail::one_line(e.what()) << "\n";
        return kExitNumerical;
    }
}

}  // namespace nmrsim
