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


// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances and time limits are pinned here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nmrsim/algorithms.hpp"
#include "nmrsim/experiments.hpp"
#include "nmrsim/grape.hpp"

using namespace nmrsim;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

/// Accumulates checks; the first failure message is kept.
class Checker {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok && out_.pass) out_.detail = what;
        out_.pass = out_.pass && ok;
    }
    void note(const std::string& s) { notes_ += (notes_.empty() ? "" : ", ") + s; }
    Outcome done() {
        if (out_.pass) out_.detail = notes_;
        return out_;
    }

private:
    Outcome out_;
    std::string notes_;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

RunOptions path_options(ExecutionPath p) {
    RunOptions o;
    o.path = p;
    o.relaxation = Relaxation::off;
    return o;
}

double max_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

// 1 -------------------------------------------------------------------------
Outcome cnot_truth_tables() {
    Checker c;
    const std::map<std::string, std::string> t12 = {{"00", "00"}, {"01", "01"}, {"10", "11"}, {"11", "10"}};
    const std::map<std::string, std::string> t21 = {{"00", "00"}, {"01", "11"}, {"10", "10"}, {"11", "01"}};
    double worst = 1.0;
    for (const auto& [dir, table] : {std::pair{12, t12}, std::pair{21, t21}}) {
        for (const auto& row : cnot_truth_table(dir, path_options(ExecutionPath::pulse))) {
            c.expect(row.output == table.at(row.input),
                     "CNOT" + std::to_string(dir) + " |" + row.input + "> gave |" + row.output + ">");
            worst = std::min(worst, row.probability);
        }
    }
    c.expect(worst >= 1.0 - 1e-6, "min output probability " + fmt("%.3e", worst));
    c.note("min P " + fmt("%.12f", worst));
    return c.done();
}

// 2 -------------------------------------------------------------------------
Outcome bell_phi_minus() {
    Checker c;
    Vector v = Vector::Zero(4);
    v(1) = 1.0 / std::sqrt(2.0);
    v(2) = -1.0 / std::sqrt(2.0);
    const Ket target(v);
    for (auto recipe : {BellRecipe::CY, BellRecipe::CNOT}) {
        const std::string name = recipe == BellRecipe::CY ? "CY" : "CNOT";
        const double fi = state_fidelity(target, prepare_bell(BellState::phi_minus, recipe).final_state);
        const double fp =
            state_fidelity(target, prepare_bell(BellState::phi_minus, recipe, path_options(ExecutionPath::pulse)).final_state);
        c.expect(fi >= 1.0 - 1e-9, name + " ideal fidelity " + fmt("%.3e", 1 - fi));
        c.expect(fp >= 1.0 - 1e-6, name + " pulse fidelity " + fmt("%.3e", 1 - fp));
        c.note(name + " 1-F ideal " + fmt("%.1e", 1 - fi) + " pulse " + fmt("%.1e", 1 - fp));
    }
    return c.done();
}

// 3 -------------------------------------------------------------------------
Outcome grover() {
    Checker c;
    double worst = 0.0;
    for (int t = 1; t <= 4; ++t) {
        const auto r = run_grover4(t);
        const double p = r.probability(basis_label(static_cast<std::size_t>(t - 1), 2));
        worst = std::max(worst, std::abs(p - 1.0));
    }
    c.expect(worst <= 1e-9, "|P-1| = " + fmt("%.3e", worst));
    c.note("max |P-1| " + fmt("%.1e", worst));
    return c.done();
}

// 4 -------------------------------------------------------------------------
Outcome deutsch() {
    Checker c;
    const std::vector<std::tuple<DeutschCase, std::string, std::string>> cases = {
        {DeutschCase::f1, "01", "constant"},
        {DeutschCase::f2, "01", "constant"},
        {DeutschCase::f3, "11", "balanced"},
        {DeutschCase::f4, "11", "balanced"}};
    std::string verdicts;
    for (const auto& [f, state, verdict] : cases) {
        const auto r = run_deutsch(f);
        c.expect(r.probability(state) >= 1.0 - 1e-9, "P(" + state + ") too low");
        const std::string got = r.derived["verdict"];
        c.expect(got == verdict, "verdict " + got + " expected " + verdict);
        verdicts += (verdicts.empty() ? "" : "/") + got;
    }
    c.note(verdicts);
    return c.done();
}

// 5 -------------------------------------------------------------------------
Outcome bernstein_vazirani() {
    Checker c;
    for (const std::string a : {"00", "01", "10", "11"}) {
        const auto r = run_bernstein_vazirani(a);
        c.expect(r.probability(a) >= 1.0 - 1e-9, "a=" + a + " P=" + fmt("%.12f", r.probability(a)));
        c.expect(r.circuit.two_qubit_gate_count() == 0, "a=" + a + " uses a two-qubit gate");
    }
    c.note("4 secrets, 0 two-qubit gates");
    return c.done();
}

// 6 -------------------------------------------------------------------------
Outcome counting() {
    Checker c;
    std::vector<int> ls(10);
    std::iota(ls.begin(), ls.end(), 1);
    const std::vector<std::pair<CountingCase, int>> cases = {
        {CountingCase::M0, 0}, {CountingCase::M1_first, 1}, {CountingCase::M1_second, 1}, {CountingCase::M2, 2}};
    const std::vector<double> thetas = {0.0, kPi / 2, kPi / 2, kPi};
    double worst = 0.0;
    std::string ms;
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const auto r = run_counting(cases[k].first, ls);
        for (std::size_t i = 0; i < ls.size(); ++i) worst = std::max(worst, std::abs(r.sigma_z[i] - std::cos(ls[i] * thetas[k])));
        c.expect(r.m_rounded == cases[k].second, "M estimate " + std::to_string(r.m_rounded));
        c.expect(std::abs(r.m_estimate - cases[k].second) <= 1e-9, "M estimate " + fmt("%.12g", r.m_estimate));
        ms += (ms.empty() ? "" : ",") + std::to_string(r.m_rounded);
    }
    c.expect(worst <= 1e-9, "max |<sz> - cos(l theta)| " + fmt("%.3e", worst));
    c.note("M = " + ms + ", max dev " + fmt("%.1e", worst));
    return c.done();
}

// 7 -------------------------------------------------------------------------
Outcome qho() {
    Checker c;
    std::vector<double> grid;
    for (int k = 1; k <= 10; ++k) grid.push_back(0.1 * k * kTwoPi);
    for (auto path : {ExecutionPath::ideal, ExecutionPath::pulse}) {
        const auto opt = path_options(path);
        double fw = 0.0;
        for (const auto& r : simulate_qho(QhoInitial::n0, grid, opt)) fw = std::max(fw, std::abs(*r.fidelity - 1.0));
        c.expect(fw <= 1e-6, to_string(path) + " |0> fidelity deviation " + fmt("%.3e", fw));
        double pw = 0.0;
        for (const auto& r : simulate_qho(QhoInitial::n0_plus_n3, grid, opt)) {
            const double got = r.derived["coherence_phase"];
            const double want = 3.0 * static_cast<double>(r.derived["omega_t"]);
            pw = std::max(pw, std::abs(std::remainder(got - want, kTwoPi)));
        }
        const double tol = path == ExecutionPath::ideal ? 1e-6 : 1e-3;
        c.expect(pw <= tol, to_string(path) + " phase error " + fmt("%.3e", pw));
        c.note(to_string(path) + " |F-1| " + fmt("%.1e", fw) + " phase err " + fmt("%.1e", pw));
    }
    return c.done();
}

// 8 -------------------------------------------------------------------------
Outcome pseudo_pure() {
    Checker c;
    const auto cfg = gemini();
    const double eps = cfg.nuclei[0].polarization;
    const auto r = prepare_pseudo_pure(cfg);
    auto check = [&](const DensityMatrix& rho, const std::map<std::string, double>& want, const std::string& stage) {
        const auto d = deviation_coefficients(rho, eps);
        double worst = 0.0;
        for (std::size_t i = 1; i < d.size(); ++i) {
            const std::string label = PauliString::from_index(i, 2).label();
            const auto it = want.find(label);
            worst = std::max(worst, std::abs(d.by_index(i) - (it == want.end() ? 0.0 : it->second)));
        }
        c.expect(worst <= 1e-9, stage + " deviation off by " + fmt("%.3e", worst));
        return worst;
    };
    const double a = check(r.checkpoints.at(0), {{"ZI", 1.0}, {"IZ", 0.5}}, "first crusher");
    const double b = check(r.checkpoints.at(1), {{"ZI", 0.5}, {"IZ", 0.5}, {"ZZ", 0.5}}, "second crusher");
    const double f = check(r.state, {{"ZI", 0.5}, {"IZ", 0.5}, {"ZZ", 0.5}}, "final");
    c.note("max dev " + fmt("%.1e", std::max({a, b, f})));
    return c.done();
}

// 9 -------------------------------------------------------------------------
Outcome grape() {
    Checker c;
    // (a) analytic gradient vs central difference, 20 random entries.
    {
        const auto cfg = gemini();
        Rng rng(2026);
        const Matrix target = random_unitary(4, rng);
        const double dt = 2e-6;
        const double amp = 1000.0;
        const double hnorm = kTwoPi * (amp * std::sqrt(2.0) + cfg.j(0, 1));
        c.expect(dt * hnorm <= 0.05, "dt * |2 pi H| = " + fmt("%.3f", dt * hnorm));
        const GrapeProblem p(target, cfg, dt);
        RealMatrix u(50, static_cast<Eigen::Index>(p.num_controls()));
        std::uniform_real_distribution<double> ud(-amp, amp);
        for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = ud(rng);
        const RealMatrix g = p.gradient(u, GradientMode::first_order);
        std::uniform_int_distribution<Eigen::Index> seg(0, u.rows() - 1), ctl(0, u.cols() - 1);
        double err = 0.0, ref = 0.0;
        for (int k = 0; k < 20; ++k) {
            const Eigen::Index j = seg(rng), q = ctl(rng);
            RealMatrix up = u, dn = u;
            up(j, q) += 1e-3;
            dn(j, q) -= 1e-3;
            const double fd = (p.fidelity(up) - p.fidelity(dn)) / 2e-3;
            err += (g(j, q) - fd) * (g(j, q) - fd);
            ref += fd * fd;
        }
        const double rel = std::sqrt(err / ref);
        c.expect(rel <= 1e-2, "(a) gradient relative error " + fmt("%.3e", rel));
        c.note("(a) rel err " + fmt("%.1e", rel));
    }
    // (b) three homonuclear spins, Rx(pi/2) on spin 0, N = 100, 2 ms.
    GrapeConfig g;
    g.segments = 100;
    g.dt = 2e-5;
    g.max_iters = 1000;
    g.target_fidelity = 0.995;
    g.direction = GrapeDirection::lbfgs;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = grape_optimize(embed(rx(kPi / 2), {0}, 3), triangulum(), g, 1);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(r.final_fidelity >= 0.995, "(b) F = " + fmt("%.6f", r.final_fidelity));
    c.expect(r.iterations <= 1000, "(b) iterations " + std::to_string(r.iterations));
    c.expect(secs < 300.0, "(b) runtime " + fmt("%.1f s", secs));
    c.note("(b) F " + fmt("%.5f", r.final_fidelity) + " in " + std::to_string(r.iterations) + " it, " +
           fmt("%.2f s", secs));
    // (c) monotone traces, for this run and a plain-gradient run.
    GrapeConfig plain = g;
    plain.direction = GrapeDirection::gradient;
    plain.max_iters = 200;
    const auto r2 = grape_optimize(embed(rx(kPi / 2), {0}, 3), triangulum(), plain, 1);
    bool mono = true;
    for (const auto* res : {&r, &r2}) {
        for (std::size_t i = 1; i < res->fidelity_trace.size(); ++i) mono = mono && res->fidelity_trace[i] >= res->fidelity_trace[i - 1];
    }
    c.expect(mono, "(c) fidelity trace decreased");
    c.note("(c) monotone");
    return c.done();
}

// 10 ------------------------------------------------------------------------
Outcome relaxation() {
    Checker c;
    auto cfg = gemini();
    auto rel = [](double got, double want) { return std::abs(got - want) / want; };
    const double h1 = relaxation_experiment(cfg, "1H", RelaxationMode::T1, t1_delays_proton()).fit.parameter;
    const double p1 = relaxation_experiment(cfg, "31P", RelaxationMode::T1, t1_delays_phosphorus()).fit.parameter;
    c.expect(rel(h1, 4.0) <= 0.02, "1H T1 " + fmt("%.4f", h1));
    c.expect(rel(p1, 8.0) <= 0.02, "31P T1 " + fmt("%.4f", p1));
    // Echo with T2 = 0.2 s on both spins, then a 200 Hz static-offset spread.
    for (auto& nuc : cfg.nuclei) nuc.t2_s = 0.2;
    std::string t2s;
    for (const std::string ch : {"1H", "31P"}) {
        const double t2 = relaxation_experiment(cfg, ch, RelaxationMode::T2, t2_delays()).fit.parameter;
        RelaxationOptions ens;
        ens.ensemble_offsets_hz = offset_ensemble(200.0, 11);
        const double e2 = relaxation_experiment(cfg, ch, RelaxationMode::T2, t2_delays(), ens).fit.parameter;
        c.expect(rel(t2, 0.2) <= 0.02, ch + " T2 " + fmt("%.4f", t2));
        c.expect(rel(e2, 0.2) <= 0.02, ch + " ensemble echo T2 " + fmt("%.4f", e2));
        t2s += ", " + ch + " T2 " + fmt("%.4f", t2) + " echo " + fmt("%.4f", e2);
    }
    c.note("T1 " + fmt("%.4f", h1) + "/" + fmt("%.4f", p1) + " s" + t2s);
    return c.done();
}

// 11 ------------------------------------------------------------------------
Outcome rabi() {
    Checker c;
    const auto cfg = gemini();
    double worst = 0.0;
    for (double u : {5e3, 12.5e3, 25e3}) {
        const auto r = rabi_calibration(cfg, "1H", u, linspace(0.0, 2.0 / u, 41));
        worst = std::max(worst, std::abs(r.t180 - 1.0 / (2 * u)) * 2 * u);
    }
    c.expect(worst <= 0.005, "t180 relative error " + fmt("%.3e", worst));
    c.note("max rel err " + fmt("%.1e", worst));
    return c.done();
}

// 12 ------------------------------------------------------------------------
Outcome tomography_and_spectra() {
    Checker c;
    const auto cfg = gemini();
    Rng rng(12);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const DensityMatrix rho = random_density(2, rng);
        worst = std::max(worst, max_diff(tomography(rho, cfg).matrix(), rho.matrix()));
    }
    c.expect(worst <= 1e-8, "tomography error " + fmt("%.3e", worst));
    // Peak patterns for c_X0 XI + c_XZ XZ on the proton channel: the line
    // with the partner in |0> carries c_X0 + c_XZ, the other c_X0 - c_XZ.
    struct Pattern {
        double cx0, cxz;
        std::size_t peaks;
    };
    double pattern_err = 0.0;
    for (const Pattern& p : {Pattern{1.0, 0.0, 2}, Pattern{1.0, 1.0, 1}, Pattern{0.5, 1.0, 2}}) {
        PauliCoefficients k(2);
        k[PauliString::parse("XI")] = p.cx0;
        k[PauliString::parse("XZ")] = p.cxz;
        const Matrix dev = pauli_operator(k);
        const auto lines = readout(dev, cfg).lines.at("1H");
        const double up = lines.at(0).amplitude.real(), down = lines.at(1).amplitude.real();
        const double scale = std::max(std::abs(p.cx0 + p.cxz), std::abs(p.cx0 - p.cxz));
        pattern_err = std::max({pattern_err, std::abs(up - (p.cx0 + p.cxz)) / scale, std::abs(down - (p.cx0 - p.cxz)) / scale});
        const auto acq = default_acquisition(cfg, "1H");
        const auto peaks = spectrum_peaks(synthesize_fid(dev, cfg, "1H", acq.duration, acq.dt));
        c.expect(peaks.size() == p.peaks, "pattern " + fmt("%.1f", p.cx0) + ": " + std::to_string(peaks.size()) + " peaks");
    }
    c.expect(pattern_err <= 0.01, "peak amplitude error " + fmt("%.3e", pattern_err));
    c.note("tomo err " + fmt("%.1e", worst) + ", peak err " + fmt("%.1e", pattern_err));
    return c.done();
}

// 13 ------------------------------------------------------------------------
Outcome dqc1() {
    Checker c;
    Rng rng(13);
    std::uniform_real_distribution<double> phase(-kPi, kPi);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        for (Eigen::Index d : {Eigen::Index{2}, Eigen::Index{4}}) {
            Matrix diag = Matrix::Zero(d, d);
            for (Eigen::Index k = 0; k < d; ++k) diag(k, k) = std::exp(kI * phase(rng));
            const Matrix full = random_unitary(d, rng);
            for (const Matrix* u : std::initializer_list<const Matrix*>{&diag, &full}) {
                cplx direct = 0.0;
                for (Eigen::Index k = 0; k < d; ++k) direct += (*u)(k, k);
                direct /= static_cast<double>(d);
                worst = std::max(worst, std::abs(dqc1_trace(*u, 1e-5) - direct));
            }
        }
    }
    c.expect(worst <= 1e-9, "trace error " + fmt("%.3e", worst));
    c.note("80 unitaries, max err " + fmt("%.1e", worst));
    return c.done();
}

// 14 ------------------------------------------------------------------------
Outcome core_properties() {
    Checker c;
    Rng rng(14);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> nq(1, 3);
    auto hermitian = [&](Eigen::Index d, double scale) {
        Matrix m(d, d);
        for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = cplx{g(rng), g(rng)};
        return Matrix(scale * 0.5 * (m + m.adjoint()));
    };
    double unit = 0.0, trace = 0.0, herm = 0.0, pauli = 0.0, ptr = 0.0;
    bool bounds = true;
    const auto cfg = gemini();
    for (int i = 0; i < 1000; ++i) {
        const int n = nq(rng);
        const Eigen::Index d = Eigen::Index{1} << n;
        // Unitarity of propagators.
        const Matrix u = segment_propagator(hermitian(d, 1e3), 1e-4 * (1 + i % 7));
        unit = std::max(unit, max_diff(u.adjoint() * u, Matrix::Identity(d, d)));
        // Trace and Hermiticity under a pulse program with relaxation.
        const DensityMatrix rho2 = random_density(2, rng, 1 + i % 4);
        PulseProgram p;
        p.events.emplace_back(RfSegment{{std::abs(g(rng)) * 1e4, std::abs(g(rng)) * 1e4}, {g(rng), g(rng)}, 2e-5});
        p.events.emplace_back(Delay{std::abs(g(rng)) * 1e-2});
        const Matrix out = evolve_program(rho2, p, cfg, Relaxation::on).matrix();
        trace = std::max(trace, std::abs(out.trace() - cplx(1.0)));
        herm = std::max(herm, max_diff(out, out.adjoint()));
        // Pauli roundtrip.
        const DensityMatrix rho = random_density(n, rng, 1 + i % static_cast<int>(d));
        pauli = std::max(pauli, max_diff(pauli_reconstruct(pauli_expand(rho)).matrix(), rho.matrix()));
        // Partial trace of a product state, and nesting.
        const DensityMatrix a = random_density(1, rng), b = random_density(2, rng);
        const DensityMatrix ab = tensor(a, b);
        ptr = std::max(ptr, max_diff(partial_trace(ab, {0}).matrix(), a.matrix()));
        ptr = std::max(ptr, max_diff(partial_trace(ab, {1, 2}).matrix(), b.matrix()));
        ptr = std::max(ptr, max_diff(partial_trace(partial_trace(ab, {1, 2}), {0}).matrix(), partial_trace(ab, {1}).matrix()));
        // Fidelity bounds.
        const DensityMatrix s = random_density(n, rng);
        const double f = state_fidelity(rho, s);
        const double self = state_fidelity(rho, rho);
        bounds = bounds && f >= 0.0 && f <= 1.0 && std::abs(self - 1.0) <= 1e-9 &&
                 std::abs(f - state_fidelity(s, rho)) <= 1e-9;
    }
    c.expect(unit <= 1e-12, "unitarity " + fmt("%.3e", unit));
    c.expect(trace <= 1e-12, "trace " + fmt("%.3e", trace));
    c.expect(herm <= 1e-12, "hermiticity " + fmt("%.3e", herm));
    c.expect(pauli <= 1e-12, "pauli roundtrip " + fmt("%.3e", pauli));
    c.expect(ptr <= 1e-12, "partial trace " + fmt("%.3e", ptr));
    c.expect(bounds, "fidelity bounds");
    c.note("1000 cases, worst " + fmt("%.1e", std::max({unit, trace, herm, pauli, ptr})));
    return c.done();
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0 = no limit
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> all = {
        {1, "CNOT truth tables (pulse)", 5.0, cnot_truth_tables},
        {2, "Bell phi- recipes", 5.0, bell_phi_minus},
        {3, "Grover N=4", 1.0, grover},
        {4, "Deutsch", 0.0, deutsch},
        {5, "Bernstein-Vazirani", 0.0, bernstein_vazirani},
        {6, "Approximate counting", 0.0, counting},
        {7, "Harmonic oscillator", 0.0, qho},
        {8, "Pseudo-pure state", 0.0, pseudo_pure},
        {9, "GRAPE", 300.0, grape},
        {10, "Relaxation fits", 0.0, relaxation},
        {11, "Rabi calibration", 0.0, rabi},
        {12, "Tomography and spectra", 0.0, tomography_and_spectra},
        {13, "DQC1 trace", 0.0, dqc1},
        {14, "Core properties", 30.0, core_properties},
    };
    int failed = 0;
    for (const auto& k : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = k.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (k.limit_s > 0.0 && secs >= k.limit_s) {
            o.pass = false;
            o.detail = "runtime " + fmt("%.2f s", secs) + " over limit " + fmt("%.0f s", k.limit_s);
        }
        if (!o.pass) ++failed;
        std::printf("%s %2d %-28s %.3f s  %s\n", o.pass ? "PASS" : "FAIL", k.id, k.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
