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

// Gradient ascent pulse engineering over piecewise-constant x/y controls,
// one (u_x, u_y) pair per RF channel per segment.

#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nmrsim/control.hpp"
#include "nmrsim/dynamics.hpp"
#include "nmrsim/spin_system.hpp"

namespace nmrsim {

enum class GrapeInit { random, constant };

/// First-order: dU_j = -i dt dH U_j. Exact: the Frechet derivative of the
/// segment exponential.
enum class GradientMode { first_order, exact };

/// Search direction: the plain gradient, or the gradient preconditioned by a
/// limited-memory BFGS estimate of the inverse Hessian.
enum class GrapeDirection { gradient, lbfgs };

struct GrapeConfig {
    int segments = 100;
    double dt = 1e-5;
    int max_iters = 1000;
    double target_fidelity = 0.995;
    GrapeInit initial = GrapeInit::random;
    double initial_max_hz = 1000.0;  // random init range
    double initial_constant_hz = 0.0;
    double max_step_hz = 1e4;
    double shrink = 0.5;
    int max_trials = 30;
    double min_improvement = 1e-12;
    /// Sufficient-increase constant: accept when F gains at least
    /// armijo * step * |grad|. Zero accepts any increase.
    double armijo = 1e-4;
    GradientMode gradient = GradientMode::exact;
    GrapeDirection direction = GrapeDirection::gradient;
    int lbfgs_memory = 10;

    double total_duration() const { return segments * dt; }

    void validate() const {
        if (segments <= 0) throw ValidationError("grape: segments must be > 0");
        if (!(dt > 0.0)) throw ValidationError("grape: dt must be > 0");
        if (max_iters < 0) throw ValidationError("grape: max_iters must be >= 0");
        if (!(target_fidelity > 0.0 && target_fidelity <= 1.0)) throw ValidationError("grape: target_fidelity must be in (0,1]");
        if (!(shrink > 0.0 && shrink < 1.0)) throw ValidationError("grape: shrink must be in (0,1)");
        if (!(max_step_hz > 0.0)) throw ValidationError("grape: max_step_hz must be > 0");
        if (max_trials < 1) throw ValidationError("grape: max_trials must be >= 1");
        if (!(armijo >= 0.0 && armijo < 1.0)) throw ValidationError("grape: armijo must be in [0,1)");
        if (lbfgs_memory < 1) throw ValidationError("grape: lbfgs_memory must be >= 1");
    }
};

struct GrapeResult {
    /// Row j: (u_x, u_y) for channel 0, then channel 1, ... in Hz.
    RealMatrix amplitudes;
    std::vector<double> fidelity_trace;
    Matrix final_unitary;
    double final_fidelity = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string stop_reason;
    std::uint64_t seed = 0;
    double dt = 0.0;
};

class GrapeProblem {
public:
    GrapeProblem(Matrix target, const SpinSystemConfig& config, double dt)
        : target_(std::move(target)), config_(config), dt_(dt), h0_(internal_hamiltonian(config)) {
        if (target_.rows() != config.dim() || target_.cols() != config.dim()) {
            throw ValidationError("grape: target dimension does not match the machine");
        }
        if (!is_unitary(target_, 1e-9)) throw ValidationError("grape: target is not unitary");
        for (const auto& [ix, iy] : channel_operators(config)) {
            controls_.push_back(kTwoPi * ix);
            controls_.push_back(kTwoPi * iy);
        }
    }

    std::size_t num_controls() const { return controls_.size(); }
    const Matrix& target() const { return target_; }

    Matrix segment_hamiltonian(const RealMatrix& u, Eigen::Index j) const {
        Matrix h = h0_;
        for (std::size_t k = 0; k < controls_.size(); ++k) {
            const double a = u(j, static_cast<Eigen::Index>(k));
            if (a != 0.0) h += a * controls_[k];
        }
        return h;
    }

    Matrix total_unitary(const RealMatrix& u) const {
        check(u);
        Matrix total = Matrix::Identity(h0_.rows(), h0_.cols());
        for (Eigen::Index j = 0; j < u.rows(); ++j) total = segment_propagator(segment_hamiltonian(u, j), dt_) * total;
        return total;
    }

    double fidelity(const RealMatrix& u) const { return gate_fidelity(total_unitary(u), target_); }

    /// dF/du for every (segment, control), in 1/Hz.
    RealMatrix gradient(const RealMatrix& u, GradientMode mode) const {
        check(u);
        const Eigen::Index n_seg = u.rows();
        const auto d = static_cast<double>(h0_.rows());
        std::vector<Matrix> props(static_cast<std::size_t>(n_seg));
        std::vector<Eigen::SelfAdjointEigenSolver<Matrix>> eig(static_cast<std::size_t>(n_seg));
        for (Eigen::Index j = 0; j < n_seg; ++j) {
            auto& es = eig[static_cast<std::size_t>(j)];
            es.compute(segment_hamiltonian(u, j));
            Vector ph(h0_.rows());
            for (Eigen::Index i = 0; i < h0_.rows(); ++i) ph(i) = std::exp(cplx{0.0, -es.eigenvalues()(i) * dt_});
            props[static_cast<std::size_t>(j)] = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
        }
        // fwd[j] = U_j ... U_1 (inclusive), back[j] = target^dag U_N ... U_{j+1}.
        std::vector<Matrix> fwd(static_cast<std::size_t>(n_seg));
        Matrix acc = Matrix::Identity(h0_.rows(), h0_.cols());
        for (Eigen::Index j = 0; j < n_seg; ++j) {
            acc = props[static_cast<std::size_t>(j)] * acc;
            fwd[static_cast<std::size_t>(j)] = acc;
        }
        const cplx g = (target_.adjoint() * acc).trace();
        RealMatrix grad(n_seg, static_cast<Eigen::Index>(controls_.size()));
        Matrix back = target_.adjoint();
        for (Eigen::Index j = n_seg - 1; j >= 0; --j) {
            const auto& f = fwd[static_cast<std::size_t>(j)];
            const auto& es = eig[static_cast<std::size_t>(j)];
            for (std::size_t k = 0; k < controls_.size(); ++k) {
                Matrix du;
                if (mode == GradientMode::first_order) {
                    du = (-kI * dt_) * controls_[k] * f;
                } else {
                    du = frechet(es, controls_[k]) * (j > 0 ? fwd[static_cast<std::size_t>(j - 1)]
                                                            : Matrix::Identity(h0_.rows(), h0_.cols()));
                }
                const cplx t = (back * du).trace();
                grad(j, static_cast<Eigen::Index>(k)) = 2.0 / (d * d) * (std::conj(g) * t).real();
            }
            back = back * props[static_cast<std::size_t>(j)];
        }
        return grad;
    }

private:
    void check(const RealMatrix& u) const {
        if (u.cols() != static_cast<Eigen::Index>(controls_.size())) {
            throw ValidationError("grape: amplitude array needs " + std::to_string(controls_.size()) + " columns");
        }
    }

    /// d/da exp(-i (H + a C) dt) at a = 0, via the eigenbasis of H.
    Matrix frechet(const Eigen::SelfAdjointEigenSolver<Matrix>& es, const Matrix& c) const {
        const Matrix& v = es.eigenvectors();
        const Eigen::VectorXd& lam = es.eigenvalues();
        Matrix cb = v.adjoint() * c * v;
        const Eigen::Index d = lam.size();
        for (Eigen::Index a = 0; a < d; ++a) {
            const cplx ea = std::exp(cplx{0.0, -lam(a) * dt_});
            for (Eigen::Index b = 0; b < d; ++b) {
                const double diff = lam(a) - lam(b);
                cplx f;
                if (std::abs(diff * dt_) < 1e-8) {
                    f = -kI * dt_ * ea;
                } else {
                    f = (ea - std::exp(cplx{0.0, -lam(b) * dt_})) / diff;
                }
                cb(a, b) *= f;
            }
        }
        return v * cb * v.adjoint();
    }

    Matrix target_;
    SpinSystemConfig config_;
    double dt_;
    Matrix h0_;
    std::vector<Matrix> controls_;
};

inline RealMatrix grape_initial_amplitudes(const GrapeConfig& g, std::size_t controls, std::uint64_t seed) {
    RealMatrix u(g.segments, static_cast<Eigen::Index>(controls));
    if (g.initial == GrapeInit::constant) {
        u.setConstant(g.initial_constant_hz);
        return u;
    }
    Rng rng(seed);
    std::uniform_real_distribution<double> dist(-g.initial_max_hz, g.initial_max_hz);
    for (Eigen::Index j = 0; j < u.rows(); ++j) {
        for (Eigen::Index k = 0; k < u.cols(); ++k) u(j, k) = dist(rng);
    }
    return u;
}

namespace detail {

/// Two-loop recursion: approximate inverse Hessian (of -F) applied to grad.
inline RealMatrix lbfgs_direction(const RealMatrix& grad, const std::vector<RealMatrix>& s,
                                  const std::vector<RealMatrix>& y) {
    RealMatrix q = grad;
    const std::size_t m = s.size();
    std::vector<double> alpha(m), rho(m);
    for (std::size_t i = m; i-- > 0;) {
        rho[i] = 1.0 / (y[i].cwiseProduct(s[i]).sum());
        alpha[i] = rho[i] * s[i].cwiseProduct(q).sum();
        q -= alpha[i] * y[i];
    }
    q *= s[m - 1].cwiseProduct(y[m - 1]).sum() / y[m - 1].squaredNorm();
    for (std::size_t i = 0; i < m; ++i) {
        const double beta = rho[i] * y[i].cwiseProduct(q).sum();
        q += (alpha[i] - beta) * s[i];
    }
    return q;
}

}  // namespace detail

/// Ascent with backtracking; the fidelity trace never decreases. The first
/// trial moves max_step_hz along the normalized gradient, or takes the full
/// quasi-Newton step (capped at max_step_hz) in lbfgs mode.
inline GrapeResult grape_optimize(const Matrix& target, const SpinSystemConfig& config, const GrapeConfig& gcfg,
                                  std::uint64_t seed, const RealMatrix* start = nullptr) {
    gcfg.validate();
    const GrapeProblem problem(target, config, gcfg.dt);
    RealMatrix u = start != nullptr ? *start : grape_initial_amplitudes(gcfg, problem.num_controls(), seed);
    if (u.rows() != gcfg.segments) throw ValidationError("grape: start amplitudes have the wrong segment count");

    GrapeResult r;
    r.seed = seed;
    r.dt = gcfg.dt;
    double f = problem.fidelity(u);
    r.fidelity_trace.push_back(f);
    r.stop_reason = "max_iters";
    std::vector<RealMatrix> hist_s, hist_y;
    RealMatrix grad = problem.gradient(u, gcfg.gradient);
    for (int it = 0; it < gcfg.max_iters; ++it) {
        if (f >= gcfg.target_fidelity) break;
        const double norm = grad.norm();
        if (norm == 0.0) {
            r.stop_reason = "zero_gradient";
            break;
        }
        RealMatrix dir = grad / norm;
        double step = gcfg.max_step_hz;
        if (gcfg.direction == GrapeDirection::lbfgs && !hist_s.empty()) {
            const RealMatrix d = detail::lbfgs_direction(grad, hist_s, hist_y);
            const double dn = d.norm();
            if (d.cwiseProduct(grad).sum() > 0.0 && std::isfinite(dn) && dn > 0.0) {
                dir = d / dn;
                step = std::min(dn, gcfg.max_step_hz);
            } else {
                hist_s.clear();
                hist_y.clear();
            }
        }
        const double slope = dir.cwiseProduct(grad).sum();
        bool accepted = false;
        double f_new = f;
        RealMatrix trial;
        for (int t = 0; t < gcfg.max_trials; ++t) {
            trial = u + step * dir;
            f_new = problem.fidelity(trial);
            if (f_new > f && f_new - f >= gcfg.armijo * step * slope) {
                accepted = true;
                break;
            }
            step *= gcfg.shrink;
        }
        if (!accepted) {
            r.stop_reason = "no_ascent_step";
            break;
        }
        const double gain = f_new - f;
        RealMatrix grad_new = problem.gradient(trial, gcfg.gradient);
        if (gcfg.direction == GrapeDirection::lbfgs) {
            // Curvature pair for minimizing -F.
            RealMatrix sk = trial - u;
            RealMatrix yk = grad - grad_new;
            if (sk.cwiseProduct(yk).sum() > 1e-12 * sk.norm() * yk.norm()) {
                hist_s.push_back(std::move(sk));
                hist_y.push_back(std::move(yk));
                if (static_cast<int>(hist_s.size()) > gcfg.lbfgs_memory) {
                    hist_s.erase(hist_s.begin());
                    hist_y.erase(hist_y.begin());
                }
            }
        }
        u = std::move(trial);
        grad = std::move(grad_new);
        f = f_new;
        r.fidelity_trace.push_back(f);
        r.iterations = it + 1;
        if (gain < gcfg.min_improvement) {
            r.stop_reason = "stalled";
            break;
        }
    }
    if (f >= gcfg.target_fidelity) {
        r.converged = true;
        r.stop_reason = "target_fidelity";
    }
    r.amplitudes = u;
    r.final_unitary = problem.total_unitary(u);
    r.final_fidelity = gate_fidelity(r.final_unitary, target);
    return r;
}

/// The optimized controls as an executable program (phase/amplitude form).
inline PulseProgram grape_program(const GrapeResult& r) {
    PulseProgram p;
    const Eigen::Index nch = r.amplitudes.cols() / 2;
    for (Eigen::Index j = 0; j < r.amplitudes.rows(); ++j) {
        RfSegment s;
        for (Eigen::Index ch = 0; ch < nch; ++ch) {
            const double ux = r.amplitudes(j, 2 * ch);
            const double uy = r.amplitudes(j, 2 * ch + 1);
            s.amplitudes_hz.push_back(std::hypot(ux, uy));
            s.phases_rad.push_back(std::atan2(uy, ux));
        }
        s.duration_s = r.dt;
        p.events.emplace_back(std::move(s));
    }
    return p;
}

}  // namespace nmrsim
