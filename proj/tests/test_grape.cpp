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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "nmrsim/control.hpp"
#include "nmrsim/grape.hpp"

using namespace nmrsim;

namespace {

SpinSystemConfig free_pair() {
    SpinSystemConfig c;
    c.nuclei = {{"1H", 0.0, 4.0, 0.5, 1e-5}, {"31P", 0.0, 8.0, 0.6, 1e-5}};
    c.j_hz = RealMatrix::Zero(2, 2);
    return c;
}

RealMatrix random_amplitudes(Eigen::Index rows, Eigen::Index cols, double max_hz, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> d(-max_hz, max_hz);
    RealMatrix u(rows, cols);
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = d(rng);
    return u;
}

/// Central difference on 20 seeded (segment, control) entries:
/// |g - fd| / |fd| over the sampled vector.
double fd_gradient_error(const GrapeProblem& p, const RealMatrix& u, GradientMode mode) {
    const RealMatrix g = p.gradient(u, mode);
    constexpr double delta = 1e-3;
    Rng rng(11);
    std::uniform_int_distribution<Eigen::Index> seg(0, u.rows() - 1);
    std::uniform_int_distribution<Eigen::Index> ctl(0, u.cols() - 1);
    double err = 0.0, ref = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Eigen::Index j = seg(rng), c = ctl(rng);
        RealMatrix up = u, dn = u;
        up(j, c) += delta;
        dn(j, c) -= delta;
        const double fd = (p.fidelity(up) - p.fidelity(dn)) / (2 * delta);
        err += (g(j, c) - fd) * (g(j, c) - fd);
        ref += fd * fd;
    }
    return std::sqrt(err / ref);
}

}  // namespace

TEST(Grape, IdentityTargetIsStationary) {
    const auto cfg = free_pair();
    GrapeConfig g;
    g.segments = 10;
    g.initial = GrapeInit::constant;
    g.initial_constant_hz = 0.0;
    g.target_fidelity = 1.0;
    const Matrix id = Matrix::Identity(4, 4);
    const GrapeProblem p(id, cfg, g.dt);
    const RealMatrix u = RealMatrix::Zero(10, 4);
    EXPECT_NEAR(p.fidelity(u), 1.0, 1e-15);
    EXPECT_EQ(p.gradient(u, GradientMode::exact).norm(), 0.0);
    const auto r = grape_optimize(id, cfg, g, 1);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_NEAR(r.final_fidelity, 1.0, 1e-15);
    EXPECT_TRUE(r.converged);
}

TEST(Grape, GradientMatchesFiniteDifference) {
    const auto cfg = gemini();
    Rng rng(3);
    const Matrix target = random_unitary(4, rng);
    // dt * |2 pi H| stays below 0.05 for 1 kHz controls and J = 697 Hz.
    const double dt = 2e-6;
    const GrapeProblem p(target, cfg, dt);
    const RealMatrix u = random_amplitudes(50, 4, 1000.0, 8);
    EXPECT_LT(dt * kTwoPi * (1000.0 * std::sqrt(2.0) + 697.4), 0.05);
    EXPECT_LE(fd_gradient_error(p, u, GradientMode::first_order), 1e-2);
    EXPECT_LE(fd_gradient_error(p, u, GradientMode::exact), 1e-5);
}

TEST(Grape, ExactGradientHoldsForLongSegments) {
    const auto cfg = triangulum();
    Rng rng(4);
    const GrapeProblem p(random_unitary(8, rng), cfg, 5e-5);
    EXPECT_LE(fd_gradient_error(p, random_amplitudes(20, 2, 3000.0, 9), GradientMode::exact), 1e-5);
}

TEST(Grape, TraceIsMonotoneAndResultConsistent) {
    const auto cfg = gemini();
    GrapeConfig g;
    g.segments = 40;
    g.dt = 2.5e-5;
    g.max_iters = 200;
    g.target_fidelity = 0.999;
    const Matrix target = gate_matrix(Gate::make(GateName::CNOT, {0, 1}), 2);
    const auto r = grape_optimize(target, cfg, g, 7);
    ASSERT_FALSE(r.fidelity_trace.empty());
    for (std::size_t i = 1; i < r.fidelity_trace.size(); ++i) EXPECT_GE(r.fidelity_trace[i], r.fidelity_trace[i - 1]);
    EXPECT_EQ(r.fidelity_trace.size(), static_cast<std::size_t>(r.iterations) + 1);
    EXPECT_NEAR(r.final_fidelity, gate_fidelity(r.final_unitary, target), 1e-12);
    EXPECT_NEAR(r.final_fidelity, r.fidelity_trace.back(), 1e-12);
    EXPECT_EQ(r.amplitudes.rows(), 40);
    EXPECT_EQ(r.amplitudes.cols(), 4);
    // The exported program plays the same controls.
    const Matrix played = program_unitary(grape_program(r), cfg);
    EXPECT_LT((played - r.final_unitary).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Grape, SeedDeterminism) {
    const auto cfg = gemini();
    GrapeConfig g;
    g.segments = 20;
    g.max_iters = 15;
    const Matrix target = gate_matrix(Gate::make(GateName::H, {1}), 2);
    const auto a = grape_optimize(target, cfg, g, 42);
    const auto b = grape_optimize(target, cfg, g, 42);
    const auto c = grape_optimize(target, cfg, g, 43);
    EXPECT_EQ(a.amplitudes, b.amplitudes);
    EXPECT_EQ(a.fidelity_trace, b.fidelity_trace);
    EXPECT_NE(a.amplitudes, c.amplitudes);
}

TEST(Grape, LbfgsReachesHighFidelityOnThreeSpins) {
    const auto cfg = triangulum();
    GrapeConfig g;
    g.segments = 100;
    g.dt = 2e-5;
    g.direction = GrapeDirection::lbfgs;
    const Matrix target = embed(rx(kPi / 2), {0}, 3);
    const auto r = grape_optimize(target, cfg, g, 1);
    EXPECT_TRUE(r.converged) << r.stop_reason;
    EXPECT_GE(r.final_fidelity, 0.995);
    EXPECT_LE(r.iterations, 1000);
    for (std::size_t i = 1; i < r.fidelity_trace.size(); ++i) EXPECT_GE(r.fidelity_trace[i], r.fidelity_trace[i - 1]);
}

TEST(Grape, Validation) {
    const auto cfg = gemini();
    const Matrix target = Matrix::Identity(4, 4);
    GrapeConfig g;
    g.segments = 0;
    EXPECT_THROW(grape_optimize(target, cfg, g, 1), ValidationError);
    g = GrapeConfig{};
    g.target_fidelity = 1.5;
    EXPECT_THROW(grape_optimize(target, cfg, g, 1), ValidationError);
    g = GrapeConfig{};
    g.armijo = 1.0;
    EXPECT_THROW(grape_optimize(target, cfg, g, 1), ValidationError);
    EXPECT_THROW(grape_optimize(Matrix::Identity(8, 8), cfg, GrapeConfig{}, 1), ValidationError);
    EXPECT_THROW(grape_optimize(Matrix::Ones(4, 4), cfg, GrapeConfig{}, 1), ValidationError);
}
