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

// Report serialization: canonical JSON (sorted keys, 12 significant digits),
// fixed-header CSV tables, and all-or-nothing file output.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "nmrsim/errors.hpp"
#include "nmrsim/experiments.hpp"
#include "nmrsim/grape.hpp"
#include "nmrsim/measurement.hpp"

namespace nmrsim {

inline constexpr int kReportDigits = 12;

inline double round_significant(double v, int digits = kReportDigits) {
    if (!std::isfinite(v) || v == 0.0) return v == 0.0 ? 0.0 : v;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    const double r = std::strtod(buf, nullptr);
    return r == 0.0 ? 0.0 : r;
}

/// Copy of `j` with every float rounded; objects keep nlohmann's sorted keys.
inline nlohmann::json canonical_json(const nlohmann::json& j) {
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (!std::isfinite(v)) return nullptr;
        return round_significant(v);
    }
    if (j.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& e : j) out.push_back(canonical_json(e));
        return out;
    }
    if (j.is_object()) {
        nlohmann::json out = nlohmann::json::object();
        for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = canonical_json(it.value());
        return out;
    }
    return j;
}

inline std::string dump_json(const nlohmann::json& j) { return canonical_json(j).dump(2) + "\n"; }

inline std::string csv_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", kReportDigits, v == 0.0 ? 0.0 : v);
    return buf;
}

// ---------------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------------

inline std::string scan_csv(const ScanResult& s) {
    std::string out = "x,y,fit_y\n";
    const auto fy = s.fit_y();
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        out += csv_number(s.x[i]) + "," + csv_number(s.y[i]) + "," + csv_number(fy[i]) + "\n";
    }
    return out;
}

inline std::string fid_csv(const FIDSignal& f) {
    std::string out = "t_s,re,im\n";
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
        out += csv_number(f.time(i)) + "," + csv_number(f.samples[i].real()) + "," + csv_number(f.samples[i].imag()) + "\n";
    }
    return out;
}

inline std::string spectrum_csv(const Spectrum& s) {
    std::string out = "freq_hz,re,im,magnitude\n";
    for (std::size_t i = 0; i < s.frequencies.size(); ++i) {
        const cplx a = s.amplitudes[i];
        out += csv_number(s.frequencies[i]) + "," + csv_number(a.real()) + "," + csv_number(a.imag()) + "," +
               csv_number(std::abs(a)) + "\n";
    }
    return out;
}

inline std::string grape_csv(const GrapeResult& r) {
    std::string out = "segment_index,channel,u_x_hz,u_y_hz\n";
    const Eigen::Index nch = r.amplitudes.cols() / 2;
    for (Eigen::Index j = 0; j < r.amplitudes.rows(); ++j) {
        for (Eigen::Index ch = 0; ch < nch; ++ch) {
            out += std::to_string(j) + "," + std::to_string(ch) + "," + csv_number(r.amplitudes(j, 2 * ch)) + "," +
                   csv_number(r.amplitudes(j, 2 * ch + 1)) + "\n";
        }
    }
    return out;
}

inline nlohmann::json grape_metadata(const GrapeResult& r) {
    return {{"iterations", r.iterations},
            {"final_fidelity", r.final_fidelity},
            {"seed", r.seed},
            {"converged", r.converged},
            {"stop_reason", r.stop_reason},
            {"dt_s", r.dt},
            {"segments", r.amplitudes.rows()},
            {"fidelity_trace", r.fidelity_trace}};
}

inline nlohmann::json to_json(const FitResult& f) {
    return {{"model", to_string(f.model)},
            {"amplitude", f.amplitude},
            {"parameter", f.parameter},
            {"rms_residual", f.rms_residual},
            {"relative_residual", f.relative_residual},
            {"iterations", f.iterations}};
}

inline nlohmann::json to_json(const PauliCoefficients& c) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (std::abs(c.by_index(i)) > 1e-15) j[PauliString::from_index(i, c.n()).label()] = c.by_index(i);
    }
    return j;
}

// ---------------------------------------------------------------------------
// File output
// ---------------------------------------------------------------------------

inline std::string read_text_file(const std::string& path, const std::string& what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(what + ": cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Collects named outputs and writes them together: each goes to a temporary
/// sibling first, and nothing is renamed into place until all writes succeed.
class ArtifactSet {
public:
    explicit ArtifactSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }
    void add_json(const std::string& name, const nlohmann::json& j) { add(name, dump_json(j)); }

    std::vector<std::filesystem::path> commit() const {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
        std::vector<fs::path> temps, finals;
        auto cleanup = [&] {
            std::error_code ignored;
            for (const auto& t : temps) fs::remove(t, ignored);
        };
        for (const auto& [name, content] : files_) {
            const fs::path target = dir_ / name;
            const fs::path tmp = dir_ / ("." + name + ".tmp");
            temps.push_back(tmp);
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (out) out.write(content.data(), static_cast<std::streamsize>(content.size()));
            out.close();
            if (!out) {
                cleanup();
                throw IoError("cannot write '" + target.string() + "'");
            }
            finals.push_back(target);
        }
        for (std::size_t i = 0; i < temps.size(); ++i) {
            fs::rename(temps[i], finals[i], ec);
            if (ec) {
                cleanup();
                throw IoError("cannot rename into '" + finals[i].string() + "': " + ec.message());
            }
        }
        return finals;
    }

private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace nmrsim
