#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "fracctl/study.hpp"

namespace fracctl::study {

namespace {

std::string sci(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace

void write_csv(const ConvergenceRecord& rec, std::ostream& out) {
    out << "dofs,cells,cells_per_side,intervals,Y,gamma";
    for (const auto& c : rec.columns) out << ',' << c;
    out << ",iterations\n";
    for (const auto& r : rec.rows) {
        out << r.dofs << ',' << r.cells << ',' << r.cells_per_side << ',' << r.intervals << ',' << sci(r.Y) << ','
            << sci(r.gamma);
        for (const auto& c : rec.columns) {
            auto it = r.errors.find(c);
            out << ',' << sci(it == r.errors.end() ? NAN : it->second);
        }
        out << ',' << r.iterations << '\n';
    }
}

void write_csv(const TruncationRecord& rec, std::ostream& out) {
    out << "Y,intervals,err_control_ref,err_state_ref,err_control_exact\n";
    for (const auto& r : rec.rows)
        out << sci(r.Y) << ',' << r.intervals << ',' << sci(r.err_control) << ',' << sci(r.err_state) << ','
            << sci(r.err_control_exact) << '\n';
}

nlohmann::json summary_json(const ConvergenceRecord& rec, const SlopeBands& bands) {
    nlohmann::json j;
    j["study"] = rec.study;
    j["s"] = rec.s;
    j["n"] = rec.dim;
    j["mode"] = to_string(rec.mode);
    j["complete"] = rec.complete;
    if (!rec.complete) j["failure"] = rec.failure;
    nlohmann::json slopes = nlohmann::json::object();
    bool all_pass = rec.complete;
    for (const auto& [name, fit] : rec.slopes) {
        nlohmann::json f{{"slope", finite_or_null(fit.slope)},
                         {"fit_residual", finite_or_null(fit.residual)},
                         {"points", fit.points}};
        if (auto it = bands.find(name); it != bands.end()) {
            const bool pass = std::isfinite(fit.slope) && fit.points >= 3 && fit.slope >= it->second.first &&
                              fit.slope <= it->second.second;
            f["band"] = {it->second.first, it->second.second};
            f["pass"] = pass;
            all_pass = all_pass && pass;
        }
        slopes[name] = f;
    }
    j["slopes"] = slopes;
    j["pass"] = all_pass;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rec.rows) {
        nlohmann::json row{{"dofs", r.dofs},           {"cells", r.cells},
                           {"cells_per_side", r.cells_per_side}, {"intervals", r.intervals},
                           {"Y", r.Y},                 {"gamma", r.gamma},
                           {"iterations", r.iterations}, {"converged", r.converged},
                           {"vi_sampled_min", r.vi_sampled_min},
                           {"fixed_point_residual", r.fixed_point_residual},
                           {"seconds", r.seconds}};
        for (const auto& [k, v] : r.errors) row[k] = finite_or_null(v);
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j;
}

nlohmann::json summary_json(const TruncationRecord& rec, double max_slope) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rec.rows)
        rows.push_back({{"Y", r.Y},
                        {"intervals", r.intervals},
                        {"err_control_ref", r.err_control},
                        {"err_state_ref", r.err_state},
                        {"err_control_exact", r.err_control_exact}});
    const bool pass = std::isfinite(rec.decay.slope) && rec.decay.points >= 2 && rec.decay.slope <= max_slope;
    return {{"study", "truncation"},
            {"s", rec.s},
            {"n", rec.dim},
            {"cells_per_side", rec.cells_per_side},
            {"reference_intervals", rec.reference_intervals},
            {"reference_Y", rec.reference_Y},
            {"gamma", rec.gamma},
            {"lambda1", rec.lambda1},
            {"decay_slope", finite_or_null(rec.decay.slope)},
            {"fitted_rows", rec.fitted_rows},
            {"max_slope", max_slope},
            {"pass", pass},
            {"rows", rows}};
}

void emit_report(const ConvergenceRecord& rec, const SlopeBands& bands, const std::string& dir,
                 const std::string& stem, const nlohmann::json& config) {
    const std::filesystem::path base(dir);
    {
        auto out = open_for_write(base / (stem + ".csv"));
        write_csv(rec, out);
        if (!out) throw std::runtime_error("write failed: " + (base / (stem + ".csv")).string());
    }
    auto j = summary_json(rec, bands);
    j["config"] = config;
    auto out = open_for_write(base / (stem + ".json"));
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + (base / (stem + ".json")).string());
}

void emit_report(const TruncationRecord& rec, double max_slope, const std::string& dir, const std::string& stem,
                 const nlohmann::json& config) {
    const std::filesystem::path base(dir);
    {
        auto out = open_for_write(base / (stem + ".csv"));
        write_csv(rec, out);
        if (!out) throw std::runtime_error("write failed: " + (base / (stem + ".csv")).string());
    }
    auto j = summary_json(rec, max_slope);
    j["config"] = config;
    auto out = open_for_write(base / (stem + ".json"));
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + (base / (stem + ".json")).string());
}

}  // namespace fracctl::study
