#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fracctl/errors.hpp"
#include "fracctl/study.hpp"

using namespace fracctl;
using namespace fracctl::study;
using std::numbers::pi;

TEST_CASE("manufactured problem") {
    const auto p = build_manufactured(0.5, 2);
    CHECK(p.lambda == doctest::Approx(8 * pi * pi).epsilon(1e-14));
    CHECK(p.lambda_s == doctest::Approx(std::sqrt(8 * pi * pi)).epsilon(1e-14));
    CHECK(p.lambda_s == doctest::Approx(8.8858).epsilon(1e-5));
    const BasePoint peak{0.25, 0.25};
    CHECK(p.state(peak) == doctest::Approx(1.0));
    CHECK(p.control(peak) == 0.5);
    for (const BasePoint& x : {BasePoint{0.75, 0.25}, BasePoint{0.6, 0.1}, BasePoint{0.55, 0.3}}) {
        CHECK(p.state(x) <= 1e-15);
        CHECK(p.control(x) == 0.0);
    }
    // optimality system pointwise: z = clamp(-p/mu), state data = f + z, u_d - u = -p lambda^s / mu ... on sines
    for (double x1 : {0.1, 0.37, 0.62})
        for (double x2 : {0.2, 0.55, 0.9}) {
            const BasePoint x{x1, x2};
            CHECK(p.control(x) == control::project_box(-p.adjoint(x) / p.mu, p.bounds));
            CHECK(p.forcing(x) + p.control(x) == doctest::Approx(p.lambda_s * p.state(x)));
            CHECK(p.desired(x) - p.state(x) == doctest::Approx(-p.lambda_s * p.adjoint(x)));
            CHECK(p.state_data(x) == doctest::Approx(p.lambda_s * p.state(x)));
        }

    const auto q = build_manufactured(0.5, 1);
    CHECK(q.lambda == doctest::Approx(4 * pi * pi));
    CHECK(q.lambda_s == doctest::Approx(2 * pi));
    CHECK(q.state({0.25, 0.0}) == doctest::Approx(1.0));

    CHECK_THROWS_AS(build_manufactured(0.0, 2), ConfigurationError);
    CHECK_THROWS_AS(build_manufactured(1.0, 2), ConfigurationError);
    CHECK_THROWS_AS(build_manufactured(0.5, 3), ConfigurationError);
    CHECK_THROWS_AS(refinement_from_string("graded"), ConfigurationError);
    CHECK(refinement_from_string("uniform") == Refinement::uniform);
}

TEST_CASE("log-log fit") {
    std::vector<double> x{10, 100, 1000, 10000}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, -0.75));
    const auto f = fit_loglog(x, y);
    CHECK(f.slope == doctest::Approx(-0.75).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.residual <= 1e-12);
    CHECK(f.points == 4);
    CHECK(std::isnan(fit_loglog({1.0}, {1.0}).slope));
    CHECK_THROWS_AS(fit_loglog({1.0, 2.0}, {1.0}), ConfigurationError);
}

TEST_CASE("sweep meshes") {
    StudyConfig cfg;
    cfg.dim = 2;
    const auto a = sweep_mesh(cfg, 0.5, 4096);
    CHECK(a->base().cells_per_side() == 16);
    CHECK(a->layers() == 16);
    CHECK(a->extended().gamma() == doctest::Approx(mesh::default_grading(0.5)));
    cfg.mode = Refinement::uniform;
    const auto u = sweep_mesh(cfg, 0.5, 4096);
    CHECK(u->extended().gamma() == 1.0);
    CHECK(u->extended().height() == a->extended().height());
    cfg.truncation = 2.5;
    CHECK(sweep_mesh(cfg, 0.5, 4096)->extended().height() == 2.5);
}

TEST_CASE("rate studies: fit stability and determinism") {
    StudyConfig cfg;
    cfg.dim = 1;
    cfg.dof_targets = {256, 1024, 4096, 16384};
    const auto rec = run_rate_study(cfg, 0.5);
    REQUIRE(rec.complete);
    REQUIRE(rec.rows.size() == 4);
    for (const auto& r : rec.rows) {
        CHECK(r.converged);
        CHECK(r.vi_sampled_min >= -1e-7);
        CHECK(r.fixed_point_residual <= 1e-8);
    }
    // control error falls under refinement
    for (std::size_t k = 1; k < rec.rows.size(); ++k)
        CHECK(rec.rows[k].errors.at("err_control_L2") < rec.rows[k - 1].errors.at("err_control_L2"));

    auto trimmed = rec;
    trimmed.rows.erase(trimmed.rows.begin());
    trimmed.fit();
    for (const auto& c : rec.columns) {
        CHECK(trimmed.slopes.at(c).points == 3);
        CHECK(std::abs(trimmed.slopes.at(c).slope - rec.slopes.at(c).slope) < 0.1);
    }

    std::ostringstream a, b;
    write_csv(rec, a);
    write_csv(run_rate_study(cfg, 0.5), b);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("dofs,cells,cells_per_side,intervals,Y,gamma,err_control_L2,err_state_Hs,err_state_L2", 0) == 0);

    cfg.dof_targets = {256, 1024};
    CHECK_THROWS_AS(run_rate_study(cfg, 0.5), ConfigurationError);
}

TEST_CASE("nonconverged sweep stops with partial output") {
    StudyConfig cfg;
    cfg.dim = 1;
    cfg.dof_targets = {256, 1024, 4096};
    cfg.tol = 1e-30;
    const auto rec = run_rate_study(cfg, 0.5);
    CHECK_FALSE(rec.complete);
    // a row may still hit an exact fixed point; the sweep stops at the first miss
    REQUIRE(rec.rows.size() < 3);
    CHECK_FALSE(rec.rows.back().converged);
    CHECK(rec.failure.find(std::to_string(rec.rows.back().target)) != std::string::npos);
    const auto j = summary_json(rec, {{"err_control_L2", {-1.0, 0.0}}});
    CHECK(j["pass"] == false);
    CHECK(j["complete"] == false);
}

TEST_CASE("state oracle check on a single eigenmode") {
    StudyConfig cfg;
    cfg.dim = 1;
    cfg.dof_targets = {256, 1024, 4096};
    const auto rec = run_oracle_check(cfg, 0.5);
    REQUIRE(rec.rows.size() == 3);
    for (std::size_t k = 1; k < rec.rows.size(); ++k) {
        CHECK(rec.rows[k].errors.at("err_state_L2") < rec.rows[k - 1].errors.at("err_state_L2"));
        CHECK(rec.rows[k].errors.at("err_extension_max") < rec.rows[k - 1].errors.at("err_extension_max"));
    }
    CHECK(rec.rows.back().errors.at("err_extension_max") < 1e-3);
    CHECK(rec.slopes.at("err_state_L2").slope < -0.5);
}

TEST_CASE("discrete VI residual of the exact control vanishes under refinement") {
    const auto mp = build_manufactured(0.5, 2);
    std::vector<double> viol;
    for (int n : {8, 16, 32}) {
        auto m = std::make_shared<const mesh::TensorMesh>(
            mesh::BasePartition(2, n), mesh::make_graded_partition(n, mesh::default_grading(0.5), 2.0, 0.5));
        const control::ReducedProblem rp(mp.control_problem(), m);
        const auto z = control::project_piecewise_constant(mp.control, m->base());
        const auto v = rp.state(z);
        const auto p = rp.adjoint(v);
        const auto res = control::optimality_residuals(rp, z, v, p, 200);
        viol.push_back(-res.vi_exact_min);
        CHECK(res.vi_exact_min <= res.vi_sampled_min + 1e-15);
    }
    for (std::size_t k = 1; k < viol.size(); ++k) CHECK(viol[k] < viol[k - 1]);
    CHECK(viol.back() < 0.2 * viol.front());
}

TEST_CASE("truncation study") {
    const std::vector<double> heights{1.0, 1.5, 2.0, 2.5, 3.0};
    const auto rec = run_truncation_study(0.5, 1, 16, 120, 5.0, heights);
    REQUIRE(rec.rows.size() == heights.size());
    for (std::size_t k = 0; k < rec.rows.size(); ++k) CHECK(rec.rows[k].Y >= heights[k]);
    // monotone tail of the state difference
    for (std::size_t k = 1; k < rec.rows.size(); ++k) CHECK(rec.rows[k].err_state < rec.rows[k - 1].err_state);
    CHECK(rec.fitted_rows >= 2);
    CHECK(rec.decay.slope <= -0.7 * std::sqrt(rec.lambda1) / 4.0);
    // past saturation the error to the exact control is the discretization error
    const double floor = rec.rows.back().err_control_exact;
    CHECK(std::abs(rec.rows[rec.rows.size() - 2].err_control_exact - floor) < 0.05 * floor);

    CHECK_THROWS_AS(run_truncation_study(0.5, 1, 8, 20, 5.0, {2.0, 1.5}), ConfigurationError);
    CHECK_THROWS_AS(run_truncation_study(0.5, 1, 8, 20, 5.0, {0.5, 1.5}), ConfigurationError);
    CHECK_THROWS_AS(run_truncation_study(0.5, 1, 8, 20, 2.0, {1.0, 3.0}), ConfigurationError);

    std::ostringstream csv;
    write_csv(rec, csv);
    CHECK(csv.str().rfind("Y,intervals,", 0) == 0);
    const auto j = summary_json(rec, -0.7 * std::sqrt(rec.lambda1) / 4.0);
    CHECK(j["pass"] == true);
}

TEST_CASE("report emission") {
    StudyConfig cfg;
    cfg.dim = 1;
    cfg.dof_targets = {256, 1024, 4096};
    const auto rec = run_oracle_check(cfg, 0.3);
    const auto dir = std::filesystem::temp_directory_path() / "fracctl_report_test";
    std::filesystem::remove_all(dir);
    emit_report(rec, {{"err_state_L2", {-2.0, -0.1}}}, dir.string(), "oracle", {{"s", 0.3}});
    CHECK(std::filesystem::exists(dir / "oracle.csv"));
    std::ifstream in(dir / "oracle.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j["config"]["s"] == 0.3);
    CHECK(j["slopes"]["err_state_L2"]["pass"] == true);
    CHECK(j["rows"].size() == 3);

    // a regular file in place of the output directory
    const auto blocker = dir / "file";
    std::ofstream(blocker) << "x";
    try {
        emit_report(rec, {}, (blocker / "sub").string(), "oracle", {});
        FAIL("expected an I/O error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find((blocker / "sub").string()) != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}
