#include <cmath>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "raydiff/common/errors.hpp"
#include "raydiff/experiments/config.hpp"
#include "raydiff/experiments/experiments.hpp"
#include "raydiff/experiments/report.hpp"

using namespace raydiff;

namespace {

int error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return 0;
}

const char* kSmallMomentum = R"(
[medium]
kind = gaussian
sigma = 1
n_modes = 64
[observable]
width = 0.5
k_center = 1
k_halfwidth = 0.5
c0 = 1
c1 = 1
[experiment]
type = momentum
deltas = 0.05
times = 0, 0.3
x_probes = 0, 0, 0
k_probes = 1, 0, 0
n_paths = 100
n_realizations = 100
dt = 0.01
M = 3
M_guard = 6
)";

}  // namespace

TEST_CASE("config parser reads sections, lists and vector lists") {
    const auto c = parse_config(R"(
# comment
[medium]
kind = gaussian   ; trailing comment
sigma = 1.5
envelope = 1, 0.25
[observable]
center = 0.1, 0.2, 0.3
[experiment]
type = stopping
deltas = 0.08, 0.04
x_probes = 0, 0, 0 | 1, 2, 3
eps1 = 0.01
eps4 = 0.51
)");
    CHECK(c.medium.sigma == 1.5);
    CHECK(c.medium.envelope == std::vector<double>{1.0, 0.25});
    CHECK(c.observable.center == std::vector<double>{0.1, 0.2, 0.3});
    CHECK(c.experiment.type == "stopping");
    CHECK(c.experiment.deltas == std::vector<double>{0.08, 0.04});
    REQUIRE(c.experiment.x_probes.size() == 2);
    CHECK(c.experiment.x_probes[1](2) == 3.0);
    CHECK(c.experiment.eps.eps1 == 0.01);
    CHECK(c.experiment.eps.eps4 == 0.51);
}

TEST_CASE("config errors carry the offending line") {
    CHECK(error_line("[medium]\nsigma = 1\nbogus = 2\n") == 3);
    CHECK(error_line("[medium]\nsigma = 1\nsigma = 2\n") == 3);
    CHECK(error_line("[nowhere]\n") == 1);
    CHECK(error_line("sigma = 1\n") == 1);
    CHECK(error_line("[medium]\n\nsigma = abc\n") == 3);
    CHECK(error_line("[experiment]\ndeltas = 0.1,,0.2\n") == 2);
    CHECK(error_line("[medium]\nsigma 1\n") == 2);
}

TEST_CASE("builders produce the configured objects") {
    auto c = parse_config(kSmallMomentum);
    const auto corr = build_correlation(c.medium);
    CHECK(corr->dim() == 3);
    CHECK(corr->rc(Vec::Zero(3)) == doctest::Approx(1.0));
    CHECK(build_hamiltonian(c.hamiltonian).d1(2.0) == doctest::Approx(2.0));
    const auto spec = build_observable(c.observable, 3);
    CHECK(spec.center.size() == 3);
    CHECK(spec.axis(0) == 1.0);
    c.experiment.k_probes.push_back(-Vec::Unit(3, 1));
    CHECK(build_probes(c.experiment, 3).size() == 2 * 1 * 2);
    c.medium.kind = "fractal";
    CHECK_THROWS_AS(build_correlation(c.medium), ValidationError);
}

TEST_CASE("report trend, csv and json") {
    ScalingReport r;
    r.id = "t";
    r.ladder_name = "delta";
    for (double d : {0.3, 0.1, 0.02}) {
        Rung rung;
        rung.parameter = d;
        ProbeComparison p;
        p.lhs = d;
        p.lhs_se = 0.01;
        p.rhs_se = 0.01;
        rung.probes.push_back(p);
        r.finalize_rung(rung);
        r.rungs.push_back(rung);
    }
    CHECK(r.rungs[0].discrepancy == doctest::Approx(0.3));
    CHECK(r.rungs[0].error == doctest::Approx(2.0 * std::sqrt(2.0) * 0.01));
    CHECK(r.strictly_decreasing());
    r.rungs[2].probes[0].lhs = 0.095;
    r.finalize_rung(r.rungs[2]);
    CHECK_FALSE(r.strictly_decreasing());

    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j["rungs"].size() == 3);
    const std::string csv = r.to_csv();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv == r.to_csv());
}

TEST_CASE("momentum ladder: quiet medium and t = 0 probes agree exactly") {
    auto c = parse_config(kSmallMomentum);
    const auto r = run_momentum_scaling(c, {5, 1});
    REQUIRE(r.rungs.size() == 1);
    REQUIRE(r.rungs[0].probes.size() == 2);
    const auto& p0 = r.rungs[0].probes[0];
    CHECK(p0.probe.t == 0.0);
    CHECK(std::abs(p0.diff()) < 1e-12);

    c.medium.kind = "zero";
    const auto q = run_momentum_scaling(c, {5, 1});
    CHECK(q.rungs[0].discrepancy < 1e-9);
}

TEST_CASE("small runs are reproducible across worker counts") {
    const auto c = parse_config(kSmallMomentum);
    const auto a = run_momentum_scaling(c, {11, 1});
    const auto b = run_momentum_scaling(c, {11, 2});
    CHECK(a.to_csv() == b.to_csv());
    const auto d = run_momentum_scaling(c, {12, 1});
    CHECK(a.to_csv() != d.to_csv());
}
