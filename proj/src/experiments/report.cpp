#include "raydiff/experiments/report.hpp"

#include <cmath>

#include "json.hpp"
#include "raydiff/common/io.hpp"

namespace raydiff {

double ProbeComparison::combined_se() const { return std::sqrt(lhs_se * lhs_se + rhs_se * rhs_se); }

void ScalingReport::finalize_rung(Rung& r) const {
    r.discrepancy = 0.0;
    r.error = 0.0;
    r.argmax = 0;
    for (std::size_t i = 0; i < r.probes.size(); ++i) {
        const double v = std::abs(r.probes[i].diff());
        if (v > r.discrepancy || i == 0) {
            r.discrepancy = v;
            r.argmax = i;
            r.error = error_bar_se * r.probes[i].combined_se();
        }
    }
}

bool ScalingReport::strictly_decreasing() const {
    if (rungs.size() < 2) return false;
    for (std::size_t i = 1; i < rungs.size(); ++i)
        if (!(rungs[i].discrepancy + rungs[i].error < rungs[i - 1].discrepancy - rungs[i - 1].error)) return false;
    return true;
}

std::string ScalingReport::to_json() const {
    nlohmann::json j;
    j["experiment"] = id;
    j["ladder"] = ladder_name;
    j["seed"] = seed;
    j["jobs"] = jobs;
    j["runtime_seconds"] = runtime_seconds;
    j["error_bar_standard_errors"] = error_bar_se;
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : rungs) {
        nlohmann::json x;
        x[ladder_name] = r.parameter;
        x["discrepancy"] = r.discrepancy;
        x["error"] = r.error;
        x["argmax_probe"] = r.argmax;
        rs.push_back(x);
    }
    j["rungs"] = rs;
    if (!verdict_rule.empty()) {
        j["verdict_rule"] = verdict_rule;
        j["verdict"] = trend_ok ? "pass" : "fail";
    }
    if (slope) j["slope"] = *slope;
    j["metrics"] = metrics;
    j["notes"] = notes;
    return j.dump(2);
}

std::string ScalingReport::to_csv() const {
    const int d = rungs.empty() || rungs.front().probes.empty()
                      ? 0
                      : static_cast<int>(rungs.front().probes.front().probe.x.size());
    std::vector<std::string> header{ladder_name.empty() ? "parameter" : ladder_name, "t"};
    for (int i = 1; i <= d; ++i) header.push_back("x" + std::to_string(i));
    for (int i = 1; i <= d; ++i) header.push_back("k" + std::to_string(i));
    for (const char* h : {"lhs", "lhs_se", "rhs", "rhs_se", "abs_diff"}) header.push_back(h);
    CsvWriter csv(header);
    for (const auto& r : rungs)
        for (const auto& p : r.probes) {
            csv.cell(r.parameter).cell(p.probe.t);
            for (int i = 0; i < d; ++i) csv.cell(p.probe.x(i));
            for (int i = 0; i < d; ++i) csv.cell(p.probe.k(i));
            csv.cell(p.lhs).cell(p.lhs_se).cell(p.rhs).cell(p.rhs_se).cell(std::abs(p.diff()));
            csv.end_row();
        }
    return csv.str();
}

}  // namespace raydiff
