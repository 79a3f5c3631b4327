#include "pptkit/analysis.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

namespace pptkit {

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace

void LossCurve::validate() const {
    const std::string name = label.empty() ? std::string("loss curve") : "loss curve '" + label + "'";
    if (points.size() < 2) throw DomainError(name + " needs at least 2 points");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(std::isfinite(points[i].loss) && points[i].loss > 0.0)) {
            throw DomainError(name + " has a non-positive or non-finite loss at step " + std::to_string(points[i].step));
        }
        if (i > 0 && points[i].step <= points[i - 1].step) {
            throw DomainError(name + " steps are not strictly increasing at step " + std::to_string(points[i].step));
        }
    }
}

LossCurve read_loss_curve(std::istream& in, std::string default_label) {
    LossCurve curve;
    curve.label = std::move(default_label);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '#') {
            const std::string body = trim(line.substr(1));
            const auto colon = body.find(':');
            if (colon == std::string::npos) continue;
            const std::string key = trim(body.substr(0, colon));
            const std::string value = trim(body.substr(colon + 1));
            if (key == "label") curve.label = value;
            if (key == "seed") curve.seed = value;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw FormatError("curve line " + std::to_string(line_no) + ": expected step,loss");
        const std::string step = trim(line.substr(0, comma));
        const std::string loss = trim(line.substr(comma + 1));
        if (curve.points.empty() && step == "step") continue; // header row

        LossPoint p;
        const auto [end, ec] = std::from_chars(step.data(), step.data() + step.size(), p.step);
        if (ec != std::errc{} || end != step.data() + step.size()) {
            throw FormatError("curve line " + std::to_string(line_no) + ": bad step '" + step + "'");
        }
        try {
            std::size_t used = 0;
            p.loss = std::stod(loss, &used);
            if (used != loss.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw FormatError("curve line " + std::to_string(line_no) + ": bad loss '" + loss + "'");
        }
        curve.points.push_back(p);
    }
    return curve;
}

LossCurve load_loss_curve(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return read_loss_curve(in, path.stem().string());
}

void write_curve_table(std::span<const LossCurve> curves, std::ostream& out) {
    out << "label,seed,step,loss\n";
    out << std::setprecision(17);
    for (const auto& c : curves) {
        for (const auto& p : c.points) out << c.label << ',' << c.seed << ',' << p.step << ',' << p.loss << '\n';
    }
}

std::optional<double> first_crossing(const LossCurve& curve, double target) {
    const auto& pts = curve.points;
    if (pts.empty()) return std::nullopt;
    if (pts.front().loss <= target) return static_cast<double>(pts.front().step);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].loss > target) continue;
        const auto& a = pts[i - 1];
        const auto& b = pts[i];
        const double s0 = static_cast<double>(a.step);
        const double s1 = static_cast<double>(b.step);
        return s0 + (s1 - s0) * (a.loss - target) / (a.loss - b.loss);
    }
    return std::nullopt;
}

SavingsReport token_savings(const LossCurve& candidate, const LossCurve& baseline, const SavingsOptions& options) {
    candidate.validate();
    baseline.validate();
    SavingsReport r;
    r.baseline_final_loss = baseline.last().loss;
    r.s_base = baseline.last().step;
    if (r.s_base == 0) throw DomainError("baseline final step must be positive");
    r.terminal_gap = candidate.last().loss - r.baseline_final_loss;

    const auto crossing = first_crossing(candidate, r.baseline_final_loss);
    if (!crossing) {
        r.note = "not matched: candidate never reaches the baseline final loss";
        return r;
    }
    r.matched = true;
    r.s_match = *crossing;
    const double spent = r.s_match + (options.include_ppt ? static_cast<double>(options.ppt_steps) : 0.0);
    r.savings = 1.0 - spent / static_cast<double>(r.s_base);
    r.note = options.include_ppt ? "total-token savings (PPT steps counted); linear interpolation between logged steps"
                                 : "PT-token savings; linear interpolation between logged steps";
    return r;
}

FinalGapReport final_gap(const std::map<std::string, std::vector<LossCurve>>& curves, const std::string& baseline) {
    FinalGapReport report;
    report.baseline = baseline;
    for (const auto& [method, runs] : curves) {
        if (runs.empty()) throw DomainError("method '" + method + "' has no curves");
        MethodSummary s;
        s.runs = runs.size();
        for (const auto& c : runs) {
            if (c.points.empty()) throw DomainError("method '" + method + "' has an empty curve");
            s.mean += c.last().loss;
        }
        s.mean /= static_cast<double>(s.runs);
        double var = 0.0;
        for (const auto& c : runs) var += (c.last().loss - s.mean) * (c.last().loss - s.mean);
        s.sd = std::sqrt(var / static_cast<double>(s.runs));
        report.methods.emplace(method, s);
    }
    const auto base = report.methods.find(baseline);
    if (base == report.methods.end()) throw DomainError("baseline method '" + baseline + "' has no curves");
    const double base_mean = base->second.mean;
    for (auto& [method, s] : report.methods) s.gap = base_mean - s.mean;
    return report;
}

} // namespace pptkit
