#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pptkit/error.hpp"

namespace pptkit {

struct LossPoint {
    std::uint64_t step = 0;
    double loss = 0.0;

    friend bool operator==(const LossPoint&, const LossPoint&) = default;
};

/// Validation loss logged at increasing training steps.
struct LossCurve {
    std::string label;
    std::string seed;
    std::vector<LossPoint> points;

    /// Needs >= 2 points, strictly increasing steps, finite positive losses.
    void validate() const;
    const LossPoint& last() const { return points.back(); }
};

/// CSV `step,loss` with optional header row and `# label: x` / `# seed: y` comments.
LossCurve read_loss_curve(std::istream& in, std::string default_label = {});
LossCurve load_loss_curve(const std::filesystem::path& path);
/// Flat `label,seed,step,loss` table for external plotting.
void write_curve_table(std::span<const LossCurve> curves, std::ostream& out);

/// First step at which the piecewise-linear interpolant of the curve is at
/// or below `target`; nothing if it never gets there.
std::optional<double> first_crossing(const LossCurve& curve, double target);

struct SavingsOptions {
    /// Steps spent in the synthetic warm-up stage. Counted against the
    /// candidate only when include_ppt is set.
    std::uint64_t ppt_steps = 0;
    bool include_ppt = false;
};

struct SavingsReport {
    double baseline_final_loss = 0.0;
    std::uint64_t s_base = 0;
    bool matched = false;
    double s_match = 0.0;      ///< valid when matched
    double savings = 0.0;      ///< 1 - S_match / S_base (PPT steps added when requested)
    double terminal_gap = 0.0; ///< candidate final loss - baseline final loss
    std::string note;
};

SavingsReport token_savings(const LossCurve& candidate, const LossCurve& baseline, const SavingsOptions& options = {});

struct MethodSummary {
    std::size_t runs = 0;
    double mean = 0.0;
    double sd = 0.0;          ///< population standard deviation of final losses
    double gap = 0.0;         ///< baseline mean - this mean; positive means lower loss
};

struct FinalGapReport {
    std::string baseline;
    std::map<std::string, MethodSummary> methods;
};

/// Mean and population sd of last-step losses per method, with gaps against
/// the named baseline method.
FinalGapReport final_gap(const std::map<std::string, std::vector<LossCurve>>& curves, const std::string& baseline);

} // namespace pptkit
