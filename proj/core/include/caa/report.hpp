#pragma once

#include "caa/model.hpp"
#include "caa/policy.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace caa {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // Source line of each row, 1-based.
    std::vector<std::size_t> lines;

    // Index of a column, or -1.
    [[nodiscard]] auto column(std::string_view name) const -> int;
};

// Comma-separated, no quoting. Throws ParseError with "line N" positions
// for ragged rows.
[[nodiscard]] auto parse_csv(std::string_view text) -> CsvTable;

struct FrontPoint {
    double robust_accuracy = 0.0;
    double complexity = 0.0;
};

// Reads the robust_accuracy and complexity columns of a pareto.csv or an
// attack summary. With a generation column only the last generation is kept.
// An empty file yields no points.
[[nodiscard]] auto read_front(std::string_view text) -> std::vector<FrontPoint>;

struct PlotGeometry {
    double width = 640.0;
    double height = 480.0;
    double left = 70.0;
    double right = 30.0;
    double top = 30.0;
    double bottom = 60.0;
};

// Pixel position of a point: x scaled by the largest complexity (1 when all
// are zero), y by robust accuracy in [0, 1] with 1 at the top.
[[nodiscard]] auto plot_position(FrontPoint const& p, double x_max, PlotGeometry const& g = {}) -> std::pair<double, double>;

[[nodiscard]] auto render_front_svg(std::span<const FrontPoint> points, PlotGeometry const& g = {}) -> std::string;

// Per-example rows: index,label,target,clean_pred,adv_pred,success,linf,l2
[[nodiscard]] auto attack_report_csv(PolicyOutcome const& outcome, std::span<const Tensor> images, std::span<const int> labels,
    std::span<const std::size_t> ids, std::span<const int> targets, Classifier const& model) -> std::string;

struct AttackSummary {
    double robust_accuracy = 0.0;
    double clean_accuracy = 0.0;
    std::size_t examples = 0;
    std::uint32_t restarts = 1;
    std::uint64_t complexity = 0;
    std::uint64_t gradient_evals = 0;
    std::uint64_t queries = 0;
};

// header robust_accuracy,clean_accuracy,examples,restarts,complexity,gradient_evals,queries
[[nodiscard]] auto attack_summary_csv(AttackSummary const& s) -> std::string;

} // namespace caa
