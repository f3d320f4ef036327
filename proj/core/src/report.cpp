#include "caa/report.hpp"

#include "caa/error.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace caa {

namespace {

    auto split(std::string_view line) -> std::vector<std::string>
    {
        std::vector<std::string> out;
        std::size_t pos = 0;
        while (true) {
            auto const comma = line.find(',', pos);
            out.emplace_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
            if (comma == std::string_view::npos) {
                break;
            }
            pos = comma + 1;
        }
        return out;
    }

    auto to_number(std::string const& s, std::size_t line) -> double
    {
        char* end = nullptr;
        double const v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size()) {
            throw ParseError("'" + s + "' is not a number", "line " + std::to_string(line));
        }
        return v;
    }

    auto num(double v) -> std::string
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return buf;
    }

    auto fixed6(double v) -> std::string
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return buf;
    }

} // namespace

auto CsvTable::column(std::string_view name) const -> int
{
    auto const it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

auto parse_csv(std::string_view text) -> CsvTable
{
    CsvTable t;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = text.size();
        }
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }
        auto fields = split(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()),
                "line " + std::to_string(line_no));
        }
        t.rows.push_back(std::move(fields));
        t.lines.push_back(line_no);
    }
    return t;
}

auto read_front(std::string_view text) -> std::vector<FrontPoint>
{
    CsvTable const t = parse_csv(text);
    if (t.header.empty()) {
        return {};
    }
    int const ra = t.column("robust_accuracy");
    int const cx = t.column("complexity");
    if (ra < 0 || cx < 0) {
        throw ParseError("missing robust_accuracy or complexity column", "line 1");
    }
    int const gen = t.column("generation");
    double last = 0.0;
    if (gen >= 0) {
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            last = std::max(last, to_number(t.rows[i][static_cast<std::size_t>(gen)], t.lines[i]));
        }
    }
    std::vector<FrontPoint> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        auto const& r = t.rows[i];
        if (gen >= 0 && to_number(r[static_cast<std::size_t>(gen)], t.lines[i]) != last) {
            continue;
        }
        FrontPoint p { to_number(r[static_cast<std::size_t>(ra)], t.lines[i]), to_number(r[static_cast<std::size_t>(cx)], t.lines[i]) };
        if (p.robust_accuracy < 0.0 || p.robust_accuracy > 1.0 || p.complexity < 0.0) {
            throw ParseError("value out of range", "line " + std::to_string(t.lines[i]));
        }
        out.push_back(p);
    }
    return out;
}

auto plot_position(FrontPoint const& p, double x_max, PlotGeometry const& g) -> std::pair<double, double>
{
    double const w = g.width - g.left - g.right;
    double const h = g.height - g.top - g.bottom;
    double const scale = x_max > 0.0 ? x_max : 1.0;
    return { g.left + p.complexity / scale * w, g.top + (1.0 - p.robust_accuracy) * h };
}

auto render_front_svg(std::span<const FrontPoint> points, PlotGeometry const& g) -> std::string
{
    double x_max = 0.0;
    for (auto const& p : points) {
        x_max = std::max(x_max, p.complexity);
    }
    if (x_max <= 0.0) {
        x_max = 1.0;
    }
    double const x0 = g.left;
    double const x1 = g.width - g.right;
    double const y0 = g.top;
    double const y1 = g.height - g.bottom;

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(g.width) + "\" height=\"" + num(g.height) + "\" viewBox=\"0 0 "
        + num(g.width) + " " + num(g.height) + "\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + num(g.width) + "\" height=\"" + num(g.height) + "\" fill=\"white\"/>\n";
    s += "<g id=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
    s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y1) + "\"/>\n";
    s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) + "\"/>\n";
    s += "</g>\n<g id=\"ticks\" font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int i = 0; i <= 4; ++i) {
        double const ra = i / 4.0;
        auto const [tx, ty] = plot_position({ ra, 0.0 }, x_max, g);
        s += "<line x1=\"" + num(tx - 4) + "\" y1=\"" + num(ty) + "\" x2=\"" + num(tx) + "\" y2=\"" + num(ty) + "\" stroke=\"black\"/>";
        s += "<text x=\"" + num(tx - 8) + "\" y=\"" + num(ty + 4) + "\" text-anchor=\"end\">" + num(ra) + "</text>\n";
        double const c = x_max * i / 4.0;
        auto const [cxp, cyp] = plot_position({ 0.0, c }, x_max, g);
        (void)cyp;
        s += "<line x1=\"" + num(cxp) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(cxp) + "\" y2=\"" + num(y1 + 4) + "\" stroke=\"black\"/>";
        s += "<text x=\"" + num(cxp) + "\" y=\"" + num(y1 + 18) + "\" text-anchor=\"middle\">" + num(c) + "</text>\n";
    }
    s += "</g>\n";
    s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(g.height - 15) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">complexity (gradient evaluations)</text>\n";
    s += "<text x=\"18\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 " + num((y0 + y1) / 2) + ")\">robust accuracy</text>\n";
    s += "<g id=\"points\" fill=\"#1f5fa8\">\n";
    for (auto const& p : points) {
        auto const [px, py] = plot_position(p, x_max, g);
        s += "<circle cx=\"" + num(px) + "\" cy=\"" + num(py) + "\" r=\"4\"/>\n";
    }
    s += "</g>\n</svg>\n";
    return s;
}

auto attack_report_csv(PolicyOutcome const& outcome, std::span<const Tensor> images, std::span<const int> labels,
    std::span<const std::size_t> ids, std::span<const int> targets, Classifier const& model) -> std::string
{
    std::string out = "index,label,target,clean_pred,adv_pred,success,linf,l2\n";
    for (std::size_t i = 0; i < outcome.size(); ++i) {
        auto const& adv = outcome.adversarial_examples[i];
        int const clean = model.predict(images[i].to_doubles());
        int const pred = model.predict(adv.to_doubles());
        out += std::to_string(ids.empty() ? i : ids[i]) + ',' + std::to_string(labels[i]) + ','
            + (targets.empty() ? std::string("-1") : std::to_string(targets[i])) + ',' + std::to_string(clean) + ','
            + std::to_string(pred) + ',' + (outcome.success_mask[i] ? "1" : "0") + ','
            + fixed6(linf_distance(adv.data, images[i].data)) + ',' + fixed6(l2_distance(adv.data, images[i].data)) + '\n';
    }
    return out;
}

auto attack_summary_csv(AttackSummary const& s) -> std::string
{
    return "robust_accuracy,clean_accuracy,examples,restarts,complexity,gradient_evals,queries\n" + fixed6(s.robust_accuracy) + ','
        + fixed6(s.clean_accuracy) + ',' + std::to_string(s.examples) + ',' + std::to_string(s.restarts) + ','
        + std::to_string(s.complexity) + ',' + std::to_string(s.gradient_evals) + ',' + std::to_string(s.queries) + '\n';
}

} // namespace caa
