#include "metacal/svg.hpp"

#include <algorithm>
#include <cmath>

#include "metacal/csv.hpp"
#include "metacal/errors.hpp"

namespace metacal::svg {

namespace {

std::string num(double v) {
    return csv::format_double(v);
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

Figure::Figure(double width, double height) : width_(width), height_(height) {}

void Figure::comment(const std::string& text) {
    std::string safe = text;
    std::size_t pos = 0;
    while ((pos = safe.find("--", pos)) != std::string::npos) safe.replace(pos, 2, "- ");
    body_ += "<!-- " + safe + " -->\n";
}

void Figure::raw(const std::string& element) {
    body_ += element;
    body_.push_back('\n');
}

void Figure::open_group(const std::string& id) {
    body_ += "<g id=\"" + id + "\">\n";
}

void Figure::close_group() {
    body_ += "</g>\n";
}

std::string Figure::finish() const {
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) +
                      "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " +
                      num(height_) + "\">\n";
    out += "<rect width=\"" + num(width_) + "\" height=\"" + num(height_) + "\" fill=\"white\"/>\n";
    out += body_;
    out += "</svg>\n";
    return out;
}

double Panel::sx(double x) const {
    double t;
    if (log_x) {
        t = (std::log10(x) - std::log10(x_min)) / (std::log10(x_max) - std::log10(x_min));
    } else {
        t = (x - x_min) / (x_max - x_min);
    }
    return px + t * pw;
}

double Panel::sy(double y) const {
    const double t = (y - y_min) / (y_max - y_min);
    return py + ph - t * ph;
}

void draw_frame(Figure& fig, const Panel& panel, const std::string& id, const std::string& title,
                const std::string& x_label, const std::string& y_label) {
    fig.open_group(id);
    fig.raw("<rect x=\"" + num(panel.px) + "\" y=\"" + num(panel.py) + "\" width=\"" +
            num(panel.pw) + "\" height=\"" + num(panel.ph) +
            "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>");
    draw_label(fig, panel.px + panel.pw / 2.0, panel.py - 8.0, title, 12, "middle");
    draw_label(fig, panel.px + panel.pw / 2.0, panel.py + panel.ph + 28.0, x_label, 10, "middle");
    fig.raw("<text x=\"" + num(panel.px - 34.0) + "\" y=\"" + num(panel.py + panel.ph / 2.0) +
            "\" font-size=\"10\" text-anchor=\"middle\" transform=\"rotate(-90 " +
            num(panel.px - 34.0) + " " + num(panel.py + panel.ph / 2.0) + ")\">" +
            xml_escape(y_label) + "</text>");
    // Min/max ticks.
    draw_label(fig, panel.px, panel.py + panel.ph + 14.0, num(panel.x_min), 9, "middle");
    draw_label(fig, panel.px + panel.pw, panel.py + panel.ph + 14.0, num(panel.x_max), 9,
               "middle");
    draw_label(fig, panel.px - 4.0, panel.py + panel.ph, num(panel.y_min), 9, "end");
    draw_label(fig, panel.px - 4.0, panel.py + 8.0, num(panel.y_max), 9, "end");
    fig.close_group();
}

void draw_polyline(Figure& fig, const Panel& panel, const std::vector<double>& xs,
                   const std::vector<double>& ys, const std::string& color, double width,
                   const std::string& dash) {
    if (xs.size() != ys.size() || xs.empty()) return;
    std::string points;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        points += num(panel.sx(xs[i])) + "," + num(panel.sy(ys[i])) + " ";
    }
    std::string attrs = dash.empty() ? "" : " stroke-dasharray=\"" + dash + "\"";
    fig.raw("<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + num(width) +
            "\"" + attrs + " points=\"" + points + "\"/>");
}

void draw_points(Figure& fig, const Panel& panel, const std::vector<double>& xs,
                 const std::vector<double>& ys, const std::string& color, double radius) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
        fig.raw("<circle cx=\"" + num(panel.sx(xs[i])) + "\" cy=\"" + num(panel.sy(ys[i])) +
                "\" r=\"" + num(radius) + "\" fill=\"" + color + "\"/>");
    }
}

void draw_band(Figure& fig, const Panel& panel, const std::vector<double>& xs,
               const std::vector<double>& lo, const std::vector<double>& hi,
               const std::string& color, double opacity) {
    if (xs.size() != lo.size() || xs.size() != hi.size() || xs.empty()) return;
    std::string points;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        points += num(panel.sx(xs[i])) + "," + num(panel.sy(hi[i])) + " ";
    }
    for (std::size_t i = xs.size(); i > 0; --i) {
        points += num(panel.sx(xs[i - 1])) + "," + num(panel.sy(lo[i - 1])) + " ";
    }
    fig.raw("<polygon fill=\"" + color + "\" fill-opacity=\"" + num(opacity) +
            "\" stroke=\"none\" points=\"" + points + "\"/>");
}

void draw_histogram(Figure& fig, const Panel& panel, const std::vector<double>& edges,
                    const std::vector<double>& counts, const std::string& color, double opacity) {
    for (std::size_t b = 0; b < counts.size(); ++b) {
        if (counts[b] <= 0.0) continue;
        const double x0 = panel.sx(edges[b]);
        const double x1 = panel.sx(edges[b + 1]);
        const double y1 = panel.sy(counts[b]);
        const double y0 = panel.sy(std::max(0.0, panel.y_min));
        fig.raw("<rect x=\"" + num(x0) + "\" y=\"" + num(y1) + "\" width=\"" + num(x1 - x0) +
                "\" height=\"" + num(y0 - y1) + "\" fill=\"" + color + "\" fill-opacity=\"" +
                num(opacity) + "\"/>");
    }
}

void draw_vline(Figure& fig, const Panel& panel, double x, const std::string& color,
                const std::string& dash) {
    const double sx = panel.sx(x);
    std::string attrs = dash.empty() ? "" : " stroke-dasharray=\"" + dash + "\"";
    fig.raw("<line x1=\"" + num(sx) + "\" y1=\"" + num(panel.py) + "\" x2=\"" + num(sx) +
            "\" y2=\"" + num(panel.py + panel.ph) + "\" stroke=\"" + color +
            "\" stroke-width=\"1\"" + attrs + "/>");
}

void draw_bar(Figure& fig, const Panel& panel, double x0, double x1, double y,
              const std::string& color, double opacity) {
    const double sx0 = panel.sx(x0);
    const double sx1 = panel.sx(x1);
    const double sy1 = panel.sy(y);
    const double sy0 = panel.sy(std::max(0.0, panel.y_min));
    const double top = std::min(sy0, sy1);
    const double h = std::fabs(sy0 - sy1);
    fig.raw("<rect x=\"" + num(sx0) + "\" y=\"" + num(top) + "\" width=\"" + num(sx1 - sx0) +
            "\" height=\"" + num(h) + "\" fill=\"" + color + "\" fill-opacity=\"" + num(opacity) +
            "\"/>");
}

void draw_label(Figure& fig, double x, double y, const std::string& text, int font_size,
                const std::string& anchor) {
    fig.raw("<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" +
            std::to_string(font_size) + "\" text-anchor=\"" + anchor + "\">" + xml_escape(text) +
            "</text>");
}

std::vector<double> uniform_edges(double lo, double hi, int bins) {
    if (bins < 1 || !(hi > lo)) throw DataError("uniform_edges: bad range");
    std::vector<double> edges(bins + 1);
    for (int i = 0; i <= bins; ++i) edges[i] = lo + (hi - lo) * i / bins;
    return edges;
}

std::vector<double> bin_counts(const std::vector<double>& values,
                               const std::vector<double>& edges) {
    std::vector<double> counts(edges.size() - 1, 0.0);
    for (double v : values) {
        if (v < edges.front() || v > edges.back()) continue;
        std::size_t b = static_cast<std::size_t>((v - edges.front()) /
                                                 (edges.back() - edges.front()) * counts.size());
        if (b >= counts.size()) b = counts.size() - 1;
        counts[b] += 1.0;
    }
    return counts;
}

}  // namespace metacal::svg
