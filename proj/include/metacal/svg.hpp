#pragma once

#include <string>
#include <vector>

namespace metacal::svg {

// Deterministic SVG assembly for the report figures. Figures are
// self-contained; the plotted data tables ride along as comments so
// artifacts stay diffable.
class Figure {
public:
    Figure(double width, double height);

    void comment(const std::string& text);
    void raw(const std::string& element);
    void open_group(const std::string& id);
    void close_group();
    std::string finish() const;

    double width() const { return width_; }
    double height() const { return height_; }

private:
    double width_, height_;
    std::string body_;
};

// Maps data coordinates onto a pixel rectangle. x may be log-scaled.
struct Panel {
    double px = 0, py = 0, pw = 100, ph = 100;  // pixel box of the plot area
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    bool log_x = false;

    double sx(double x) const;
    double sy(double y) const;
};

void draw_frame(Figure& fig, const Panel& panel, const std::string& id, const std::string& title,
                const std::string& x_label, const std::string& y_label);
void draw_polyline(Figure& fig, const Panel& panel, const std::vector<double>& xs,
                   const std::vector<double>& ys, const std::string& color, double width,
                   const std::string& dash = "");
void draw_points(Figure& fig, const Panel& panel, const std::vector<double>& xs,
                 const std::vector<double>& ys, const std::string& color, double radius);
void draw_band(Figure& fig, const Panel& panel, const std::vector<double>& xs,
               const std::vector<double>& lo, const std::vector<double>& hi,
               const std::string& color, double opacity);
void draw_histogram(Figure& fig, const Panel& panel, const std::vector<double>& edges,
                    const std::vector<double>& counts, const std::string& color, double opacity);
void draw_vline(Figure& fig, const Panel& panel, double x, const std::string& color,
                const std::string& dash = "");
void draw_bar(Figure& fig, const Panel& panel, double x0, double x1, double y,
              const std::string& color, double opacity = 1.0);
void draw_label(Figure& fig, double x, double y, const std::string& text, int font_size = 10,
                const std::string& anchor = "start");

// Shared histogram binning.
std::vector<double> uniform_edges(double lo, double hi, int bins);
std::vector<double> bin_counts(const std::vector<double>& values, const std::vector<double>& edges);

}  // namespace metacal::svg
