#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "riddle/errors.hpp"

namespace riddle::config {

std::string format_full(double v); // round-trip exact, %.17g

// RFC-4180-compatible rows under #-prefixed metadata comment lines
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& comments,
              const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);
    void close();

private:
    std::ofstream out_;
    std::size_t width_;
    std::string path_;
};

// Minimal SVG 1.1 writer: filled rectangles and polylines only, so output
// is dependency-free and bit-reproducible.
class SvgWriter {
public:
    SvgWriter(double width, double height);

    void rect(double x, double y, double w, double h, const std::string& fill);
    void polyline(const std::vector<std::pair<double, double>>& pts,
                  const std::string& stroke, double stroke_width = 1.0);
    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double stroke_width = 1.0);
    void text(double x, double y, const std::string& s, double size = 12.0);

    void save(const std::string& path) const;

private:
    double width_, height_;
    std::string body_;
};

} // namespace riddle::config
