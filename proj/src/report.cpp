#include "riddle/report.hpp"

#include <cmath>
#include <cstdio>

namespace riddle::config {

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

// fixed-precision coordinate formatting keeps SVG output reproducible
std::string coord(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

} // namespace

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& comments,
                     const std::vector<std::string>& header)
    : out_(path), width_(header.size()), path_(path) {
    if (!out_) throw IoError("cannot open for writing: " + path);
    for (const auto& c : comments) out_ << "# " << c << "\n";
    for (std::size_t i = 0; i < header.size(); ++i)
        out_ << header[i] << (i + 1 < header.size() ? "," : "\n");
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_)
        throw IoError("csv row width mismatch in " + path_);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::string& c = cells[i];
        bool quote = c.find_first_of(",\"\n") != std::string::npos;
        if (quote) {
            out_ << '"';
            for (char ch : c) {
                if (ch == '"') out_ << '"';
                out_ << ch;
            }
            out_ << '"';
        } else {
            out_ << c;
        }
        out_ << (i + 1 < cells.size() ? "," : "\n");
    }
}

void CsvWriter::close() {
    out_.flush();
    if (!out_) throw IoError("write failure on " + path_);
    out_.close();
}

SvgWriter::SvgWriter(double width, double height) : width_(width), height_(height) {}

void SvgWriter::rect(double x, double y, double w, double h, const std::string& fill) {
    body_ += "<rect x=\"" + coord(x) + "\" y=\"" + coord(y) + "\" width=\"" + coord(w) +
             "\" height=\"" + coord(h) + "\" fill=\"" + fill + "\"/>\n";
}

void SvgWriter::polyline(const std::vector<std::pair<double, double>>& pts,
                         const std::string& stroke, double stroke_width) {
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
             coord(stroke_width) + "\" points=\"";
    for (const auto& [x, y] : pts) body_ += coord(x) + "," + coord(y) + " ";
    body_ += "\"/>\n";
}

void SvgWriter::line(double x1, double y1, double x2, double y2,
                     const std::string& stroke, double stroke_width) {
    body_ += "<line x1=\"" + coord(x1) + "\" y1=\"" + coord(y1) + "\" x2=\"" + coord(x2) +
             "\" y2=\"" + coord(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
             coord(stroke_width) + "\"/>\n";
}

void SvgWriter::text(double x, double y, const std::string& s, double size) {
    body_ += "<text x=\"" + coord(x) + "\" y=\"" + coord(y) + "\" font-size=\"" +
             coord(size) + "\" font-family=\"sans-serif\">" + s + "</text>\n";
}

void SvgWriter::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
        << coord(width_) << "\" height=\"" << coord(height_) << "\" viewBox=\"0 0 "
        << coord(width_) << " " << coord(height_) << "\">\n"
        << body_ << "</svg>\n";
    if (!out) throw IoError("write failure on " + path);
}

} // namespace riddle::config
