#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "riddle/dynamics.hpp"
#include "riddle/errors.hpp"
#include "riddle/thermo.hpp"

namespace riddle::config {

// TOML subset: [section] headers, key = value lines, values are strings,
// numbers, booleans or single-line homogeneous arrays, # comments.
struct TomlValue {
    enum class Kind { String, Number, Boolean, Array } kind = Kind::Number;
    std::string str;
    double num = 0;
    bool integer = false; // number was written without . or exponent
    bool boolean = false;
    std::vector<TomlValue> array;

    static TomlValue of_string(std::string s);
    static TomlValue of_number(double v, bool as_integer = false);
    static TomlValue of_bool(bool b);

    bool operator==(const TomlValue& o) const;
};

struct TomlEntry {
    std::string key;
    TomlValue value;
};

struct TomlSection {
    std::string name;
    std::vector<TomlEntry> entries;
};

class TomlDocument {
public:
    static TomlDocument parse(const std::string& text);
    static TomlDocument parse_file(const std::string& path);
    std::string serialize() const;

    const TomlValue* find(const std::string& section, const std::string& key) const;
    void set(const std::string& section, const std::string& key, TomlValue v);

    double get_double(const std::string& s, const std::string& k, double def) const;
    long get_long(const std::string& s, const std::string& k, long def) const;
    bool get_bool(const std::string& s, const std::string& k, bool def) const;
    std::string get_string(const std::string& s, const std::string& k,
                           const std::string& def) const;
    std::vector<double> get_doubles(const std::string& s, const std::string& k,
                                    std::vector<double> def) const;
    std::vector<std::string> get_strings(const std::string& s, const std::string& k,
                                         std::vector<std::string> def) const;

    const std::vector<TomlSection>& sections() const { return sections_; }
    bool operator==(const TomlDocument& o) const;

private:
    std::vector<TomlSection> sections_;
    TomlSection* section(const std::string& name, bool create);
    const TomlSection* section(const std::string& name) const;
};

// Parsed run configuration; builders construct the dynamical objects.
struct RunConfig {
    TomlDocument doc;
    std::string content_hash;

    // [map]
    std::string builtin = "doubling";
    std::vector<double> partition;
    std::vector<std::string> branches, derivatives;

    // [skew]
    std::vector<std::string> f_formulas{"(2 + sin(2*pi*x))/5"};
    std::vector<std::string> lambda_formulas{"4/5 + cos(2*pi*x)/4"};
    double alpha = 1.0;

    // [potential]
    bool potential_srb = true;
    std::string potential_formula;

    // [discretization]
    thermo::DiscSpec disc{thermo::DiscMethod::Collocation, 256};
    int cross_check_n = 0; // Ulam size for two-method gates; 0 = skip

    // [run]
    std::uint64_t seed = 20260810;
    std::string output_dir = "out";
    long streams = 64;
    int threads = 0;
    std::string sampler = "auto"; // auto | lebesgue | ulam

    // [check]
    std::vector<double> zeta_orbit;

    // [graph]
    int graph_nx = 512;
    double graph_tol = 1e-9;
    long graph_max_terms = 4000;
    std::vector<double> graph_points;

    // [basin]
    double basin_x_lo = 0, basin_x_hi = 1, basin_t_lo = 0, basin_t_hi = 12;
    int basin_nx = 512, basin_nt = 512;
    long basin_max_iter = 2000;
    double basin_escape = 0;

    // [loynes]
    long tail_samples = 10000000;
    std::vector<double> m_grid{4, 8, 16, 32, 64, 128, 256, 512};
    long tail_max_terms = 3000;

    // [stability]
    std::vector<std::string> points{"typical:+1"};
    double r_hi = 1e-2, r_lo = 1e-4;
    int n_scales = 8;
    long n_per_r = 1000000;
    long stability_max_iter = 2000;

    // [spectrum]
    double q_min = -4.0;
    double q_max_offset = 0.05; // grid ends at q* - offset
    int n_q = 81;

    // [pressure]
    std::vector<double> s_grid{0, 0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4};

    static RunConfig load(const std::string& path);
    static RunConfig parse(const std::string& text);

    dynamics::IntervalMap build_map() const;
    dynamics::SkewProduct build_skew() const;
    thermo::PotentialTerm raw_potential() const; // before normalisation
};

} // namespace riddle::config
