#include "riddle/tomlconf.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace riddle::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// strip a trailing comment that is not inside a string
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
        if (c == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

std::string format_number(double v, bool integer) {
    char buf[40];
    if (integer && v == static_cast<double>(static_cast<long long>(v)))
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
    else
        std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

TomlValue parse_scalar(const std::string& text);

TomlValue parse_value(const std::string& text) {
    std::string t = trim(text);
    if (t.empty()) throw ConfigError("empty value");
    if (t.front() == '[') {
        if (t.back() != ']') throw ConfigError("unterminated array: " + t);
        TomlValue v;
        v.kind = TomlValue::Kind::Array;
        std::string inner = t.substr(1, t.size() - 2);
        std::string item;
        bool in_string = false;
        for (std::size_t i = 0; i <= inner.size(); ++i) {
            char c = i < inner.size() ? inner[i] : ',';
            if (i < inner.size() && c == '"' && (i == 0 || inner[i - 1] != '\\'))
                in_string = !in_string;
            if (c == ',' && !in_string) {
                std::string it = trim(item);
                if (!it.empty()) v.array.push_back(parse_scalar(it));
                item.clear();
            } else {
                item += c;
            }
        }
        return v;
    }
    return parse_scalar(t);
}

TomlValue parse_scalar(const std::string& text) {
    std::string t = trim(text);
    if (t.empty()) throw ConfigError("empty scalar");
    if (t.front() == '"') {
        if (t.size() < 2 || t.back() != '"')
            throw ConfigError("unterminated string: " + t);
        TomlValue v;
        v.kind = TomlValue::Kind::String;
        for (std::size_t i = 1; i + 1 < t.size(); ++i) {
            if (t[i] == '\\' && i + 2 < t.size()) {
                ++i;
                v.str += t[i];
            } else {
                v.str += t[i];
            }
        }
        return v;
    }
    if (t == "true" || t == "false") return TomlValue::of_bool(t == "true");

    TomlValue v;
    v.kind = TomlValue::Kind::Number;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    auto res = std::from_chars(begin, end, v.num);
    if (res.ec != std::errc() || res.ptr != end)
        throw ConfigError("malformed value: " + t);
    v.integer = t.find_first_of(".eE") == std::string::npos;
    return v;
}

bool builtin_name_ok(const std::string& name) {
    if (name == "doubling") return true;
    if (name.rfind("linear-", 0) == 0 && name.size() > 7) {
        for (std::size_t i = 7; i < name.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(name[i]))) return false;
        return true;
    }
    return false;
}

} // namespace

TomlValue TomlValue::of_string(std::string s) {
    TomlValue v;
    v.kind = Kind::String;
    v.str = std::move(s);
    return v;
}

TomlValue TomlValue::of_number(double x, bool as_integer) {
    TomlValue v;
    v.kind = Kind::Number;
    v.num = x;
    v.integer = as_integer;
    return v;
}

TomlValue TomlValue::of_bool(bool b) {
    TomlValue v;
    v.kind = Kind::Boolean;
    v.boolean = b;
    return v;
}

bool TomlValue::operator==(const TomlValue& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
    case Kind::String: return str == o.str;
    case Kind::Number: return num == o.num && integer == o.integer;
    case Kind::Boolean: return boolean == o.boolean;
    case Kind::Array: return array == o.array;
    }
    return false;
}

TomlDocument TomlDocument::parse(const std::string& text) {
    TomlDocument doc;
    std::istringstream in(text);
    std::string line;
    std::string current; // root section is ""
    doc.sections_.push_back({"", {}});
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(strip_comment(line));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": unterminated section header");
            current = trim(t.substr(1, t.size() - 2));
            doc.section(current, true);
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        TomlValue v;
        try {
            v = parse_value(t.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
        doc.section(current, true)->entries.push_back({key, std::move(v)});
    }
    return doc;
}

TomlDocument TomlDocument::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

namespace {

void serialize_value(const TomlValue& v, std::string& out) {
    switch (v.kind) {
    case TomlValue::Kind::String:
        out += '"';
        for (char c : v.str) {
            if (c == '"' || c == '\\') out += '\\';
            out += c;
        }
        out += '"';
        return;
    case TomlValue::Kind::Number:
        out += format_number(v.num, v.integer);
        return;
    case TomlValue::Kind::Boolean:
        out += v.boolean ? "true" : "false";
        return;
    case TomlValue::Kind::Array:
        out += '[';
        for (std::size_t i = 0; i < v.array.size(); ++i) {
            if (i) out += ", ";
            serialize_value(v.array[i], out);
        }
        out += ']';
        return;
    }
}

} // namespace

std::string TomlDocument::serialize() const {
    std::string out;
    for (const auto& sec : sections_) {
        if (sec.name.empty() && sec.entries.empty()) continue;
        if (!sec.name.empty()) {
            if (!out.empty()) out += '\n';
            out += '[' + sec.name + "]\n";
        }
        for (const auto& e : sec.entries) {
            out += e.key + " = ";
            serialize_value(e.value, out);
            out += '\n';
        }
    }
    return out;
}

TomlSection* TomlDocument::section(const std::string& name, bool create) {
    for (auto& s : sections_)
        if (s.name == name) return &s;
    if (!create) return nullptr;
    sections_.push_back({name, {}});
    return &sections_.back();
}

const TomlSection* TomlDocument::section(const std::string& name) const {
    for (const auto& s : sections_)
        if (s.name == name) return &s;
    return nullptr;
}

const TomlValue* TomlDocument::find(const std::string& sec, const std::string& key) const {
    const TomlSection* s = section(sec);
    if (!s) return nullptr;
    for (const auto& e : s->entries)
        if (e.key == key) return &e.value;
    return nullptr;
}

void TomlDocument::set(const std::string& sec, const std::string& key, TomlValue v) {
    TomlSection* s = section(sec, true);
    for (auto& e : s->entries)
        if (e.key == key) {
            e.value = std::move(v);
            return;
        }
    s->entries.push_back({key, std::move(v)});
}

double TomlDocument::get_double(const std::string& s, const std::string& k,
                                double def) const {
    const TomlValue* v = find(s, k);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::Number)
        throw ConfigError("[" + s + "] " + k + " must be a number");
    return v->num;
}

long TomlDocument::get_long(const std::string& s, const std::string& k, long def) const {
    const TomlValue* v = find(s, k);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::Number)
        throw ConfigError("[" + s + "] " + k + " must be a number");
    return static_cast<long>(v->num);
}

bool TomlDocument::get_bool(const std::string& s, const std::string& k, bool def) const {
    const TomlValue* v = find(s, k);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::Boolean)
        throw ConfigError("[" + s + "] " + k + " must be a boolean");
    return v->boolean;
}

std::string TomlDocument::get_string(const std::string& s, const std::string& k,
                                     const std::string& def) const {
    const TomlValue* v = find(s, k);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::String)
        throw ConfigError("[" + s + "] " + k + " must be a string");
    return v->str;
}

std::vector<double> TomlDocument::get_doubles(const std::string& s, const std::string& k,
                                              std::vector<double> def) const {
    const TomlValue* v = find(s, k);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::Array)
        throw ConfigError("[" + s + "] " + k + " must be an array");
    std::vector<double> out;
    for (const auto& e : v->array) {
        if (e.kind != TomlValue::Kind::Number)
            throw ConfigError("[" + s + "] " + k + " must hold numbers");
        out.push_back(e.num);
    }
    return out;
}

std::vector<std::string> TomlDocument::get_strings(const std::string& s,
                                                   const std::string& k,
                                                   std::vector<std::string> def) const {
    const TomlValue* v = find(s, k);
    if (!v) return def;
    if (v->kind == TomlValue::Kind::String) return {v->str};
    if (v->kind != TomlValue::Kind::Array)
        throw ConfigError("[" + s + "] " + k + " must be a string or string array");
    std::vector<std::string> out;
    for (const auto& e : v->array) {
        if (e.kind != TomlValue::Kind::String)
            throw ConfigError("[" + s + "] " + k + " must hold strings");
        out.push_back(e.str);
    }
    return out;
}

bool TomlDocument::operator==(const TomlDocument& o) const {
    // data-level equality, ignoring empty root sections
    auto nonempty = [](const std::vector<TomlSection>& v) {
        std::vector<const TomlSection*> out;
        for (const auto& s : v)
            if (!(s.name.empty() && s.entries.empty())) out.push_back(&s);
        return out;
    };
    auto a = nonempty(sections_), b = nonempty(o.sections_);
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i]->name != b[i]->name) return false;
        if (a[i]->entries.size() != b[i]->entries.size()) return false;
        for (std::size_t j = 0; j < a[i]->entries.size(); ++j) {
            if (a[i]->entries[j].key != b[i]->entries[j].key) return false;
            if (!(a[i]->entries[j].value == b[i]->entries[j].value)) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// RunConfig

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig cfg;
    cfg.doc = TomlDocument::parse(text);
    const TomlDocument& d = cfg.doc;
    cfg.content_hash = thermo::content_hash(d.serialize());

    cfg.builtin = d.get_string("map", "builtin", "");
    cfg.partition = d.get_doubles("map", "partition", {});
    cfg.branches = d.get_strings("map", "branches", {});
    cfg.derivatives = d.get_strings("map", "derivatives", {});
    if (cfg.builtin.empty() && cfg.branches.empty()) cfg.builtin = "doubling";
    if (!cfg.builtin.empty() && !cfg.branches.empty())
        throw ConfigError("[map] give either builtin or explicit branches, not both");
    if (!cfg.builtin.empty() && !builtin_name_ok(cfg.builtin))
        throw ConfigError("unknown builtin map: " + cfg.builtin);
    if (!cfg.partition.empty()) {
        for (std::size_t i = 0; i + 1 < cfg.partition.size(); ++i)
            if (!(cfg.partition[i] < cfg.partition[i + 1]))
                throw ConfigError("[map] partition must be sorted increasing");
        if (cfg.partition.front() != 0.0 || cfg.partition.back() != 1.0)
            throw ConfigError("[map] partition must span [0,1]");
    }

    cfg.f_formulas = d.get_strings("skew", "f", cfg.f_formulas);
    cfg.lambda_formulas = d.get_strings("skew", "lambda", cfg.lambda_formulas);
    cfg.alpha = d.get_double("skew", "alpha", 1.0);

    std::string kind = d.get_string("potential", "kind", "srb");
    if (kind == "srb") {
        cfg.potential_srb = true;
    } else if (kind == "custom") {
        cfg.potential_srb = false;
        cfg.potential_formula = d.get_string("potential", "formula", "");
        if (cfg.potential_formula.empty())
            throw ConfigError("[potential] custom kind needs a formula");
    } else {
        throw ConfigError("[potential] kind must be srb or custom");
    }

    std::string method = d.get_string("discretization", "method", "collocation");
    if (method == "collocation")
        cfg.disc.method = thermo::DiscMethod::Collocation;
    else if (method == "ulam")
        cfg.disc.method = thermo::DiscMethod::Ulam;
    else
        throw ConfigError("[discretization] method must be collocation or ulam");
    cfg.disc.n = static_cast<int>(d.get_long("discretization", "n", 256));
    cfg.cross_check_n = static_cast<int>(d.get_long("discretization", "cross_check_n", 0));

    cfg.seed = static_cast<std::uint64_t>(d.get_long("run", "seed", 20260810));
    cfg.output_dir = d.get_string("run", "output_dir", "out");
    cfg.streams = d.get_long("run", "streams", 64);
    cfg.threads = static_cast<int>(d.get_long("run", "threads", 0));
    cfg.sampler = d.get_string("run", "sampler", "auto");
    if (cfg.sampler != "auto" && cfg.sampler != "lebesgue" && cfg.sampler != "ulam")
        throw ConfigError("[run] sampler must be auto, lebesgue or ulam");

    cfg.zeta_orbit = d.get_doubles("check", "zeta_orbit", {});

    cfg.graph_nx = static_cast<int>(d.get_long("graph", "nx", 512));
    cfg.graph_tol = d.get_double("graph", "tol", 1e-9);
    cfg.graph_max_terms = d.get_long("graph", "max_terms", 4000);
    cfg.graph_points = d.get_doubles("graph", "points", {});

    auto xr = d.get_doubles("basin", "x_range", {0, 1});
    auto trange = d.get_doubles("basin", "t_range", {0, 12});
    if (xr.size() != 2 || trange.size() != 2)
        throw ConfigError("[basin] x_range and t_range need two entries");
    cfg.basin_x_lo = xr[0];
    cfg.basin_x_hi = xr[1];
    cfg.basin_t_lo = trange[0];
    cfg.basin_t_hi = trange[1];
    cfg.basin_nx = static_cast<int>(d.get_long("basin", "nx", 512));
    cfg.basin_nt = static_cast<int>(d.get_long("basin", "nt", 512));
    cfg.basin_max_iter = d.get_long("basin", "max_iter", 2000);
    cfg.basin_escape = d.get_double("basin", "escape_threshold", 0);

    cfg.tail_samples = d.get_long("loynes", "n_samples", 10000000);
    cfg.m_grid = d.get_doubles("loynes", "m_grid", cfg.m_grid);
    cfg.tail_max_terms = d.get_long("loynes", "max_terms", 3000);

    cfg.points = d.get_strings("stability", "points", cfg.points);
    cfg.r_hi = d.get_double("stability", "r_hi", 1e-2);
    cfg.r_lo = d.get_double("stability", "r_lo", 1e-4);
    cfg.n_scales = static_cast<int>(d.get_long("stability", "n_scales", 8));
    cfg.n_per_r = d.get_long("stability", "n_per_r", 1000000);
    cfg.stability_max_iter = d.get_long("stability", "max_iter", 2000);

    cfg.q_min = d.get_double("spectrum", "q_min", -4.0);
    cfg.q_max_offset = d.get_double("spectrum", "q_max_offset", 0.05);
    cfg.n_q = static_cast<int>(d.get_long("spectrum", "n_q", 81));

    cfg.s_grid = d.get_doubles("pressure", "s_grid", cfg.s_grid);
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

dynamics::IntervalMap RunConfig::build_map() const {
    if (!branches.empty()) {
        if (partition.empty())
            throw ConfigError("[map] explicit branches need a partition");
        return dynamics::IntervalMap::from_formulas(partition, branches, derivatives);
    }
    if (builtin == "doubling") return dynamics::IntervalMap::doubling();
    return dynamics::IntervalMap::linear(std::stoi(builtin.substr(7)));
}

dynamics::SkewProduct RunConfig::build_skew() const {
    return dynamics::SkewProduct(build_map(),
                                 dynamics::FibreFunction::per_interval(f_formulas),
                                 dynamics::FibreFunction::per_interval(lambda_formulas),
                                 alpha);
}

thermo::PotentialTerm RunConfig::raw_potential() const {
    if (potential_srb) return thermo::PotentialTerm::srb();
    return thermo::PotentialTerm::custom(expr::Expression::parse(potential_formula));
}

} // namespace riddle::config
