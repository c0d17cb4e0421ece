#pragma once

// Run configuration: a TOML subset (bare keys, strings, booleans, numbers,
// numeric arrays, one level of inline tables, # comments).

#include "step_system.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stepiem::config {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Value {
    enum class Type { boolean, integer, real, string, array, table };
    Type type = Type::integer;
    bool b = false;
    long long i = 0;
    double d = 0.0;
    std::string s;
    std::vector<double> arr;
    std::vector<std::pair<std::string, Value>> tbl;

    static Value of_bool(bool v) { Value x; x.type = Type::boolean; x.b = v; return x; }
    static Value of_int(long long v) { Value x; x.type = Type::integer; x.i = v; return x; }
    static Value of_real(double v) { Value x; x.type = Type::real; x.d = v; return x; }
    static Value of_string(std::string v) { Value x; x.type = Type::string; x.s = std::move(v); return x; }
    static Value of_array(std::vector<double> v) { Value x; x.type = Type::array; x.arr = std::move(v); return x; }
    static Value of_table(std::vector<std::pair<std::string, Value>> v) {
        Value x;
        x.type = Type::table;
        x.tbl = std::move(v);
        return x;
    }

    bool operator==(const Value& o) const {
        if (type != o.type) return false;
        switch (type) {
            case Type::boolean: return b == o.b;
            case Type::integer: return i == o.i;
            case Type::real: return d == o.d;
            case Type::string: return s == o.s;
            case Type::array: return arr == o.arr;
            case Type::table: return tbl == o.tbl;
        }
        return false;
    }

    double number() const {
        if (type == Type::integer) return double(i);
        if (type == Type::real) return d;
        throw ConfigError("expected a number");
    }

    const Value* find(const std::string& key) const {
        for (const auto& [k, v] : tbl)
            if (k == key) return &v;
        return nullptr;
    }
};

/// Ordered key -> value document.
using Document = std::vector<std::pair<std::string, Value>>;

inline std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    std::string s = buf;
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

namespace detail {

class Parser {
public:
    Parser(const std::string& text, int line) : t_(text), line_(line) {}

    std::pair<std::string, Value> key_value() {
        skip();
        std::string k = key();
        skip();
        expect('=');
        Value v = value(true);
        skip();
        if (pos_ < t_.size() && t_[pos_] != '#') fail("unexpected text after value");
        return {k, v};
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("line " + std::to_string(line_) + ": " + what);
    }

    void skip() {
        while (pos_ < t_.size() && (t_[pos_] == ' ' || t_[pos_] == '\t' || t_[pos_] == '\r')) ++pos_;
    }

    void expect(char c) {
        skip();
        if (pos_ >= t_.size() || t_[pos_] != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string key() {
        std::size_t b = pos_;
        while (pos_ < t_.size() && (std::isalnum(static_cast<unsigned char>(t_[pos_])) || t_[pos_] == '_' || t_[pos_] == '-'))
            ++pos_;
        if (b == pos_) fail("expected a key");
        return t_.substr(b, pos_ - b);
    }

    Value value(bool allow_table) {
        skip();
        if (pos_ >= t_.size()) fail("missing value");
        char c = t_[pos_];
        if (c == '"') return Value::of_string(string());
        if (c == '[') return Value::of_array(array());
        if (c == '{') {
            if (!allow_table) fail("nested tables are not supported");
            return table();
        }
        if (t_.compare(pos_, 4, "true") == 0) {
            pos_ += 4;
            return Value::of_bool(true);
        }
        if (t_.compare(pos_, 5, "false") == 0) {
            pos_ += 5;
            return Value::of_bool(false);
        }
        return number();
    }

    std::string string() {
        ++pos_;
        std::string out;
        while (pos_ < t_.size() && t_[pos_] != '"') {
            char c = t_[pos_++];
            if (c == '\\') {
                if (pos_ >= t_.size()) break;
                char e = t_[pos_++];
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: fail(std::string("unknown escape \\") + e);
                }
            } else {
                out += c;
            }
        }
        if (pos_ >= t_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }

    Value number() {
        std::size_t b = pos_;
        while (pos_ < t_.size() && std::string("+-0123456789.eEinfa_").find(t_[pos_]) != std::string::npos) ++pos_;
        std::string tok = t_.substr(b, pos_ - b);
        std::string clean;
        for (char c : tok)
            if (c != '_') clean += c;
        if (clean.empty()) fail("expected a value");
        const char* first = clean.c_str() + (clean[0] == '+' ? 1 : 0);
        const char* last = clean.c_str() + clean.size();
        bool real = clean.find_first_of(".eEn") != std::string::npos;
        if (!real) {
            long long v = 0;
            auto [p, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || p != last) fail("bad integer '" + tok + "'");
            return Value::of_int(v);
        }
        double v = 0.0;
        auto [p, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || p != last) fail("bad number '" + tok + "'");
        return Value::of_real(v);
    }

    std::vector<double> array() {
        ++pos_;
        std::vector<double> out;
        skip();
        if (pos_ < t_.size() && t_[pos_] == ']') {
            ++pos_;
            return out;
        }
        for (;;) {
            Value v = value(false);
            if (v.type != Value::Type::integer && v.type != Value::Type::real) fail("arrays hold numbers only");
            out.push_back(v.number());
            skip();
            if (pos_ < t_.size() && t_[pos_] == ',') {
                ++pos_;
                continue;
            }
            expect(']');
            return out;
        }
    }

    Value table() {
        ++pos_;
        std::vector<std::pair<std::string, Value>> out;
        skip();
        if (pos_ < t_.size() && t_[pos_] == '}') {
            ++pos_;
            return Value::of_table(out);
        }
        for (;;) {
            skip();
            std::string k = key();
            expect('=');
            for (const auto& kv : out)
                if (kv.first == k) fail("duplicate key '" + k + "'");
            out.emplace_back(k, value(false));
            skip();
            if (pos_ < t_.size() && t_[pos_] == ',') {
                ++pos_;
                continue;
            }
            expect('}');
            return Value::of_table(out);
        }
    }

    const std::string& t_;
    int line_;
    std::size_t pos_ = 0;
};

inline std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        if (c == '\t') {
            out += "\\t";
            continue;
        }
        out += c;
    }
    return out + "\"";
}

}  // namespace detail

inline std::string format_value(const Value& v) {
    switch (v.type) {
        case Value::Type::boolean: return v.b ? "true" : "false";
        case Value::Type::integer: return std::to_string(v.i);
        case Value::Type::real: return format_real(v.d);
        case Value::Type::string: return detail::quote(v.s);
        case Value::Type::array: {
            std::string out = "[";
            for (std::size_t k = 0; k < v.arr.size(); ++k) out += (k ? ", " : "") + format_real(v.arr[k]);
            return out + "]";
        }
        case Value::Type::table: {
            std::string out = "{ ";
            for (std::size_t k = 0; k < v.tbl.size(); ++k)
                out += (k ? ", " : "") + v.tbl[k].first + " = " + format_value(v.tbl[k].second);
            return out + " }";
        }
    }
    return "";
}

inline void set(Document& doc, const std::string& key, Value v) {
    for (auto& kv : doc)
        if (kv.first == key) {
            kv.second = std::move(v);
            return;
        }
    doc.emplace_back(key, std::move(v));
}

inline const Value* find(const Document& doc, const std::string& key) {
    for (const auto& kv : doc)
        if (kv.first == key) return &kv.second;
    return nullptr;
}

inline Document parse(const std::string& text) {
    Document doc;
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        if (line[b] == '[') throw ConfigError("line " + std::to_string(n) + ": section headers are not supported");
        auto kv = detail::Parser(line, n).key_value();
        if (find(doc, kv.first)) throw ConfigError("line " + std::to_string(n) + ": duplicate key '" + kv.first + "'");
        doc.push_back(std::move(kv));
    }
    return doc;
}

/// Applies a "key=value" override; the value uses the file syntax.
inline void apply_override(Document& doc, const std::string& assignment) {
    if (assignment.find('=') == std::string::npos) throw ConfigError("override must look like key=value");
    auto kv = detail::Parser(assignment, 0).key_value();
    set(doc, kv.first, std::move(kv.second));
}

inline std::string serialize(const Document& doc) {
    std::string out;
    for (const auto& [k, v] : doc) out += k + " = " + format_value(v) + "\n";
    return out;
}

struct PotentialSpec {
    std::string kind = "lo";  ///< "lo", "quartic" or "exponential"
    double param = 1.0;       ///< omega for "lo", a otherwise

    bool operator==(const PotentialSpec&) const = default;
};

struct RunConfig {
    PotentialSpec potential1, potential2;
    double q1_wall = -0.5, q2_wall = -0.5;
    std::optional<double> h, e1, e2;
    std::vector<double> h_grid;  ///< classify; defaults to {h}

    double theta1_0 = 0.0, theta2_0 = 0.5;
    long long n_returns = 100;
    bool trajectory = false;
    double trajectory_dt = 0.0;  ///< > 0 adds evenly spaced flow samples to the dump

    long long grid_size = 200;
    long long n_samples = 200, n_iterates = 500;
    std::string special = "chi2-integer";
    long long n_max = 7, max_hits = 50;
    std::vector<double> eta;  ///< near-threshold offsets for the tables command

    long long seed = 1;
    long long workers = 0;  ///< 0 = available parallelism
    bool quadrature_check = false;
    bool svg = false;

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline Value potential_value(const PotentialSpec& p) {
    return Value::of_table({{"kind", Value::of_string(p.kind)},
                            {p.kind == "lo" ? "omega" : "a", Value::of_real(p.param)}});
}

inline PotentialSpec potential_spec(const std::string& key, const Value& v) {
    if (v.type != Value::Type::table) throw ConfigError(key + " must be an inline table like { kind = \"lo\", omega = 1.0 }");
    PotentialSpec p;
    const Value* kind = v.find("kind");
    if (!kind || kind->type != Value::Type::string) throw ConfigError(key + ": missing kind");
    p.kind = kind->s;
    const char* pname = nullptr;
    if (p.kind == "lo")
        pname = "omega";
    else if (p.kind == "quartic" || p.kind == "exponential")
        pname = "a";
    else
        throw ConfigError(key + ": unknown potential kind '" + p.kind + "'");
    for (const auto& [k, _] : v.tbl)
        if (k != "kind" && k != pname) throw ConfigError(key + ": unexpected field '" + k + "'");
    const Value* par = v.find(pname);
    if (!par) throw ConfigError(key + ": missing " + pname);
    p.param = par->number();
    if (!(p.param > 0.0) || !std::isfinite(p.param)) throw ConfigError(key + ": " + pname + " must be positive");
    return p;
}

}  // namespace detail

inline Document to_document(const RunConfig& c) {
    Document d;
    d.emplace_back("potential1", detail::potential_value(c.potential1));
    d.emplace_back("potential2", detail::potential_value(c.potential2));
    d.emplace_back("q1_wall", Value::of_real(c.q1_wall));
    d.emplace_back("q2_wall", Value::of_real(c.q2_wall));
    if (c.h) d.emplace_back("h", Value::of_real(*c.h));
    if (c.e1) d.emplace_back("e1", Value::of_real(*c.e1));
    if (c.e2) d.emplace_back("e2", Value::of_real(*c.e2));
    if (!c.h_grid.empty()) d.emplace_back("h_grid", Value::of_array(c.h_grid));
    d.emplace_back("theta1_0", Value::of_real(c.theta1_0));
    d.emplace_back("theta2_0", Value::of_real(c.theta2_0));
    d.emplace_back("n_returns", Value::of_int(c.n_returns));
    d.emplace_back("trajectory", Value::of_bool(c.trajectory));
    d.emplace_back("trajectory_dt", Value::of_real(c.trajectory_dt));
    d.emplace_back("grid_size", Value::of_int(c.grid_size));
    d.emplace_back("n_samples", Value::of_int(c.n_samples));
    d.emplace_back("n_iterates", Value::of_int(c.n_iterates));
    d.emplace_back("special", Value::of_string(c.special));
    d.emplace_back("n_max", Value::of_int(c.n_max));
    d.emplace_back("max_hits", Value::of_int(c.max_hits));
    if (!c.eta.empty()) d.emplace_back("eta", Value::of_array(c.eta));
    d.emplace_back("seed", Value::of_int(c.seed));
    d.emplace_back("workers", Value::of_int(c.workers));
    d.emplace_back("quadrature_check", Value::of_bool(c.quadrature_check));
    d.emplace_back("svg", Value::of_bool(c.svg));
    return d;
}

inline RunConfig from_document(const Document& doc) {
    RunConfig c;
    auto real = [](const std::string& k, const Value& v) {
        try {
            return v.number();
        } catch (const ConfigError&) {
            throw ConfigError(k + " must be a number");
        }
    };
    auto integer = [](const std::string& k, const Value& v) {
        if (v.type != Value::Type::integer) throw ConfigError(k + " must be an integer");
        return v.i;
    };
    auto boolean = [](const std::string& k, const Value& v) {
        if (v.type != Value::Type::boolean) throw ConfigError(k + " must be true or false");
        return v.b;
    };
    auto array = [](const std::string& k, const Value& v) {
        if (v.type == Value::Type::array) return v.arr;
        if (v.type == Value::Type::integer || v.type == Value::Type::real) return std::vector<double>{v.number()};
        throw ConfigError(k + " must be a numeric array");
    };
    for (const auto& [k, v] : doc) {
        if (k == "potential1") c.potential1 = detail::potential_spec(k, v);
        else if (k == "potential2") c.potential2 = detail::potential_spec(k, v);
        else if (k == "q1_wall") c.q1_wall = real(k, v);
        else if (k == "q2_wall") c.q2_wall = real(k, v);
        else if (k == "h") c.h = real(k, v);
        else if (k == "e1") c.e1 = real(k, v);
        else if (k == "e2") c.e2 = real(k, v);
        else if (k == "h_grid") c.h_grid = array(k, v);
        else if (k == "theta1_0") c.theta1_0 = real(k, v);
        else if (k == "theta2_0") c.theta2_0 = real(k, v);
        else if (k == "n_returns") c.n_returns = integer(k, v);
        else if (k == "trajectory") c.trajectory = boolean(k, v);
        else if (k == "trajectory_dt") c.trajectory_dt = real(k, v);
        else if (k == "grid_size") c.grid_size = integer(k, v);
        else if (k == "n_samples") c.n_samples = integer(k, v);
        else if (k == "n_iterates") c.n_iterates = integer(k, v);
        else if (k == "special") {
            if (v.type != Value::Type::string) throw ConfigError("special must be a string");
            c.special = v.s;
        }
        else if (k == "n_max") c.n_max = integer(k, v);
        else if (k == "max_hits") c.max_hits = integer(k, v);
        else if (k == "eta") c.eta = array(k, v);
        else if (k == "seed") c.seed = integer(k, v);
        else if (k == "workers") c.workers = integer(k, v);
        else if (k == "quadrature_check") c.quadrature_check = boolean(k, v);
        else if (k == "svg") c.svg = boolean(k, v);
        else throw ConfigError("unknown key '" + k + "'");
    }
    return c;
}

/// Checks the constraints that do not depend on the command.
inline void validate(const RunConfig& c) {
    if (!std::isfinite(c.q1_wall) || !std::isfinite(c.q2_wall) || c.q1_wall * c.q2_wall == 0.0)
        throw ConfigError("wall positions must satisfy q1_wall * q2_wall != 0");
    for (auto [name, x] : {std::pair{"h", c.h}, std::pair{"e1", c.e1}, std::pair{"e2", c.e2}})
        if (x && !(*x > 0.0 && std::isfinite(*x))) throw ConfigError(std::string(name) + " must be positive");
    for (double x : c.h_grid)
        if (!(x > 0.0 && std::isfinite(x))) throw ConfigError("h_grid entries must be positive");
    for (double x : c.eta)
        if (!(x > 0.0 && std::isfinite(x))) throw ConfigError("eta entries must be positive");
    if (c.h && c.e1 && c.e2 && c.e1.value() + c.e2.value() != c.h.value())
        throw ConfigError("h, e1 and e2 are all given and h != e1 + e2");
    if (c.h && c.e1 && !(*c.e1 < *c.h)) throw ConfigError("e1 must be below h");
    if (c.n_returns < 1 || c.n_samples < 1 || c.n_iterates < 1) throw ConfigError("counts must be at least 1");
    if (c.grid_size < 2) throw ConfigError("grid_size must be at least 2");
    if (c.n_max < 1 || c.max_hits < 1) throw ConfigError("n_max and max_hits must be at least 1");
    if (c.workers < 0) throw ConfigError("workers must be nonnegative");
    if (c.trajectory_dt < 0.0) throw ConfigError("trajectory_dt must be nonnegative");
}

inline RunConfig parse_run_config(const std::string& text) {
    RunConfig c = from_document(parse(text));
    validate(c);
    return c;
}

inline std::string serialize(const RunConfig& c) { return serialize(to_document(c)); }

inline Potential1D make_potential(const PotentialSpec& p, bool quadrature_only = false) {
    Potential1D v = p.kind == "lo"        ? Potential1D::linear_oscillator(p.param)
                    : p.kind == "quartic" ? Potential1D::quartic(p.param)
                                          : Potential1D::exponential(p.param);
    return quadrature_only ? v.quadrature_only() : v;
}

inline StepConfig make_step_config(const RunConfig& c) {
    return StepConfig(make_potential(c.potential1, c.quadrature_check), make_potential(c.potential2, c.quadrature_check),
                      c.q1_wall, c.q2_wall);
}

/// Total energy from h, or from e1 + e2.
inline double total_energy(const RunConfig& c) {
    if (c.h) return *c.h;
    if (c.e1 && c.e2) return *c.e1 + *c.e2;
    throw ConfigError("the command needs h (or e1 and e2)");
}

inline LevelSet level_set(const RunConfig& c) {
    if (c.e1 && c.e2 && !c.h) return LevelSet::from_energies(*c.e1, *c.e2);
    if (c.h && c.e1) return LevelSet(*c.e1, *c.h);
    if (c.h && c.e2) return LevelSet(*c.h - *c.e2, *c.h);
    throw ConfigError("the command needs a level set: e1 with h, e2 with h, or e1 with e2");
}

}  // namespace stepiem::config
