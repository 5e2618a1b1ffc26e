#include "tomflow/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "tomflow/analysis.hpp"
#include "tomflow/csvio.hpp"
#include "tomflow/macrosolve.hpp"
#include "tomflow/micro.hpp"
#include "tomflow/riemann.hpp"

namespace tomflow {

namespace {

// ---------------------------------------------------------------------------
// Config value model and line-oriented parser

struct Value {
    enum class Kind { number, string, boolean, table, array };
    Kind kind = Kind::number;
    double num = 0.0;
    std::string str;
    bool boolean = false;
    std::vector<std::pair<std::string, Value>> table;
    std::vector<Value> array;
    int line = 0;
};

struct Cursor {
    const std::string& s;
    std::size_t pos = 0;
    int line;

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }
    bool done() {
        skip_ws();
        return pos >= s.size();
    }
    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }
    [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, line); }
};

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string parse_ident(Cursor& c) {
    c.skip_ws();
    std::size_t start = c.pos;
    while (c.pos < c.s.size() && ident_char(c.s[c.pos])) ++c.pos;
    if (c.pos == start) c.fail("expected identifier");
    return c.s.substr(start, c.pos - start);
}

Value parse_value(Cursor& c);

Value parse_table(Cursor& c) {
    Value v;
    v.kind = Value::Kind::table;
    v.line = c.line;
    ++c.pos; // '{'
    if (c.peek() == '}') {
        ++c.pos;
        return v;
    }
    while (true) {
        std::string key = parse_ident(c);
        if (c.peek() != '=') c.fail("expected '=' inside inline table");
        ++c.pos;
        v.table.emplace_back(std::move(key), parse_value(c));
        char ch = c.peek();
        if (ch == ',') {
            ++c.pos;
            continue;
        }
        if (ch == '}') {
            ++c.pos;
            return v;
        }
        c.fail("expected ',' or '}' inside inline table");
    }
}

Value parse_array(Cursor& c) {
    Value v;
    v.kind = Value::Kind::array;
    v.line = c.line;
    ++c.pos; // '['
    if (c.peek() == ']') {
        ++c.pos;
        return v;
    }
    while (true) {
        v.array.push_back(parse_value(c));
        char ch = c.peek();
        if (ch == ',') {
            ++c.pos;
            continue;
        }
        if (ch == ']') {
            ++c.pos;
            return v;
        }
        c.fail("expected ',' or ']' inside array");
    }
}

Value parse_value(Cursor& c) {
    char ch = c.peek();
    Value v;
    v.line = c.line;
    if (ch == '"') {
        std::size_t end = c.s.find('"', c.pos + 1);
        if (end == std::string::npos) c.fail("unterminated string");
        v.kind = Value::Kind::string;
        v.str = c.s.substr(c.pos + 1, end - c.pos - 1);
        c.pos = end + 1;
        return v;
    }
    if (ch == '{') return parse_table(c);
    if (ch == '[') return parse_array(c);
    std::size_t start = c.pos;
    while (c.pos < c.s.size() && !std::strchr(",}] \t", c.s[c.pos])) ++c.pos;
    std::string tok = c.s.substr(start, c.pos - start);
    if (tok == "true" || tok == "false") {
        v.kind = Value::Kind::boolean;
        v.boolean = tok == "true";
        return v;
    }
    char* endp = nullptr;
    v.num = std::strtod(tok.c_str(), &endp);
    if (endp == tok.c_str() || *endp != '\0')
        c.fail("cannot parse value '" + tok + "'");
    v.kind = Value::Kind::number;
    return v;
}

std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_str = !in_str;
        else if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

using Section = std::map<std::string, Value>;
using Sections = std::map<std::string, Section>;

Sections parse_sections(const std::string& text) {
    static const char* known[] = {"model", "initial", "numerics", "output"};
    Sections sections;
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("malformed section header '" + line + "'", lineno);
            current = trim(line.substr(1, line.size() - 2));
            if (std::find(std::begin(known), std::end(known), current) == std::end(known))
                throw ParseError("unknown section [" + current + "]", lineno);
            sections.try_emplace(current);
            continue;
        }
        if (current.empty())
            throw ParseError("key outside of any section", lineno);
        Cursor c{line, 0, lineno};
        const std::string key = parse_ident(c);
        if (c.peek() != '=') c.fail("expected '=' after key '" + key + "'");
        ++c.pos;
        Value v = parse_value(c);
        if (!c.done()) c.fail("trailing characters after value for key '" + key + "'");
        if (!sections[current].emplace(key, std::move(v)).second)
            throw ParseError("duplicate key '" + key + "' in [" + current + "]", lineno);
    }
    return sections;
}

// ---------------------------------------------------------------------------
// Typed key extraction; leftovers become hard errors.

class Bag {
public:
    Bag(Sections& all, const std::string& name) : name_(name) {
        auto it = all.find(name);
        if (it != all.end()) kv_ = &it->second;
    }

    bool present() const { return kv_ != nullptr; }

    const Value* take(const std::string& key) {
        if (!kv_) return nullptr;
        auto it = kv_->find(key);
        if (it == kv_->end()) return nullptr;
        taken_.push_back(key);
        return &it->second;
    }

    double number(const std::string& key, double fallback) {
        const Value* v = take(key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::number)
            throw ParseError("[" + name_ + "]." + key + " must be a number", v->line);
        return v->num;
    }

    std::optional<double> number_opt(const std::string& key) {
        const Value* v = take(key);
        if (!v) return std::nullopt;
        if (v->kind != Value::Kind::number)
            throw ParseError("[" + name_ + "]." + key + " must be a number", v->line);
        return v->num;
    }

    int integer(const std::string& key, int fallback) {
        const Value* v = take(key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::number || v->num != std::floor(v->num))
            throw ParseError("[" + name_ + "]." + key + " must be an integer", v->line);
        return static_cast<int>(v->num);
    }

    std::string text(const std::string& key, const std::string& fallback) {
        const Value* v = take(key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::string)
            throw ParseError("[" + name_ + "]." + key + " must be a string", v->line);
        return v->str;
    }

    std::vector<double> numbers(const std::string& key) {
        const Value* v = take(key);
        std::vector<double> out;
        if (!v) return out;
        if (v->kind != Value::Kind::array)
            throw ParseError("[" + name_ + "]." + key + " must be an array", v->line);
        for (const Value& item : v->array) {
            if (item.kind != Value::Kind::number)
                throw ParseError("[" + name_ + "]." + key + " must contain numbers",
                                 item.line);
            out.push_back(item.num);
        }
        return out;
    }

    std::vector<int> integers(const std::string& key) {
        std::vector<int> out;
        const Value* v = take(key);
        if (!v) return out;
        if (v->kind != Value::Kind::array)
            throw ParseError("[" + name_ + "]." + key + " must be an array", v->line);
        for (const Value& item : v->array) {
            if (item.kind != Value::Kind::number || item.num != std::floor(item.num))
                throw ParseError("[" + name_ + "]." + key + " must contain integers",
                                 item.line);
            out.push_back(static_cast<int>(item.num));
        }
        return out;
    }

    std::optional<ClosureSpec> closure(const std::string& key) {
        const Value* v = take(key);
        if (!v) return std::nullopt;
        if (v->kind != Value::Kind::table)
            throw ParseError("[" + name_ + "]." + key +
                                 " must be an inline table like {kind=\"power\", ...}",
                             v->line);
        ClosureSpec spec;
        bool have_kind = false;
        for (const auto& [k, item] : v->table) {
            const auto num = [&]() {
                if (item.kind != Value::Kind::number)
                    throw ParseError("[" + name_ + "]." + key + "." + k +
                                         " must be a number",
                                     item.line);
                return item.num;
            };
            if (k == "kind") {
                if (item.kind != Value::Kind::string)
                    throw ParseError("[" + name_ + "]." + key + ".kind must be a string",
                                     item.line);
                spec.kind = item.str;
                have_kind = true;
            } else if (k == "exponent") spec.exponent = num();
            else if (k == "coeff") spec.coeff = num();
            else if (k == "intercept") spec.intercept = num();
            else if (k == "slope") spec.slope = num();
            else if (k == "vmax") spec.vmax = num();
            else
                throw ParseError("unknown key [" + name_ + "]." + key + "." + k, item.line);
        }
        if (!have_kind)
            throw ValidationError("missing key [" + name_ + "]." + key + ".kind");
        return spec;
    }

    void finish() const {
        if (!kv_) return;
        for (const auto& [key, value] : *kv_)
            if (std::find(taken_.begin(), taken_.end(), key) == taken_.end())
                throw ParseError("unknown key [" + name_ + "]." + key, value.line);
    }

private:
    const std::string name_;
    Section* kv_ = nullptr;
    std::vector<std::string> taken_;
};

const std::vector<std::string> kKinds = {"riemann", "fvm", "micro", "analyze", "sweep"};

void require_one_of(const std::string& what, const std::string& got,
                    std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
        if (got == a) return;
    std::string msg = what + " must be one of {";
    bool first = true;
    for (const char* a : allowed) {
        if (!first) msg += ", ";
        msg += a;
        first = false;
    }
    throw ValidationError(msg + "}, got '" + got + "'");
}

void validate(const Scenario& s) {
    require_one_of("[numerics].kind", s.kind,
                   {"riemann", "fvm", "micro", "analyze", "sweep"});
    if (s.q.kind.empty()) throw ValidationError("missing key [model].q");
    if (s.h.kind.empty()) throw ValidationError("missing key [model].h");
    if (!(s.T > 0.0)) throw ValidationError("[numerics].T must be > 0");
    if (!(s.xmin < s.xmax)) throw ValidationError("[numerics]: need xmin < xmax");
    if (s.nx < 3) throw ValidationError("[numerics].nx must be >= 3");
    require_one_of("[initial].profile", s.profile, {"riemann", "tanh"});
    require_one_of("[numerics].ghost", s.ghost, {"outflow", "periodic"});
    require_one_of("[numerics].variant", s.variant, {"none", "w_to_W", "z_arz", "z_vc"});
    require_one_of("[numerics].source_sign", s.source_sign, {"paper", "dissipative"});
    require_one_of("[numerics].integrator", s.integrator, {"rk4", "rk45"});
    require_one_of("[numerics].micro_sign", s.micro_sign, {"paper", "consistent"});

    const bool needs_initial = s.kind != "analyze";
    if (needs_initial) {
        if (!s.has_initial) throw ValidationError("missing section [initial]");
        if (!(s.rho_left > 0.0) || !(s.rho_right > 0.0))
            throw ValidationError("[initial]: densities must be > 0");
        if (s.rho_left > s.rho_cap || s.rho_right > s.rho_cap)
            std::cerr << "warning: initial density exceeds rho_cap = " << s.rho_cap
                      << "\n";
        if (!(s.smooth_width > 0.0))
            throw ValidationError("[initial].smooth_width must be > 0");
    }
    if (s.kind == "fvm") {
        if (!(s.cfl > 0.0 && s.cfl < 1.0))
            throw ValidationError("[numerics].cfl must lie in (0, 1)");
        if (s.variant != "none" && !(s.epsilon > 0.0))
            throw ValidationError("[numerics].epsilon must be > 0");
        if (s.variant == "w_to_W" && !s.H)
            throw ValidationError("missing key [model].H (required by w_to_W)");
        if (s.variant == "z_arz" && (!s.H || !s.Veq))
            throw ValidationError("missing [model].H/[model].Veq (required by z_arz)");
        if (s.variant == "z_vc" && !s.Vc)
            throw ValidationError("missing key [model].Vc (required by z_vc)");
    }
    if (s.kind == "sweep") {
        require_one_of("[numerics].variant (sweep)", s.variant, {"w_to_W", "z_arz"});
        if (s.epsilons.empty())
            throw ValidationError("[numerics].epsilons must be a non-empty array");
        for (double e : s.epsilons)
            if (!(e > 0.0))
                throw ValidationError("[numerics].epsilons entries must be > 0");
        if (!s.H) throw ValidationError("missing key [model].H (required by sweep)");
        if (s.variant == "z_arz" && !s.Veq)
            throw ValidationError("missing key [model].Veq (required by z_arz sweep)");
    }
    if (s.kind == "micro") {
        if (s.n_vehicles < 4 || s.n_vehicles % 2 != 0)
            throw ValidationError("[numerics].n_vehicles must be even and >= 4");
        for (int n : s.n_values)
            if (n < 4 || n % 2 != 0)
                throw ValidationError("[numerics].n_values entries must be even and >= 4");
        if (!(s.total_car_length > 0.0))
            throw ValidationError("[numerics].total_car_length must be > 0");
        if (!(s.dt_safety > 0.0 && s.dt_safety <= 1.0))
            throw ValidationError("[numerics].dt_safety must lie in (0, 1]");
    }
    if (s.kind == "analyze") {
        if (!s.H) throw ValidationError("missing key [model].H (required by analyze)");
        if (!s.Veq) throw ValidationError("missing key [model].Veq (required by analyze)");
        if (!(s.rho_min > 0.0 && s.rho_min < s.rho_max))
            throw ValidationError("[numerics]: need 0 < rho_min < rho_max");
        if (s.rho_samples < 1)
            throw ValidationError("[numerics].rho_samples must be >= 1");
    }
    for (double t : s.times)
        if (t < 0.0 || t > s.T + 1e-12)
            throw ValidationError("[output].times entries must lie in [0, T]");
}

} // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
    Sections sections = parse_sections(text);

    Scenario s;
    Bag model(sections, "model");
    if (auto q = model.closure("q")) s.q = *q;
    else throw ValidationError("missing key [model].q" +
                               (origin.empty() ? "" : " in " + origin));
    if (auto h = model.closure("h")) s.h = *h;
    else throw ValidationError("missing key [model].h");
    s.H = model.closure("H");
    s.Veq = model.closure("Veq");
    s.Vc = model.closure("Vc");
    model.finish();

    Bag initial(sections, "initial");
    s.has_initial = initial.present();
    s.rho_left = initial.number("rho_left", 0.0);
    s.rho_right = initial.number("rho_right", 0.0);
    s.v_left = initial.number("v_left", 0.0);
    s.v_right = initial.number("v_right", 0.0);
    s.h_left = initial.number_opt("h_left");
    s.h_right = initial.number_opt("h_right");
    s.x0 = initial.number("x0", 0.0);
    s.profile = initial.text("profile", "riemann");
    s.smooth_width = initial.number("smooth_width", 0.05);
    initial.finish();

    Bag numerics(sections, "numerics");
    s.kind = numerics.text("kind", "");
    if (s.kind.empty()) throw ValidationError("missing key [numerics].kind");
    s.T = numerics.number("T", 0.3);
    s.xmin = numerics.number("xmin", -1.0);
    s.xmax = numerics.number("xmax", 1.0);
    s.nx = numerics.integer("nx", 400);
    s.cfl = numerics.number("cfl", 0.45);
    s.ghost = numerics.text("ghost", "outflow");
    s.variant = numerics.text("variant", "none");
    s.source_sign = numerics.text("source_sign", "paper");
    s.epsilon = numerics.number("epsilon", 0.1);
    s.epsilons = numerics.numbers("epsilons");
    s.n_vehicles = numerics.integer("n_vehicles", 400);
    s.n_values = numerics.integers("n_values");
    s.total_car_length = numerics.number("total_car_length", 0.8);
    s.dt_safety = numerics.number("dt_safety", 0.1);
    s.integrator = numerics.text("integrator", "rk4");
    s.micro_sign = numerics.text("micro_sign", "consistent");
    s.rho_min = numerics.number("rho_min", 0.05);
    s.rho_max = numerics.number("rho_max", 0.95);
    s.rho_samples = numerics.integer("rho_samples", 81);
    s.rho_cap = numerics.number("rho_cap", 1.0);
    numerics.finish();

    Bag output(sections, "output");
    s.times = output.numbers("times");
    output.finish();
    if (s.times.empty()) s.times = {s.T};

    validate(s);
    return s;
}

Scenario parse_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scenario file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), path.string());
}

namespace {

std::string num(double x) {
    char buf[40];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

std::string closure_text(const ClosureSpec& c) {
    std::string out = "{kind=\"" + c.kind + "\"";
    if (c.kind == "power")
        out += ", exponent=" + num(c.exponent) + ", coeff=" + num(c.coeff);
    else if (c.kind == "affine")
        out += ", intercept=" + num(c.intercept) + ", slope=" + num(c.slope);
    else if (c.kind == "greenshields")
        out += ", vmax=" + num(c.vmax);
    return out + "}";
}

template <typename T>
std::string list_text(const std::vector<T>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_same_v<T, double>) out += num(xs[i]);
        else out += std::to_string(xs[i]);
    }
    return out + "]";
}

} // namespace

std::string normalize_scenario(const Scenario& s) {
    std::ostringstream out;
    out << "[model]\n";
    out << "q = " << closure_text(s.q) << "\n";
    out << "h = " << closure_text(s.h) << "\n";
    if (s.H) out << "H = " << closure_text(*s.H) << "\n";
    if (s.Veq) out << "Veq = " << closure_text(*s.Veq) << "\n";
    if (s.Vc) out << "Vc = " << closure_text(*s.Vc) << "\n";
    if (s.has_initial) {
        out << "\n[initial]\n";
        out << "rho_left = " << num(s.rho_left) << "\n";
        out << "rho_right = " << num(s.rho_right) << "\n";
        out << "v_left = " << num(s.v_left) << "\n";
        out << "v_right = " << num(s.v_right) << "\n";
        if (s.h_left) out << "h_left = " << num(*s.h_left) << "\n";
        if (s.h_right) out << "h_right = " << num(*s.h_right) << "\n";
        out << "x0 = " << num(s.x0) << "\n";
        out << "profile = \"" << s.profile << "\"\n";
        out << "smooth_width = " << num(s.smooth_width) << "\n";
    }
    out << "\n[numerics]\n";
    out << "kind = \"" << s.kind << "\"\n";
    out << "T = " << num(s.T) << "\n";
    out << "xmin = " << num(s.xmin) << "\n";
    out << "xmax = " << num(s.xmax) << "\n";
    out << "nx = " << s.nx << "\n";
    out << "cfl = " << num(s.cfl) << "\n";
    out << "ghost = \"" << s.ghost << "\"\n";
    out << "variant = \"" << s.variant << "\"\n";
    out << "source_sign = \"" << s.source_sign << "\"\n";
    out << "epsilon = " << num(s.epsilon) << "\n";
    if (!s.epsilons.empty()) out << "epsilons = " << list_text(s.epsilons) << "\n";
    out << "n_vehicles = " << s.n_vehicles << "\n";
    if (!s.n_values.empty()) out << "n_values = " << list_text(s.n_values) << "\n";
    out << "total_car_length = " << num(s.total_car_length) << "\n";
    out << "dt_safety = " << num(s.dt_safety) << "\n";
    out << "integrator = \"" << s.integrator << "\"\n";
    out << "micro_sign = \"" << s.micro_sign << "\"\n";
    out << "rho_min = " << num(s.rho_min) << "\n";
    out << "rho_max = " << num(s.rho_max) << "\n";
    out << "rho_samples = " << s.rho_samples << "\n";
    out << "rho_cap = " << num(s.rho_cap) << "\n";
    out << "\n[output]\n";
    out << "times = " << list_text(s.times) << "\n";
    return out.str();
}

ScalarClosure build_scalar_closure(const ClosureSpec& spec, const std::string& name) {
    if (spec.kind == "power") return make_power_closure(spec.exponent, spec.coeff);
    if (spec.kind == "affine") return make_affine_closure(spec.intercept, spec.slope);
    throw ValidationError("[model]." + name + ": unknown closure kind '" + spec.kind + "'");
}

ClosureSet build_closures(const Scenario& s) {
    ClosureSet cs;
    cs.q = build_scalar_closure(s.q, "q");
    cs.h_fn = build_scalar_closure(s.h, "h");
    if (s.H) cs.H_eq = build_scalar_closure(*s.H, "H");
    if (s.Veq) cs.V_eq = build_scalar_closure(*s.Veq, "Veq");
    if (s.Vc) {
        if (s.Vc->kind != "greenshields")
            throw ValidationError("[model].Vc: unknown closure kind '" + s.Vc->kind + "'");
        const double vmax = s.Vc->vmax;
        if (!(vmax > 0.0)) throw ValidationError("[model].Vc.vmax must be > 0");
        BivariateClosure vc;
        vc.eval = [vmax](double rho, double) { return vmax * (1.0 - rho); };
        vc.d_rho = [vmax](double, double) { return -vmax; };
        vc.d_h = [](double, double) { return 0.0; };
        cs.Vc = vc;
    }
    return cs;
}

PrimState scenario_left_state(const Scenario& s, const ClosureSet&) {
    const double h = s.h_left ? *s.h_left : std::pow(s.rho_left, 1.5);
    return PrimState{s.rho_left, s.v_left, h};
}

PrimState scenario_right_state(const Scenario& s, const ClosureSet&) {
    const double h = s.h_right ? *s.h_right : std::pow(s.rho_right, 1.5);
    return PrimState{s.rho_right, s.v_right, h};
}

// ---------------------------------------------------------------------------
// Runner

namespace {

const char* kVersion = "0.1.0";

std::string region_name(Region r) {
    switch (r) {
    case Region::L: return "L";
    case Region::FAN: return "FAN";
    case Region::MID: return "MID";
    case Region::R: return "R";
    }
    return "?";
}

std::string meta_text(const Scenario& s) {
    const std::string norm = normalize_scenario(s);
    std::ostringstream out;
    out << "version=" << kVersion << "\n";
    out << "kind=" << s.kind << "\n";
    out << "config_hash=" << fnv1a_hex(norm) << "\n";
    std::string section;
    std::istringstream in(norm);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '[') {
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find(" = ");
        out << section << "." << line.substr(0, eq) << "=" << line.substr(eq + 3) << "\n";
    }
    return out.str();
}

struct Artifacts {
    std::vector<std::pair<std::string, std::string>> files; // name -> content
    void add(const std::string& name, const std::string& content) {
        files.emplace_back(name, content);
    }
};

void run_riemann(const Scenario& s, const ClosureSet& cs, Artifacts& out) {
    const PrimState ul = scenario_left_state(s, cs);
    const PrimState ur = scenario_right_state(s, cs);
    const RiemannSolution sol = solve_riemann(ul, ur, cs);

    for (double t : s.times) {
        std::ostringstream csv;
        csv << "x,rho,v,h,lambda1,region\n";
        const double dx = (s.xmax - s.xmin) / s.nx;
        for (int i = 0; i < s.nx; ++i) {
            const double x = s.xmin + (i + 0.5) * dx;
            const PrimState u = sol.sample(t, x);
            csv << fmt15(x) << ',' << fmt15(u.rho) << ',' << fmt15(u.v) << ','
                << fmt15(u.h) << ',' << fmt15(eigenvalues(u, cs)[0]) << ','
                << region_name(sol.region(t, x)) << "\n";
        }
        out.add("riemann_t" + fmt_short(t) + ".csv", csv.str());
    }

    if (sol.wave1.kind == Wave1Kind::rarefaction) {
        const double t = s.times.back();
        if (t > 0.0) {
            const int nfan = 201;
            std::vector<double> xs(nfan);
            const double xa = t * sol.wave1.xi_left, xb = t * sol.wave1.xi_right;
            for (int i = 0; i < nfan; ++i)
                xs[i] = xa + (xb - xa) * i / (nfan - 1);
            const std::vector<double> dv = delta_v(sol, t, xs);
            std::ostringstream csv;
            csv << "x,delta_v\n";
            for (int i = 0; i < nfan; ++i)
                csv << fmt15(xs[i]) << ',' << fmt15(dv[i]) << "\n";
            out.add("delta_v.csv", csv.str());
        }
    }
}

std::function<PrimState(double)> initial_profile(const Scenario& s, const ClosureSet& cs) {
    const PrimState ul = scenario_left_state(s, cs);
    const PrimState ur = scenario_right_state(s, cs);
    if (s.profile == "tanh") {
        const double x0 = s.x0, width = s.smooth_width;
        const bool h_given = s.h_left && s.h_right;
        return [=](double x) {
            const double f = 0.5 * (1.0 + std::tanh((x - x0) / width));
            PrimState u;
            u.rho = ul.rho + (ur.rho - ul.rho) * f;
            u.v = ul.v + (ur.v - ul.v) * f;
            u.h = h_given ? ul.h + (ur.h - ul.h) * f : std::pow(u.rho, 1.5);
            return u;
        };
    }
    return [=](double x) { return x < s.x0 ? ul : ur; };
}

std::string state_csv(std::span<const double> xs, std::span<const PrimState> prim,
                      const ClosureSet& cs) {
    std::ostringstream csv;
    csv << "x,rho,v,h,z,w\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const ConsState c = prim_to_cons(prim[i], cs);
        csv << fmt15(xs[i]) << ',' << fmt15(prim[i].rho) << ',' << fmt15(prim[i].v)
            << ',' << fmt15(prim[i].h) << ',' << fmt15(c.z) << ',' << fmt15(c.w) << "\n";
    }
    return csv.str();
}

void run_fvm(const Scenario& s, const ClosureSet& cs, Artifacts& out) {
    const FvGrid grid{s.xmin, s.xmax, s.nx};
    const GhostPolicy ghost =
        s.ghost == "periodic" ? GhostPolicy::periodic : GhostPolicy::outflow;
    FvField f = s.profile == "riemann"
                    ? make_riemann_field(grid, ghost, scenario_left_state(s, cs),
                                         scenario_right_state(s, cs), s.x0, cs)
                    : make_field(grid, ghost, initial_profile(s, cs), cs);

    RelaxationConfig rc;
    rc.variant = s.variant == "w_to_W"  ? RelaxationVariant::w_to_W
                 : s.variant == "z_arz" ? RelaxationVariant::z_arz
                 : s.variant == "z_vc"  ? RelaxationVariant::z_vc
                                        : RelaxationVariant::none;
    rc.epsilon = s.epsilon;
    rc.source_sign =
        s.source_sign == "dissipative" ? SourceSign::dissipative : SourceSign::paper;

    std::vector<double> times = s.times;
    std::sort(times.begin(), times.end());
    std::vector<double> xs(s.nx);
    for (int i = 0; i < s.nx; ++i) xs[i] = grid.center(i);
    for (double t : times) {
        f = fv_solve(std::move(f), cs, rc, s.cfl, t);
        out.add("fvm_t" + fmt_short(t) + ".csv", state_csv(xs, fv_primitives(f, cs), cs));
    }
}

void run_micro(const Scenario& s, const ClosureSet& cs, Artifacts& out) {
    MicroRiemannScenario sc;
    sc.left = scenario_left_state(s, cs);
    sc.right = scenario_right_state(s, cs);
    sc.x0 = s.x0;
    sc.total_car_length = s.total_car_length;
    sc.t_eval = s.T;
    sc.dt_safety = s.dt_safety;
    sc.window_lo = s.xmin;
    sc.window_hi = s.xmax;
    sc.compare_cells = s.nx;

    MicroParams p;
    p.integrator = s.integrator == "rk45" ? MicroIntegrator::rk45 : MicroIntegrator::rk4;
    p.tom_sign = s.micro_sign == "paper" ? TomSignConvention::paper
                                         : TomSignConvention::consistent;
    MicroState state = make_two_platoon_state(sc, s.n_vehicles, p);

    std::vector<double> times = s.times;
    std::sort(times.begin(), times.end());

    std::ostringstream traj;
    traj << "t,i,x,v,h\n";
    const auto record = [&](const MicroState& st) {
        for (std::size_t i = 0; i < st.size(); ++i)
            traj << fmt15(st.t) << ',' << i << ',' << fmt15(st.x[i]) << ','
                 << fmt15(st.v[i]) << ',' << fmt15(st.h[i]) << "\n";
    };

    std::vector<double> edges(s.nx + 1);
    for (int i = 0; i <= s.nx; ++i)
        edges[i] = s.xmin + (s.xmax - s.xmin) * i / s.nx;

    for (double t : times) {
        if (t > state.t) state = simulate_tom(std::move(state), p, t, cs);
        record(state);
        const ReconstructedField rec = reconstruct_density(state, p, edges);
        std::vector<double> xs;
        std::vector<PrimState> prim;
        for (int i = 0; i < s.nx; ++i) {
            if (!rec.covered[i]) continue;
            xs.push_back(0.5 * (edges[i] + edges[i + 1]));
            prim.push_back(PrimState{rec.rho[i], rec.v[i], rec.h[i]});
        }
        out.add("micro_recon_t" + fmt_short(t) + ".csv", state_csv(xs, prim, cs));
    }
    out.add("micro_trajectory.csv", traj.str());

    if (!s.n_values.empty()) {
        const auto table = micro_macro_error(sc, s.n_values, cs);
        std::ostringstream csv;
        csv << "n,l1_rho,l1_v,omega_drift,status\n";
        for (const auto& e : table)
            csv << e.n << ',' << fmt15(e.l1_rho) << ',' << fmt15(e.l1_v) << ','
                << fmt15(e.omega_drift) << ',' << (e.failed ? "failed" : "ok") << "\n";
        out.add("micro_macro_l1.csv", csv.str());
    }
}

void run_analyze(const Scenario& s, const ClosureSet& cs, Artifacts& out) {
    std::vector<double> rhos(s.rho_samples);
    for (int i = 0; i < s.rho_samples; ++i)
        rhos[i] = s.rho_samples == 1
                      ? s.rho_min
                      : s.rho_min + (s.rho_max - s.rho_min) * i / (s.rho_samples - 1);
    const StabilityReport rep = stability_report(rhos, cs);
    std::ostringstream csv;
    csv << "rho,mu_tom,mu_arz,gamma_hc,lam1_frozen,lam1_arz,lam_v,feq_prime,sc_tom,"
           "sc_arz\n";
    for (const auto& r : rep.samples)
        csv << fmt15(r.rho) << ',' << fmt15(r.mu_tom) << ',' << fmt15(r.mu_arz) << ','
            << fmt15(r.gamma_hc) << ',' << fmt15(r.lam1_frozen) << ','
            << fmt15(r.lam1_arz) << ',' << fmt15(r.lam_v) << ',' << fmt15(r.feq_prime)
            << ',' << (r.sc_tom ? 1 : 0) << ',' << (r.sc_arz ? 1 : 0) << "\n";
    out.add("stability.csv", csv.str());
}

void run_sweep(const Scenario& s, const ClosureSet& cs, Artifacts& out) {
    SweepSetup setup;
    setup.grid = FvGrid{s.xmin, s.xmax, s.nx};
    setup.ghost = s.ghost == "periodic" ? GhostPolicy::periodic : GhostPolicy::outflow;
    setup.initial = initial_profile(s, cs);
    setup.cfl = s.cfl;
    setup.t_end = s.T;
    const RelaxationVariant variant =
        s.variant == "w_to_W" ? RelaxationVariant::w_to_W : RelaxationVariant::z_arz;
    const SourceSign sign =
        s.source_sign == "dissipative" ? SourceSign::dissipative : SourceSign::paper;
    const auto table = epsilon_sweep(setup, variant, sign, s.epsilons, cs);
    std::ostringstream csv;
    csv << "epsilon,l1_distance,status\n";
    for (const auto& e : table)
        csv << fmt15(e.epsilon) << ','
            << fmt15(e.diverged ? std::numeric_limits<double>::quiet_NaN() : e.l1_distance)
            << ',' << (e.diverged ? "diverged" : "ok") << "\n";
    out.add("sweep.csv", csv.str());
}

} // namespace

void run_scenario(const Scenario& s, const std::filesystem::path& outdir) {
    validate(s);
    const ClosureSet cs = build_closures(s);

    Artifacts artifacts;
    if (s.kind == "riemann") run_riemann(s, cs, artifacts);
    else if (s.kind == "fvm") run_fvm(s, cs, artifacts);
    else if (s.kind == "micro") run_micro(s, cs, artifacts);
    else if (s.kind == "analyze") run_analyze(s, cs, artifacts);
    else if (s.kind == "sweep") run_sweep(s, cs, artifacts);
    else throw ValidationError("unknown scenario kind '" + s.kind + "'");
    artifacts.add("meta.txt", meta_text(s));

    std::error_code ec;
    std::filesystem::create_directories(outdir, ec);
    if (ec) throw IoError("cannot create output directory " + outdir.string());
    for (const auto& [name, content] : artifacts.files)
        write_atomic(outdir / name, content);
}

int exit_code_for(const Error& e) {
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
        dynamic_cast<const InvalidParameterError*>(&e))
        return 2;
    if (dynamic_cast<const IoError*>(&e)) return 4;
    return 3;
}

} // namespace tomflow
