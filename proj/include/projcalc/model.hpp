#pragma once

// Model files: an INI-style description of a chart and the objects on it.
//
//   [chart]
//   coords = x, y
//   domain = -1:1, -1:1
//
//   [params]
//   a = 0.5
//
//   [metric g]            components by 1-based index pair; missing
//   11 = "1 + x^2"        off-diagonal entries are zero
//   22 = "1 + x^2"
//   signature = 0         optional, number of negative eigenvalues
//
//   [connection]          Gamma^i_jk under key "ijk"
//   [class2d]             K0 .. K3
//   [construction]        type = dini | levi_civita | sphere | flat

#include <projcalc/constructions.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

namespace projcalc {

struct ConstructionSpec {
    std::string type;
    std::vector<std::pair<std::string, std::string>> entries; ///< in file order
};

struct Model {
    Chart chart;
    std::vector<Parameter> params;
    std::vector<std::pair<std::string, MetricField>> metrics; ///< in definition order
    std::optional<ConnectionField> connection;
    std::optional<ProjectiveClass2D> class2d;
    std::optional<ConstructionSpec> construction;
    std::optional<ATensor> a_tensor; ///< set by dini and levi_civita constructions
    std::optional<LeviCivitaModel> levi_civita;
    std::string source; ///< file text, for report digests

    const MetricField* find_metric(const std::string& name) const
    {
        for (const auto& [n, m] : metrics)
            if (n == name) return &m;
        return nullptr;
    }

    const MetricField& metric(const std::string& name) const
    {
        if (const MetricField* m = find_metric(name)) return *m;
        throw InputError("model has no metric named '" + name + "'");
    }

    /// Explicit connection, else the Levi-Civita connection of the first
    /// metric, else the representative of the 2D class.
    ConnectionField primary_connection() const
    {
        if (connection) return *connection;
        if (!metrics.empty()) return christoffel(metrics.front().second);
        if (class2d) return class2d->representative();
        throw InputError("model defines no metric, connection or class2d");
    }
};

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(const std::string& s, const std::string& what)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw InputError("malformed number for " + what + ": '" + s + "'");
    return v;
}

inline int parse_int(const std::string& s, const std::string& what)
{
    const double v = parse_double(s, what);
    if (v != std::floor(v)) throw InputError("expected an integer for " + what + ": '" + s + "'");
    return static_cast<int>(v);
}

struct Entry {
    std::string key;
    std::string value;
    int line = 0;
};

struct Section {
    std::string kind;
    std::string name;
    int line = 0;
    std::vector<Entry> entries;
};

inline std::string location(const std::string& file, int line)
{
    return file + ":" + std::to_string(line) + ": ";
}

inline std::string unquote(const std::string& v)
{
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
}

inline std::vector<Section> read_sections(const std::string& text, const std::string& file)
{
    std::vector<Section> out;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(raw);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw InputError(location(file, line) + "unterminated section header");
            const auto parts = split(s.substr(1, s.size() - 2), ' ');
            std::vector<std::string> words;
            for (const auto& w : parts)
                if (!w.empty()) words.push_back(w);
            if (words.empty() || words.size() > 2) throw InputError(location(file, line) + "malformed section header");
            out.push_back({words[0], words.size() == 2 ? words[1] : std::string(), line, {}});
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw InputError(location(file, line) + "expected 'key = value'");
        if (out.empty()) throw InputError(location(file, line) + "entry outside any section");
        std::string value = trim(s.substr(eq + 1));
        if (!value.empty() && value.front() == '"' && (value.size() < 2 || value.back() != '"'))
            throw InputError(location(file, line) + "unterminated string");
        out.back().entries.push_back({trim(s.substr(0, eq)), unquote(value), line});
    }
    return out;
}

inline ScalarField parse_field(const Chart& chart, const std::vector<Parameter>& params, const Entry& e,
                               const std::string& file)
{
    try {
        return ScalarField::parse(chart, e.value, params);
    } catch (const ParseError& err) {
        throw InputError(location(file, e.line) + "in '" + e.key + "': " + err.what());
    }
}

/// Key of 1-based digits, e.g. "12" -> {0, 1}.
inline std::vector<int> index_key(const Entry& e, int rank, int n, const std::string& file)
{
    if (static_cast<int>(e.key.size()) != rank)
        throw InputError(location(file, e.line) + "expected a " + std::to_string(rank) + "-digit index key, got '" + e.key + "'");
    std::vector<int> idx;
    for (char c : e.key) {
        const int d = c - '1';
        if (d < 0 || d >= n) throw InputError(location(file, e.line) + "index out of range in key '" + e.key + "'");
        idx.push_back(d);
    }
    return idx;
}

inline std::vector<std::vector<ScalarField>> read_block(const Chart& chart, const std::vector<Parameter>& params,
                                                        const std::map<std::string, Entry>& entries,
                                                        const std::string& prefix, int size, const std::string& file,
                                                        int section_line)
{
    std::vector<std::vector<ScalarField>> block(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) {
            const std::string k1 = prefix + std::to_string(i + 1) + std::to_string(j + 1);
            const std::string k2 = prefix + std::to_string(j + 1) + std::to_string(i + 1);
            auto it = entries.find(k1);
            if (it == entries.end()) it = entries.find(k2);
            if (it != entries.end())
                block[static_cast<std::size_t>(i)].push_back(parse_field(chart, params, it->second, file));
            else if (i == j)
                throw InputError(location(file, section_line) + "missing diagonal entry '" + k1 + "'");
            else
                block[static_cast<std::size_t>(i)].push_back(ScalarField::constant(chart, 0.0));
        }
    return block;
}

} // namespace detail

/// Parses model text. `file` is used in error messages.
inline Model parse_model(const std::string& text, const std::string& file = "<model>")
{
    using namespace detail;
    const auto sections = read_sections(text, file);
    Model model;
    model.source = text;

    const Section* chart_sec = nullptr;
    const Section* params_sec = nullptr;
    for (const auto& s : sections) {
        if (s.kind == "chart") {
            if (chart_sec) throw InputError(location(file, s.line) + "duplicate [chart] section");
            chart_sec = &s;
        } else if (s.kind == "params") {
            if (params_sec) throw InputError(location(file, s.line) + "duplicate [params] section");
            params_sec = &s;
        } else if (s.kind != "metric" && s.kind != "connection" && s.kind != "class2d" && s.kind != "construction") {
            throw InputError(location(file, s.line) + "unknown section [" + s.kind + "]");
        }
    }
    if (!chart_sec) throw InputError(file + ": missing [chart] section");

    // chart
    std::vector<std::string> coords;
    std::vector<Interval> domain;
    for (const auto& e : chart_sec->entries) {
        if (e.key == "coords") {
            coords = split(e.value, ',');
        } else if (e.key == "domain") {
            for (const auto& part : split(e.value, ',')) {
                const auto ends = split(part, ':');
                if (ends.size() != 2) throw InputError(location(file, e.line) + "domain entries look like lo:hi");
                domain.push_back({parse_double(ends[0], "domain"), parse_double(ends[1], "domain")});
            }
        } else if (e.key == "dim") {
            const int d = parse_int(e.value, "dim");
            if (!coords.empty() && static_cast<int>(coords.size()) != d)
                throw InputError(location(file, e.line) + "dim does not match coords");
        } else {
            throw InputError(location(file, e.line) + "unknown chart key '" + e.key + "'");
        }
    }
    if (coords.empty()) throw InputError(location(file, chart_sec->line) + "chart needs 'coords'");
    if (domain.empty()) domain.assign(coords.size(), {-1.0, 1.0});
    try {
        model.chart = Chart(coords, domain);
    } catch (const GeometryError& err) {
        throw InputError(location(file, chart_sec->line) + err.what());
    }
    for (const auto& e : chart_sec->entries)
        if (e.key == "dim" && parse_int(e.value, "dim") != model.chart.dim())
            throw InputError(location(file, e.line) + "dim does not match coords");
    const Chart& chart = model.chart;
    const int n = chart.dim();

    if (params_sec)
        for (const auto& e : params_sec->entries) {
            if (!is_identifier(e.key) || is_reserved_name(e.key))
                throw InputError(location(file, e.line) + "invalid parameter name '" + e.key + "'");
            if (std::find(coords.begin(), coords.end(), e.key) != coords.end())
                throw InputError(location(file, e.line) + "parameter '" + e.key + "' shadows a coordinate");
            model.params.push_back({e.key, parse_double(e.value, e.key)});
        }

    std::vector<std::string> defined; // object names, for the exactly-once rule
    auto define = [&](const std::string& name, int line) {
        if (std::find(defined.begin(), defined.end(), name) != defined.end())
            throw InputError(location(file, line) + "'" + name + "' is defined more than once");
        defined.push_back(name);
    };

    // construction first, so explicit duplicates are reported against it
    for (const auto& s : sections) {
        if (s.kind != "construction") continue;
        if (model.construction) throw InputError(location(file, s.line) + "only one [construction] section is allowed");
        std::map<std::string, Entry> kv;
        ConstructionSpec spec;
        for (const auto& e : s.entries) {
            if (!kv.emplace(e.key, e).second) throw InputError(location(file, e.line) + "duplicate key '" + e.key + "'");
            if (e.key == "type") spec.type = e.value;
            else spec.entries.emplace_back(e.key, e.value);
        }
        auto need = [&](const std::string& key) -> const Entry& {
            auto it = kv.find(key);
            if (it == kv.end()) throw InputError(location(file, s.line) + spec.type + " construction needs '" + key + "'");
            return it->second;
        };
        try {
            if (spec.type == "dini") {
                const DiniData d = dini_pair(parse_field(chart, model.params, need("X"), file),
                                             parse_field(chart, model.params, need("Y"), file));
                define("g", s.line);
                define("gbar", s.line);
                model.metrics.emplace_back("g", d.g);
                model.metrics.emplace_back("gbar", d.g_bar);
                model.a_tensor = d.a;
            } else if (spec.type == "levi_civita") {
                const int m = parse_int(need("m").value, "m");
                const int mb = n - 1 - m;
                if (m < 0 || mb < 0) throw InputError(location(file, s.line) + "m out of range for this chart");
                LeviCivitaData data{chart, parse_field(chart, model.params, need("lambda"), file), 1, {}, {}};
                if (kv.count("sign")) data.sign = parse_int(kv.at("sign").value, "sign");
                data.h = read_block(chart, model.params, kv, "h", m, file, s.line);
                data.h_bar = read_block(chart, model.params, kv, "hbar", mb, file, s.line);
                LeviCivitaModel lc = levi_civita_model(data);
                // sigma_bar = A sigma is degenerate (A has eigenvalue 0), so only g is a metric
                define("g", s.line);
                model.metrics.emplace_back("g", lc.g);
                model.a_tensor = lc.a;
                model.levi_civita = std::move(lc);
            } else if (spec.type == "sphere") {
                define("g", s.line);
                model.metrics.emplace_back("g", sphere_gnomonic_model(chart));
            } else if (spec.type == "flat") {
                const FlatModel f = flat_model(chart);
                define("g", s.line);
                define("connection", s.line);
                model.metrics.emplace_back("g", f.metric);
                model.connection = f.connection;
            } else {
                throw InputError(location(file, s.line) + "unknown construction type '" + spec.type + "'");
            }
        } catch (const GeometryError& err) {
            throw InputError(location(file, s.line) + err.what());
        }
        for (const auto& [key, value] : spec.entries) {
            static const std::map<std::string, std::vector<std::string>> allowed{
                {"dini", {"X", "Y"}}, {"sphere", {}}, {"flat", {}}, {"levi_civita", {"lambda", "m", "sign"}}};
            const auto& ok = allowed.at(spec.type);
            const bool block_key = spec.type == "levi_civita" && (key.rfind("h", 0) == 0);
            if (!block_key && std::find(ok.begin(), ok.end(), key) == ok.end())
                throw InputError(location(file, kv.at(key).line) + "unknown key '" + key + "' for " + spec.type);
        }
        model.construction = std::move(spec);
    }

    const auto sample = sample_points(chart, 8, default_seed());
    for (const auto& s : sections) {
        if (s.kind == "metric") {
            const std::string name = s.name.empty() ? "g" : s.name;
            define(name, s.line);
            std::vector<std::optional<ScalarField>> comps(static_cast<std::size_t>(n * n));
            std::vector<int> comp_line(static_cast<std::size_t>(n * n), 0);
            Signature sig;
            for (const auto& e : s.entries) {
                if (e.key == "signature") {
                    sig.negative = parse_int(e.value, "signature");
                    continue;
                }
                const auto idx = index_key(e, 2, n, file);
                const auto f = static_cast<std::size_t>(idx[0] * n + idx[1]);
                if (comps[f]) throw InputError(location(file, e.line) + "duplicate component '" + e.key + "'");
                comps[f] = parse_field(chart, model.params, e, file);
                comp_line[f] = e.line;
            }
            std::vector<ScalarField> full;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const auto f = static_cast<std::size_t>(i * n + j), t = static_cast<std::size_t>(j * n + i);
                    if (comps[f]) {
                        if (comps[t] && i > j) {
                            for (const auto& p : sample) {
                                const double a = comps[f]->value(p), b = comps[t]->value(p);
                                if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a)))
                                    throw InputError(location(file, comp_line[f]) + "metric '" + name +
                                                     "' is not symmetric: components " + std::to_string(j + 1) +
                                                     std::to_string(i + 1) + " and " + std::to_string(i + 1) +
                                                     std::to_string(j + 1) + " differ at " + format_point(p));
                            }
                        }
                        full.push_back(*comps[f]);
                    } else if (comps[t]) {
                        full.push_back(*comps[t]);
                    } else if (i == j) {
                        throw InputError(location(file, s.line) + "metric '" + name + "' is missing component " +
                                         std::to_string(i + 1) + std::to_string(i + 1));
                    } else {
                        full.push_back(ScalarField::constant(chart, 0.0));
                    }
                }
            MetricField g = MetricField::from_components(chart, std::move(full), sig);
            try {
                g.validate(sample);
            } catch (const Error& err) {
                throw InputError(location(file, s.line) + "metric '" + name + "': " + err.what());
            }
            model.metrics.emplace_back(name, std::move(g));
        } else if (s.kind == "connection") {
            define("connection", s.line);
            std::vector<std::optional<ScalarField>> comps(static_cast<std::size_t>(n * n * n));
            for (const auto& e : s.entries) {
                const auto idx = index_key(e, 3, n, file);
                const auto f = static_cast<std::size_t>((idx[0] * n + idx[1]) * n + idx[2]);
                const auto t = static_cast<std::size_t>((idx[0] * n + idx[2]) * n + idx[1]);
                if (comps[f]) throw InputError(location(file, e.line) + "duplicate component '" + e.key + "'");
                comps[f] = parse_field(chart, model.params, e, file);
                if (comps[t] && f != t)
                    for (const auto& p : sample)
                        if (std::abs(comps[f]->value(p) - comps[t]->value(p)) > 1e-12 * std::max(1.0, std::abs(comps[f]->value(p))))
                            throw InputError(location(file, e.line) + "connection has torsion: Gamma^" +
                                             std::to_string(idx[0] + 1) + " components " + e.key.substr(1) +
                                             " and " + std::string{e.key[2], e.key[1]} + " differ");
            }
            std::vector<ScalarField> full;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k) {
                        const auto f = static_cast<std::size_t>((i * n + j) * n + k);
                        const auto t = static_cast<std::size_t>((i * n + k) * n + j);
                        full.push_back(comps[f] ? *comps[f] : comps[t] ? *comps[t] : ScalarField::constant(chart, 0.0));
                    }
            model.connection = ConnectionField::from_components(chart, std::move(full));
        } else if (s.kind == "class2d") {
            define("class2d", s.line);
            if (n != 2) throw InputError(location(file, s.line) + "[class2d] needs a 2-dimensional chart");
            std::array<std::optional<ScalarField>, 4> k;
            for (const auto& e : s.entries) {
                if (e.key.size() != 2 || e.key[0] != 'K' || e.key[1] < '0' || e.key[1] > '3')
                    throw InputError(location(file, e.line) + "class2d keys are K0..K3");
                auto& slot = k[static_cast<std::size_t>(e.key[1] - '0')];
                if (slot) throw InputError(location(file, e.line) + "duplicate key '" + e.key + "'");
                slot = parse_field(chart, model.params, e, file);
            }
            std::array<ScalarField, 4> full;
            for (std::size_t i = 0; i < 4; ++i) full[i] = k[i] ? *k[i] : ScalarField::constant(chart, 0.0);
            model.class2d = ProjectiveClass2D::from_expressions(chart, full);
        }
    }
    return model;
}

inline Model load_model(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

/// Shortest decimal form that reads back to the same double.
inline std::string format_real(double v)
{
    for (int prec = 15; prec <= 17; ++prec) {
        std::ostringstream os;
        os.precision(prec);
        os << v;
        if (prec == 17 || std::stod(os.str()) == v) return os.str();
    }
    return {};
}

inline std::string emit_chart(const Chart& chart, const std::vector<Parameter>& params)
{
    std::ostringstream os;
    os << "[chart]\ncoords = ";
    for (int i = 0; i < chart.dim(); ++i) os << (i ? ", " : "") << chart.names()[static_cast<std::size_t>(i)];
    os << "\ndomain = ";
    for (int i = 0; i < chart.dim(); ++i) {
        const auto& iv = chart.domain()[static_cast<std::size_t>(i)];
        os << (i ? ", " : "") << format_real(iv.lo) << ':' << format_real(iv.hi);
    }
    os << '\n';
    if (!params.empty()) {
        os << "\n[params]\n";
        for (const auto& p : params) os << p.name << " = " << format_real(p.value) << '\n';
    }
    return os.str();
}

/// [metric NAME] block with the upper triangle of the components.
inline std::string emit_metric(const std::string& name, const MetricField& g)
{
    const auto& comps = g.field().components();
    if (!comps) throw InputError("metric '" + name + "' has no expression form to emit");
    const int n = g.dim();
    std::ostringstream os;
    os << "[metric " << name << "]\n";
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const Expression& e = (*comps)[static_cast<std::size_t>(i * n + j)].expression();
            if (i != j && e->op == Op::Number && e->number == 0.0) continue;
            os << i + 1 << j + 1 << " = \"" << print(e) << "\"\n";
        }
    if (g.signature().negative != 0) os << "signature = " << g.signature().negative << '\n';
    return os.str();
}

inline std::string emit_construction(const Chart& chart, const std::vector<Parameter>& params, const ConstructionSpec& spec)
{
    std::ostringstream os;
    os << emit_chart(chart, params) << "\n[construction]\ntype = " << spec.type << '\n';
    for (const auto& [k, v] : spec.entries) {
        const bool numeric = k == "m" || k == "sign";
        os << k << " = " << (numeric ? v : "\"" + v + "\"") << '\n';
    }
    return os.str();
}

} // namespace projcalc
