#pragma once

// Command dispatch for the projcalc tool. Reports are JSON on `out`;
// diagnostics go to `err`. Exit codes: 0 ok, 1 a check failed, 2 bad input.

#include <projcalc/flows.hpp>
#include <projcalc/model.hpp>

#include <iomanip>

#include <CLI11.hpp>
#include <json.hpp>

namespace projcalc::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInputError = 2 };

inline std::string fnv1a_hex(std::string_view data)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline std::vector<double> parse_vector(const std::string& s, const std::string& what)
{
    std::vector<double> out;
    for (const auto& part : detail::split(s, ',')) out.push_back(detail::parse_double(part, what));
    return out;
}

inline std::vector<double> parse_point(const Chart& chart, const std::string& s, const std::string& what)
{
    auto p = parse_vector(s, what);
    if (static_cast<int>(p.size()) != chart.dim())
        throw InputError(what + " needs " + std::to_string(chart.dim()) + " components, got " + std::to_string(p.size()));
    return p;
}

/// Rows separated by ';', entries by ','.
inline Eigen::MatrixXd parse_matrix(const std::string& s)
{
    const auto rows = detail::split(s, ';');
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = parse_vector(rows[i], "matrix");
        if (r.size() != rows.size()) throw InputError("matrix must be square");
        for (std::size_t j = 0; j < r.size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
    }
    return m;
}

inline Json to_json(const Eigen::MatrixXd& m)
{
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json r = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::string format_csv(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------

struct Context {
    std::vector<std::string> args;
    std::ostream& out;
    std::ostream& err;
    std::uint64_t seed = kDefaultSeed;

    Json header(const std::string& command, const Model* model, const std::string& path) const
    {
        Json h;
        h["command"] = command;
        h["args"] = args;
        h["seed"] = seed;
        if (model) h["model"] = {{"path", path}, {"digest", "fnv1a:" + fnv1a_hex(model->source)}};
        return h;
    }

    void emit(const Json& report) const { out << report.dump(2) << '\n'; }
};

/// Connection selected by name: a metric name, "connection" or "class2d".
inline ConnectionField named_connection(const Model& m, const std::string& name)
{
    if (name == "connection") {
        if (!m.connection) throw InputError("model has no connection");
        return *m.connection;
    }
    if (name == "class2d") {
        if (!m.class2d) throw InputError("model has no class2d block");
        return m.class2d->representative();
    }
    return christoffel(m.metric(name));
}

inline int cmd_invariants(const Context& ctx, const std::string& path, const std::string& at, const std::string& metric_name,
                          double tol)
{
    const Model model = load_model(path);
    const std::vector<double> p = parse_point(model.chart, at, "--at");
    if (!model.chart.contains(p)) throw InputError("point " + format_point(p) + " is outside the chart");
    const MetricField* g = nullptr;
    if (!metric_name.empty()) g = &model.metric(metric_name);
    else if (!model.connection && !model.metrics.empty()) g = &model.metrics.front().second;
    const ConnectionField conn = g ? christoffel(*g) : model.primary_connection();
    const int n = model.chart.dim();

    Json r = ctx.header("invariants", &model, path);
    r["tolerances"] = {{"flatness", tol}, {"constant_curvature", tol}};
    r["point"] = p;
    r["source"] = g ? "metric " + (metric_name.empty() ? model.metrics.front().first : metric_name)
                    : (model.connection ? "connection" : "class2d");
    Json res;
    double flatness = 0.0;
    if (n == 2) {
        const ProjectiveClass2D cls = model.class2d && !g && !model.connection ? *model.class2d : k_coefficients(conn);
        const auto k = cls.at(p);
        res["K"] = {{"K0", k[0]}, {"K1", k[1]}, {"K2", k[2]}, {"K3", k[3]}};
        const auto l = liouville_from_coefficients(cls, p);
        res["liouville"] = {{"L1", l[0]}, {"L2", l[1]}};
        flatness = std::max(std::abs(l[0]), std::abs(l[1]));
    }
    res["ricci"] = to_json(to_matrix(ricci_tensor(conn, p)));
    const PointTensor w = weyl_tensor(conn, p);
    res["weyl_max_abs"] = max_abs(w);
    if (n >= 3) {
        res["weyl"] = std::vector<double>(w.data().begin(), w.data().end());
        flatness = max_abs(w);
    }
    if (g) {
        res["scalar_curvature"] = scalar_curvature(*g, p);
        const auto pts = sample_points(model.chart, 16, ctx.seed);
        const CurvatureFit fit = constant_curvature_test(*g, pts, tol);
        res["constant_curvature"] = {{"constant", fit.constant}, {"curvature", fit.curvature}, {"max_deviation", fit.max_deviation}};
    }
    r["results"] = std::move(res);
    r["checks"] = {{"projectively_flat_at_point", flatness <= tol}};
    r["pass"] = true;
    ctx.emit(r);
    return kOk;
}

struct GeodesicArgs {
    std::string model, metric = "g", pair, from, dir, integrals, out;
    double tmax = 10.0, step = 1e-3, tol = 1e-6;
};

/// Integrals named "painleve", "energy" or "family:T".
inline std::vector<NamedIntegral> build_integrals(const Model& model, const MetricField& g, const std::string& pair_name,
                                                  const std::string& list)
{
    std::vector<NamedIntegral> out;
    if (list.empty()) return out;
    const MetricField* g_bar = nullptr;
    auto need_pair = [&]() -> const MetricField& {
        if (!g_bar) {
            const std::string name = pair_name.empty() ? "gbar" : pair_name;
            g_bar = model.find_metric(name);
            if (!g_bar) throw InputError("integral needs a second metric; model has no metric '" + name + "'");
        }
        return *g_bar;
    };
    std::optional<ATensor> a;
    for (const auto& item : detail::split(list, ',')) {
        if (item == "painleve") {
            const MetricField gb = need_pair();
            out.push_back({item, [g, gb](const GeodesicState& s) { return painleve_integral(g, gb, s).value; }});
        } else if (item == "energy") {
            out.push_back({item, [g](const GeodesicState& s) { return energy(g, s); }});
        } else if (item.rfind("family:", 0) == 0) {
            const double t = detail::parse_double(item.substr(7), "family parameter");
            if (!a) {
                if (pair_name.empty() && model.a_tensor && &g == model.find_metric("g")) a = *model.a_tensor;
                else a = a_tensor_from_metrics(g, need_pair());
            }
            const ATensor at = *a;
            out.push_back({item, [g, at, t](const GeodesicState& s) { return integral_family(g, at, t, s).value; }});
        } else {
            throw InputError("unknown integral '" + item + "' (expected painleve, energy or family:T)");
        }
    }
    return out;
}

inline int cmd_geodesic(const Context& ctx, const GeodesicArgs& a)
{
    const Model model = load_model(a.model);
    const MetricField& g = model.metric(a.metric);
    const ConnectionField conn = christoffel(g);
    GeodesicState start;
    start.x = a.from.empty() ? model.chart.center() : parse_point(model.chart, a.from, "--from");
    start.v = parse_point(model.chart, a.dir, "--dir");
    if (!model.chart.contains(start.x)) throw InputError("start point " + format_point(start.x) + " is outside the chart");
    if (!(a.step > 0.0) || !(a.tmax > 0.0)) throw InputError("--step and --tmax must be positive");
    const auto integrals = build_integrals(model, g, a.pair, a.integrals);
    const GeodesicTrajectory traj = integrate_geodesic(conn, start, a.tmax, a.step, integrals);

    if (!a.out.empty()) {
        std::ofstream csv(a.out, std::ios::binary);
        if (!csv) throw InputError("cannot write '" + a.out + "'");
        const int n = model.chart.dim();
        csv << 't';
        for (int i = 0; i < n; ++i) csv << ",x" << i + 1;
        for (int i = 0; i < n; ++i) csv << ",v" << i + 1;
        for (const auto& name : traj.integral_names) csv << ',' << name;
        csv << '\n';
        for (std::size_t k = 0; k < traj.samples.size(); ++k) {
            const auto& s = traj.samples[k];
            csv << format_csv(s.t);
            for (double x : s.x) csv << ',' << format_csv(x);
            for (double v : s.v) csv << ',' << format_csv(v);
            for (double v : traj.integral_values[k]) csv << ',' << format_csv(v);
            csv << '\n';
        }
    }

    Json r = ctx.header("geodesic", &model, a.model);
    r["tolerances"] = {{"relative_drift", a.tol}};
    r["metric"] = a.metric;
    r["method"] = traj.method;
    r["step"] = a.step;
    r["tmax"] = a.tmax;
    r["samples"] = traj.samples.size();
    r["t_end"] = traj.samples.back().t;
    r["left_domain"] = traj.left_domain;
    if (traj.exit_time) r["exit_time"] = *traj.exit_time;
    if (!a.out.empty()) r["csv"] = a.out;
    Json rows = Json::array();
    bool pass = true;
    for (const auto& row : conservation_report(traj)) {
        const bool ok = row.max_rel_drift <= a.tol;
        pass = pass && ok;
        rows.push_back({{"name", row.name}, {"initial", row.initial}, {"max_abs_drift", row.max_abs_drift},
                        {"max_rel_drift", row.max_rel_drift}, {"pass", ok}});
    }
    r["integrals"] = std::move(rows);
    r["pass"] = pass;
    ctx.emit(r);
    return pass ? kOk : kCheckFailed;
}

inline int cmd_mobility(const Context& ctx, const std::string& path, const std::string& source, const MobilityOptions& opt)
{
    const Model model = load_model(path);
    MobilityResult res;
    std::string used;
    if (source.empty() && !model.connection && model.metrics.empty() && model.class2d) {
        res = solve_mobility(*model.class2d, opt);
        used = "class2d";
    } else if (source.empty()) {
        res = solve_mobility(model.primary_connection(), opt);
        used = model.connection ? "connection" : "metric " + model.metrics.front().first;
    } else {
        res = solve_mobility(named_connection(model, source), opt);
        used = source;
    }
    Json r = ctx.header("mobility", &model, path);
    r["tolerances"] = {{"singular_value_threshold", opt.sv_threshold}};
    r["source"] = used;
    r["degree"] = opt.degree;
    r["grid"] = opt.grid;
    r["equations"] = res.equations;
    r["unknowns"] = res.unknowns;
    r["dimension"] = res.dimension;
    const auto& sv = res.singular_values;
    const auto d = static_cast<std::size_t>(res.dimension);
    // sv is descending: the nullspace is the tail
    if (d > 0 && d < sv.size()) {
        const double below = sv[sv.size() - d], above = sv[sv.size() - d - 1];
        r["gap_ratio"] = below > 0.0 ? above / below : std::numeric_limits<double>::infinity();
    }
    r["singular_values"] = sv;
    if (res.warning) {
        r["warning"] = *res.warning;
        ctx.err << "warning: " << *res.warning << '\n';
    }
    r["pass"] = true;
    ctx.emit(r);
    return kOk;
}

struct EquivalenceArgs {
    std::string model, first = "g", second = "gbar", from, dir;
    double tol = 1e-9, drift_tol = 1e-6, tmax = 5.0, step = 1e-3;
    int points = 25;
};

inline int cmd_check_equivalence(const Context& ctx, const EquivalenceArgs& a)
{
    const Model model = load_model(a.model);
    const ConnectionField c1 = named_connection(model, a.first);
    const ConnectionField c2 = named_connection(model, a.second);
    const auto pts = sample_points(model.chart, a.points, ctx.seed);
    const int n = model.chart.dim();

    Json r = ctx.header("check-equivalence", &model, a.model);
    r["tolerances"] = {{"coefficients", a.tol}, {"painleve_relative_drift", a.drift_tol}};
    r["first"] = a.first;
    r["second"] = a.second;
    r["points"] = a.points;
    bool pass = true;
    double defect = 0.0;
    if (n == 2) {
        const ProjectiveClass2D k1 = k_coefficients(c1), k2 = k_coefficients(c2);
        for (const auto& p : pts) {
            const auto x = k1.at(p), y = k2.at(p);
            for (int i = 0; i < 4; ++i) defect = std::max(defect, std::abs(x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)]));
        }
        r["method"] = "K-coefficients";
    } else {
        for (const auto& p : pts) defect = std::max(defect, projective_equivalence_defect(c1, c2, p));
        r["method"] = "connection difference";
    }
    r["max_defect"] = defect;
    r["equivalent"] = defect <= a.tol;
    pass = defect <= a.tol;

    const MetricField* g = model.find_metric(a.first);
    const MetricField* gb = model.find_metric(a.second);
    if (g && gb) {
        GeodesicState start;
        start.x = a.from.empty() ? model.chart.center() : parse_point(model.chart, a.from, "--from");
        if (a.dir.empty()) {
            start.v.assign(static_cast<std::size_t>(n), 0.1);
            start.v[0] = 0.3;
        } else {
            start.v = parse_point(model.chart, a.dir, "--dir");
        }
        const MetricField gv = *g, gbv = *gb;
        const std::vector<NamedIntegral> ints{
            {"painleve", [gv, gbv](const GeodesicState& s) { return painleve_integral(gv, gbv, s).value; }}};
        const GeodesicTrajectory traj = integrate_geodesic(c1, start, a.tmax, a.step, ints);
        const ConservationRow row = conservation_report(traj).front();
        const bool ok = row.max_rel_drift <= a.drift_tol;
        r["painleve"] = {{"from", start.x}, {"dir", start.v}, {"t_end", traj.samples.back().t},
                         {"left_domain", traj.left_domain}, {"initial", row.initial},
                         {"max_rel_drift", row.max_rel_drift}, {"pass", ok}};
        pass = pass && ok;
    }
    r["pass"] = pass;
    ctx.emit(r);
    return pass ? kOk : kCheckFailed;
}

struct MakeArgs {
    std::string type, coords, domain, out;
    std::vector<std::string> set;
    int dim = 2;
};

inline int write_text(const Context& ctx, const std::string& command, const std::string& text, const std::string& path)
{
    if (path.empty()) {
        ctx.out << text;
        return kOk;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path + "'");
    f << text;
    Json r = ctx.header(command, nullptr, "");
    r["written"] = path;
    r["digest"] = "fnv1a:" + fnv1a_hex(text);
    r["pass"] = true;
    ctx.emit(r);
    return kOk;
}

inline int cmd_make(const Context& ctx, const MakeArgs& a)
{
    std::vector<std::string> names;
    if (!a.coords.empty()) names = detail::split(a.coords, ',');
    else if (a.type == "dini") names = {"x", "y"};
    else
        for (int i = 0; i < a.dim; ++i) names.push_back("x" + std::to_string(i + 1));
    std::vector<Interval> dom;
    if (a.domain.empty()) {
        dom.assign(names.size(), {-1.0, 1.0});
    } else {
        for (const auto& part : detail::split(a.domain, ',')) {
            const auto ends = detail::split(part, ':');
            if (ends.size() != 2) throw InputError("--domain entries look like lo:hi");
            dom.push_back({detail::parse_double(ends[0], "domain"), detail::parse_double(ends[1], "domain")});
        }
    }
    Chart chart;
    try {
        chart = Chart(names, dom);
    } catch (const GeometryError& e) {
        throw InputError(e.what());
    }
    ConstructionSpec spec{a.type, {}};
    std::vector<Parameter> params;
    for (const auto& kv : a.set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + kv + "'");
        std::string key = detail::trim(kv.substr(0, eq)), value = detail::unquote(detail::trim(kv.substr(eq + 1)));
        if (key.rfind("param.", 0) == 0) params.push_back({key.substr(6), detail::parse_double(value, key)});
        else spec.entries.emplace_back(std::move(key), std::move(value));
    }
    const std::string text = emit_construction(chart, params, spec);
    (void)parse_model(text, "<make " + a.type + ">"); // runs the construction checks
    return write_text(ctx, "make", text, a.out);
}

/// Pulls every metric of the model back through a Beltrami map, with
/// components built symbolically: g~_ab = J^i_a J^j_b g_ij(F(u)), where
/// J^i_a = (A_ia - F^i c_a) / den for F = (A u + b) / (c.u + d).
inline int cmd_transform(const Context& ctx, const std::string& path, const std::string& matrix, const std::string& out)
{
    const Model model = load_model(path);
    const Chart& chart = model.chart;
    const int n = chart.dim();
    const Eigen::MatrixXd a = parse_matrix(matrix);
    if (a.rows() != n + 1) throw InputError("--matrix must be " + std::to_string(n + 1) + "x" + std::to_string(n + 1));
    BeltramiMap bm;
    try {
        bm = beltrami_transform(a, chart);
    } catch (const GeometryError& e) {
        throw InputError(e.what());
    }
    if (model.metrics.empty()) throw InputError("transform needs at least one metric in the model");

    const auto& comps = *bm.map.components();
    std::vector<Expression> image;
    for (const auto& c : comps) image.push_back(c.expression());
    std::vector<Expression> u;
    for (int i = 0; i < n; ++i) u.push_back(coordinate(chart.names()[static_cast<std::size_t>(i)], i));
    Expression den = number(a(n, n));
    for (int j = 0; j < n; ++j)
        if (a(n, j) != 0.0) den = den + number(a(n, j)) * u[static_cast<std::size_t>(j)];
    std::vector<Expression> jac(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            Expression num = number(a(i, k));
            if (a(n, k) != 0.0) num = num - image[static_cast<std::size_t>(i)] * number(a(n, k));
            jac[static_cast<std::size_t>(i * n + k)] = num / den;
        }

    bool outside = false;
    for (const auto& p : grid_points(chart, 9))
        if (!chart.contains(bm.map.apply(p))) outside = true;

    std::ostringstream text;
    text << "# Beltrami pullback, matrix rows: " << matrix << '\n';
    if (outside) {
        text << "# warning: the map sends part of the chart outside it; components are evaluated by formula there\n";
        ctx.err << "warning: the Beltrami map sends part of the chart outside its domain\n";
    }
    text << emit_chart(chart, model.params);
    for (const auto& [name, g] : model.metrics) {
        const auto& gc = g.field().components();
        if (!gc) throw InputError("metric '" + name + "' has no expression form");
        std::vector<ScalarField> out_comps;
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q) {
                Expression sum;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        const Expression gij = substitute((*gc)[static_cast<std::size_t>(i * n + j)].expression(), image);
                        if (gij->op == Op::Number && gij->number == 0.0) continue;
                        const Expression term = jac[static_cast<std::size_t>(i * n + p)] * jac[static_cast<std::size_t>(j * n + q)] * gij;
                        sum = sum ? sum + term : term;
                    }
                out_comps.emplace_back(chart, sum ? sum : number(0.0), model.params);
            }
        text << '\n' << emit_metric(name, MetricField::from_components(chart, std::move(out_comps), g.signature()));
    }
    const std::string s = text.str();
    (void)parse_model(s, "<transform>");
    return write_text(ctx, "transform", s, out);
}

// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err)
{
    Context ctx{args, out, err};
    CLI::App app{"projective geometry calculator", "projcalc"};
    app.require_subcommand(1);

    std::string model_path, at, metric_name;
    double tol = 1e-9;
    auto* inv = app.add_subcommand("invariants", "K-coefficients, Liouville, curvature and Weyl at a point");
    inv->add_option("--model", model_path, "model file")->required();
    inv->add_option("--at", at, "point, comma separated")->required();
    inv->add_option("--metric", metric_name, "metric to use");
    inv->add_option("--tol", tol, "flatness and fit tolerance")->capture_default_str();

    GeodesicArgs geo;
    auto* gsc = app.add_subcommand("geodesic", "integrate a geodesic and track first integrals");
    gsc->add_option("--model", geo.model)->required();
    gsc->add_option("--metric", geo.metric)->capture_default_str();
    gsc->add_option("--pair", geo.pair, "second metric for painleve and family integrals");
    gsc->add_option("--from", geo.from, "start point (default: chart center)");
    gsc->add_option("--dir", geo.dir, "initial velocity")->required();
    gsc->add_option("--tmax", geo.tmax)->capture_default_str();
    gsc->add_option("--step", geo.step)->capture_default_str();
    gsc->add_option("--integrals", geo.integrals, "painleve,energy,family:T");
    gsc->add_option("--out", geo.out, "trajectory CSV path");
    gsc->add_option("--tol", geo.tol, "relative drift tolerance")->capture_default_str();

    MobilityOptions mob;
    std::string mob_source;
    auto* msc = app.add_subcommand("mobility", "numerical solution space of the metrisability equation");
    msc->add_option("--model", model_path)->required();
    msc->add_option("--source", mob_source, "metric name, connection or class2d");
    msc->add_option("--degree", mob.degree)->capture_default_str();
    msc->add_option("--grid", mob.grid)->capture_default_str();
    msc->add_option("--svtol", mob.sv_threshold)->capture_default_str();

    EquivalenceArgs eq;
    auto* esc = app.add_subcommand("check-equivalence", "test two connections or metrics for projective equivalence");
    esc->add_option("--model", eq.model)->required();
    esc->add_option("--first", eq.first)->capture_default_str();
    esc->add_option("--second", eq.second)->capture_default_str();
    esc->add_option("--tol", eq.tol)->capture_default_str();
    esc->add_option("--points", eq.points)->capture_default_str();
    esc->add_option("--from", eq.from);
    esc->add_option("--dir", eq.dir);
    esc->add_option("--tmax", eq.tmax)->capture_default_str();
    esc->add_option("--step", eq.step)->capture_default_str();
    esc->add_option("--drift-tol", eq.drift_tol)->capture_default_str();

    MakeArgs mk;
    auto* mksc = app.add_subcommand("make", "emit a construction model file");
    mksc->add_option("type", mk.type, "dini, levi_civita, sphere or flat")
        ->required()
        ->check(CLI::IsMember({"dini", "levi_civita", "sphere", "flat"}));
    mksc->add_option("--set", mk.set, "construction entry key=value (param.NAME=v for parameters)");
    mksc->add_option("--coords", mk.coords);
    mksc->add_option("--domain", mk.domain);
    mksc->add_option("--dim", mk.dim)->capture_default_str();
    mksc->add_option("--out", mk.out);

    std::string matrix, transform_out;
    auto* tsc = app.add_subcommand("transform", "pull the model's metrics back through a Beltrami map");
    tsc->add_option("--model", model_path)->required();
    tsc->add_option("--matrix", matrix, "rows separated by ';'")->required();
    tsc->add_option("--out", transform_out);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }

    try {
        ctx.seed = default_seed();
        if (*inv) return cmd_invariants(ctx, model_path, at, metric_name, tol);
        if (*gsc) return cmd_geodesic(ctx, geo);
        if (*msc) return cmd_mobility(ctx, model_path, mob_source, mob);
        if (*esc) return cmd_check_equivalence(ctx, eq);
        if (*mksc) return cmd_make(ctx, mk);
        if (*tsc) return cmd_transform(ctx, model_path, matrix, transform_out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kInputError;
}

} // namespace projcalc::cli
