#include "hoep/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "hoep/gaussian.hpp"
#include "hoep/metrology.hpp"
#include "hoep/spectral.hpp"

namespace hoep {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    if (!s.empty() && s.back() == ',') out.push_back("");
    return out;
}

bool starts_with(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

std::string join_numbers(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v[i]);
    return out;
}

std::string join_complex(const std::vector<cplx>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_complex(v[i]);
    return out;
}

double plain_real(const std::string& s, bool& ok) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    if (b != e && *b == '+') ++b;
    const auto res = std::from_chars(b, e, v);
    ok = res.ec == std::errc() && res.ptr == e && b != e;
    return v;
}

}  // namespace

// ---- parsing -------------------------------------------------------------

double parse_real(const std::string& raw, const std::string& key) {
    const std::string s = trim(raw);
    bool ok = false;
    double v = plain_real(s, ok);
    if (!ok && s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
        // multiples of pi: "pi", "2pi", "-0.5pi"
        const std::string head = s.substr(0, s.size() - 2);
        if (head.empty() || head == "+") {
            v = 1.0, ok = true;
        } else if (head == "-") {
            v = -1.0, ok = true;
        } else {
            v = plain_real(head, ok);
        }
        v *= M_PI;
    }
    if (!ok || !std::isfinite(v)) throw ConfigError(key + ": cannot parse '" + raw + "' as a real number");
    return v;
}

cplx parse_complex(const std::string& raw, const std::string& key) {
    const std::string s = trim(raw);
    if (s.empty()) throw ConfigError(key + ": empty complex number");
    if (s.back() != 'i' && s.back() != 'j') return {parse_real(s, key), 0.0};
    const std::string body = s.substr(0, s.size() - 1);
    std::size_t split = std::string::npos;
    for (std::size_t k = body.size(); k-- > 1;) {
        if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
            split = k;
            break;
        }
    }
    auto imag_part = [&](const std::string& t) {
        if (t.empty() || t == "+") return 1.0;
        if (t == "-") return -1.0;
        return parse_real(t, key);
    };
    try {
        if (split == std::string::npos) return {0.0, imag_part(body)};
        return {parse_real(body.substr(0, split), key), imag_part(body.substr(split))};
    } catch (const ConfigError&) {
        throw ConfigError(key + ": cannot parse '" + raw + "' as a complex number (use a+bi)");
    }
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) v = 0.0;  // drop the sign of -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_complex(cplx z) {
    std::string im = format_number(z.imag());
    if (im[0] != '-') im = "+" + im;
    return format_number(z.real()) + im + "i";
}

ParamSet ParamSet::parse(const std::string& text) {
    ParamSet p;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (p.values_.count(key))
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "' (first set on line " +
                              std::to_string(p.lines_[key]) + ")");
        p.values_[key] = value;
        p.lines_[key] = lineno;
    }
    return p;
}

std::string ParamSet::raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
}

void ParamSet::record(const std::string& key, const std::string& value) {
    for (auto& kv : resolved_)
        if (kv.first == key) {
            kv.second = value;
            return;
        }
    resolved_.emplace_back(key, value);
}

double ParamSet::number(const std::string& key, double def) {
    const double v = has(key) ? parse_real(raw(key), key) : def;
    used_.insert(key);
    record(key, format_number(v));
    return v;
}

double ParamSet::number(const std::string& key) {
    const double v = parse_real(raw(key), key);
    used_.insert(key);
    record(key, format_number(v));
    return v;
}

int ParamSet::integer(const std::string& key, int def) {
    int v = def;
    if (has(key)) {
        const std::string s = trim(raw(key));
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ConfigError(key + ": cannot parse '" + s + "' as an integer");
    }
    used_.insert(key);
    record(key, std::to_string(v));
    return v;
}

bool ParamSet::flag(const std::string& key, bool def) {
    bool v = def;
    if (has(key)) {
        const std::string s = trim(raw(key));
        if (s == "true" || s == "1" || s == "yes" || s == "on") {
            v = true;
        } else if (s == "false" || s == "0" || s == "no" || s == "off") {
            v = false;
        } else {
            throw ConfigError(key + ": expected true or false, got '" + s + "'");
        }
    }
    used_.insert(key);
    record(key, v ? "true" : "false");
    return v;
}

std::string ParamSet::text(const std::string& key, const std::string& def) {
    const std::string v = has(key) ? raw(key) : def;
    used_.insert(key);
    record(key, v);
    return v;
}

std::vector<double> ParamSet::numbers(const std::string& key, const std::vector<double>& def) {
    std::vector<double> v = def;
    if (has(key)) {
        v.clear();
        const std::string r = raw(key);
        if (!trim(r).empty())
            for (const auto& item : split_list(r)) v.push_back(parse_real(item, key));
    }
    used_.insert(key);
    record(key, join_numbers(v));
    return v;
}

std::vector<cplx> ParamSet::complexes(const std::string& key, const std::vector<cplx>& def) {
    std::vector<cplx> v = def;
    if (has(key)) {
        v.clear();
        const std::string r = raw(key);
        if (!trim(r).empty())
            for (const auto& item : split_list(r)) v.push_back(parse_complex(item, key));
    }
    used_.insert(key);
    record(key, join_complex(v));
    return v;
}

std::vector<std::string> ParamSet::unused() const {
    std::vector<std::string> out;
    for (const auto& kv : values_)
        if (!used_.count(kv.first)) out.push_back(kv.first);
    return out;
}

std::vector<std::string> ParamSet::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& kv : values_)
        if (starts_with(kv.first, prefix)) out.push_back(kv.first);
    return out;
}

std::optional<Sweep> read_sweep(ParamSet& p, const std::string& prefix) {
    const std::string pk = prefix + ".param";
    if (!p.has(pk)) return std::nullopt;
    Sweep s;
    s.param = p.text(pk, "");
    if (p.has(prefix + ".values")) {
        s.values = p.numbers(prefix + ".values", {});
    } else {
        const double start = p.number(prefix + ".start");
        const double stop = p.number(prefix + ".stop");
        const int points = p.integer(prefix + ".points", 21);
        const std::string scale = p.text(prefix + ".scale", "linear");
        if (points < 1) throw ConfigError(prefix + ".points: must be at least 1");
        if (scale != "linear" && scale != "log")
            throw ConfigError(prefix + ".scale: expected linear or log, got '" + scale + "'");
        if (scale == "log" && !(start > 0.0 && stop > 0.0))
            throw ConfigError(prefix + ".scale: log grids need positive start and stop");
        for (int k = 0; k < points; ++k) {
            const double f = points == 1 ? 0.0 : double(k) / (points - 1);
            s.values.push_back(scale == "log" ? start * std::pow(stop / start, f) : start + (stop - start) * f);
        }
        if (points > 1) s.values.back() = stop;
    }
    if (s.values.empty()) throw ConfigError(prefix + ": sweep grid is empty");
    if (s.values.size() > 1) {
        const bool up = s.values[1] > s.values[0];
        for (std::size_t k = 1; k < s.values.size(); ++k)
            if ((s.values[k] > s.values[k - 1]) != up || s.values[k] == s.values[k - 1])
                throw ConfigError(prefix + ": sweep grid must be strictly monotone");
    }
    return s;
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"spectrum_sweep", "discriminant_map", "puiseux",
                                                "evolve_trace",   "sensitivity_sweep", "qfi_trace",
                                                "scaling",        "loss_sweep"};
    return names;
}

Scenario parse_scenario(const std::string& text, const std::string& fallback_name) {
    Scenario sc;
    sc.params = ParamSet::parse(text);
    ParamSet& p = sc.params;
    sc.name = p.text("name", fallback_name);
    sc.experiment = p.text("experiment", "");
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), sc.experiment) == names.end()) {
        std::string list;
        for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
        throw ConfigError("experiment: '" + sc.experiment + "' is not one of " + list);
    }
    sc.format = p.text("output.format", "csv");
    if (sc.format != "csv" && sc.format != "json")
        throw ConfigError("output.format: expected csv or json, got '" + sc.format + "'");
    if (p.has("output.path")) sc.output = p.text("output.path", "");

    std::map<std::string, Expectation> ex;
    for (const std::string& key : p.keys_with_prefix("expect.")) {
        std::string rest = key.substr(7);
        std::string field;
        for (const char* suffix : {".tol", ".min", ".max"}) {
            const std::string sfx = suffix;
            if (rest.size() > sfx.size() && rest.compare(rest.size() - sfx.size(), sfx.size(), sfx) == 0) {
                field = sfx.substr(1);
                rest.resize(rest.size() - sfx.size());
                break;
            }
        }
        Expectation& e = ex[rest];
        e.metric = rest;
        const double v = p.number(key);
        if (field.empty()) e.value = v;
        if (field == "tol") e.tol = v;
        if (field == "min") e.min = v;
        if (field == "max") e.max = v;
    }
    for (auto& kv : ex) {
        if (kv.second.tol && !kv.second.value)
            throw ConfigError("expect." + kv.first + ".tol: given without expect." + kv.first);
        sc.expectations.push_back(kv.second);
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), std::filesystem::path(path).stem().string());
}

SystemConfig read_system(ParamSet& p) {
    const std::string preset = p.text("preset", "none");
    SystemConfig c;
    if (preset == "ep3_sensor") {
        c = ep3_sensor(1.0, 1.0, 0.0);
        c.alpha.clear();
    } else if (preset == "ep4_locus") {
        const double f = p.number("f", 0.2);
        c = ep4_config(f);
    } else if (preset != "none") {
        throw ConfigError("preset: expected none, ep3_sensor or ep4_locus, got '" + preset + "'");
    }
    c.n = p.integer("n", c.n);
    c.m = p.integer("m", c.m);
    if (preset == "none" && (p.has("n") || p.has("m"))) {
        // size the defaults to the declared dimensions
        c.g.assign(std::max(c.m, 0), 1.0);
        c.kappa.assign(std::max(c.n - c.m - 1, 0), 1.0);
        c.delta.assign(std::max(c.n - 1, 0), 0.0);
        c.epsilon.assign(std::max(c.n - 1, 0), 0.0);
    }
    c.g = p.numbers("g", c.g);
    c.kappa = p.numbers("kappa", c.kappa);
    c.delta = p.numbers("delta", c.delta);
    c.epsilon = p.numbers("epsilon", c.epsilon);
    c.gamma = p.number("gamma", c.gamma);
    c.Gamma = p.number("Gamma", c.Gamma);
    if (p.has("sensor_alpha")) {
        if (c.n != 3) throw ConfigError("sensor_alpha: only defined for n = 3");
        const double a = p.number("sensor_alpha", 0.0);
        c.alpha = {cplx(0.0, a), cplx(0.0, -a)};
    }
    c.alpha = p.complexes("alpha", c.alpha);
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("system: ") + e.what());
    }
    return c;
}

// ---- experiments ---------------------------------------------------------

namespace {

using Row = std::vector<std::string>;

int index_suffix(const std::string& name, const std::string& stem, int count) {
    const std::string tail = name.substr(stem.size());
    int k = 0;
    const auto res = std::from_chars(tail.data(), tail.data() + tail.size(), k);
    if (res.ec != std::errc() || res.ptr != tail.data() + tail.size() || k < 1 || k > count)
        throw ConfigError("sweep.param: '" + name + "' index out of range 1.." + std::to_string(count));
    return k - 1;
}

// eps moves epsilon along `dir` from the base values
void apply_system_param(SystemConfig& c, const std::string& name, double v, const std::vector<double>& dir,
                        const std::vector<double>& base_eps) {
    if (name == "g") {
        c.g.at(0) = v;
    } else if (name == "kappa") {
        if (c.kappa.empty()) throw ConfigError("sweep.param: kappa needs an SU(2) mode");
        c.kappa[0] = v;
    } else if (name == "gamma") {
        c.gamma = v;
    } else if (name == "Gamma") {
        c.Gamma = v;
    } else if (name == "eps") {
        for (std::size_t i = 0; i < c.epsilon.size(); ++i) c.epsilon[i] = base_eps[i] + v * dir[i];
    } else if (starts_with(name, "epsilon")) {
        c.epsilon[index_suffix(name, "epsilon", c.n - 1)] = v;
    } else if (starts_with(name, "delta")) {
        c.delta[index_suffix(name, "delta", c.n - 1)] = v;
    } else if (starts_with(name, "kappa")) {
        c.kappa[index_suffix(name, "kappa", c.n - c.m - 1)] = v;
    } else if (starts_with(name, "g")) {
        c.g[index_suffix(name, "g", c.m)] = v;
    } else {
        throw ConfigError("sweep.param: '" + name + "' is not a system parameter");
    }
    c.validate();
}

std::vector<double> read_direction(ParamSet& p, const SystemConfig& c, bool sensor_sign) {
    const PerturbationCase pc = parse_perturbation_case(p.text("perturbation", "same"));
    std::vector<double> d = perturbation_direction(c, pc);
    if (sensor_sign)
        for (double& x : d) x = 0.0 - x;
    return d;
}

std::string num(double v) { return format_number(v); }

RunResult start(const Scenario& sc) {
    RunResult r;
    r.name = sc.name;
    r.experiment = sc.experiment;
    return r;
}

RunResult spectrum_sweep(Scenario& sc) {
    ParamSet& p = sc.params;
    SystemConfig c = read_system(p);
    const auto sweep = read_sweep(p);
    if (!sweep) throw ConfigError("spectrum_sweep: sweep.param is required");
    std::vector<double> dir(c.n - 1, 0.0);
    if (sweep->param == "eps") dir = read_direction(p, c, false);
    SpectralOptions opt;
    opt.cluster_tol = p.number("cluster_tol", opt.cluster_tol);
    opt.phase_tol = p.number("phase_tol", opt.phase_tol);

    RunResult r = start(sc);
    r.columns.push_back(sweep->param);
    for (int k = 0; k < c.n; ++k) r.columns.push_back("re_l" + std::to_string(k + 1));
    for (int k = 0; k < c.n; ++k) r.columns.push_back("im_l" + std::to_string(k + 1));
    r.columns.push_back("phase");
    r.columns.push_back("ep_order");

    const std::vector<double> base = c.epsilon;
    std::vector<cplx> prev;
    int max_order = 0, stable = 0, unstable = 0, exceptional = 0;
    double re_spread_stable = 0.0, im_spread_unstable = 0.0;
    for (double v : sweep->values) {
        SystemConfig cc = c;
        apply_system_param(cc, sweep->param, v, dir, base);
        const Spectrum sp = eigensolve(build_system(cc), opt);
        std::vector<cplx> ev = prev.empty() ? sp.eigenvalues : match_branches(prev, sp.eigenvalues);
        prev = ev;
        Row row{num(v)};
        double remin = INFINITY, remax = -INFINITY, immin = INFINITY, immax = -INFINITY;
        for (const cplx& l : ev) {
            row.push_back(num(l.real()));
            remin = std::min(remin, l.real());
            remax = std::max(remax, l.real());
            immin = std::min(immin, l.imag());
            immax = std::max(immax, l.imag());
        }
        for (const cplx& l : ev) row.push_back(num(l.imag()));
        row.push_back(to_string(sp.phase));
        row.push_back(std::to_string(sp.ep_order));
        r.rows.push_back(row);
        max_order = std::max(max_order, sp.ep_order);
        if (sp.phase == Phase::stable) ++stable, re_spread_stable = std::max(re_spread_stable, remax - remin);
        if (sp.phase == Phase::unstable) ++unstable, im_spread_unstable = std::max(im_spread_unstable, immax - immin);
        if (sp.phase == Phase::exceptional) ++exceptional;
    }
    r.metrics["max_ep_order"] = max_order;
    r.metrics["stable_points"] = stable;
    r.metrics["unstable_points"] = unstable;
    r.metrics["exceptional_points"] = exceptional;
    r.metrics["max_real_spread_stable"] = re_spread_stable;
    r.metrics["max_imag_spread_unstable"] = im_spread_unstable;
    return r;
}

RunResult discriminant_map(Scenario& sc) {
    ParamSet& p = sc.params;
    SystemConfig c = read_system(p);
    if (c.n != 3 || c.m != 1) throw ConfigError("discriminant_map: needs n = 3, m = 1");
    const auto s1 = read_sweep(p, "sweep");
    if (!s1) throw ConfigError("discriminant_map: sweep.param is required");
    auto s2 = read_sweep(p, "sweep2");
    const double tol = p.number("discriminant_tol", 1e-12);
    std::vector<double> dir(2, 0.0);
    if (s1->param == "eps" || (s2 && s2->param == "eps")) dir = read_direction(p, c, false);

    RunResult r = start(sc);
    r.columns = {s1->param};
    if (s2) r.columns.push_back(s2->param);
    for (const char* col : {"x", "y", "D", "discriminant_phase", "eigen_phase"}) r.columns.push_back(col);

    const std::vector<double> base = c.epsilon;
    int agree = 0, compared = 0, positive = 0, negative = 0;
    const std::vector<double> second = s2 ? s2->values : std::vector<double>{NAN};
    for (double v1 : s1->values)
        for (double v2 : second) {
            SystemConfig cc = c;
            apply_system_param(cc, s1->param, v1, dir, base);
            if (s2) apply_system_param(cc, s2->param, v2, dir, base);
            const CubicDiscriminant d = cubic_discriminant(cc);
            const Spectrum sp = eigensolve(build_system(cc));
            std::string dphase = "boundary";
            if (d.D > tol) dphase = "unstable", ++positive;
            if (d.D < -tol) dphase = "stable", ++negative;
            if (dphase != "boundary" && sp.phase != Phase::exceptional) {
                ++compared;
                if (dphase == to_string(sp.phase)) ++agree;
            }
            Row row{num(v1)};
            if (s2) row.push_back(num(v2));
            row.insert(row.end(), {num(d.x), num(d.y), num(d.D), dphase, to_string(sp.phase)});
            r.rows.push_back(row);
        }
    r.metrics["sign_agreement"] = compared ? double(agree) / compared : 1.0;
    r.metrics["positive_points"] = positive;
    r.metrics["negative_points"] = negative;
    return r;
}

RunResult puiseux(Scenario& sc) {
    ParamSet& p = sc.params;
    SystemConfig c = read_system(p);
    const std::string mode = p.text("perturbation", "same");
    if (mode != "same" && mode != "different" && mode != "both")
        throw ConfigError("perturbation: expected same, different or both, got '" + mode + "'");
    auto sweep = read_sweep(p);
    std::vector<double> eps;
    if (sweep) {
        if (sweep->param != "eps") throw ConfigError("puiseux: sweep.param must be eps");
        eps = sweep->values;
    } else {
        for (int k = 0; k < 25; ++k) eps.push_back(1e-9 * std::pow(1e4, k / 24.0));
        p.record("sweep.param", "eps");
        p.record("sweep.values", join_numbers(eps));
    }
    SpectralOptions opt;
    opt.cluster_tol = p.number("cluster_tol", opt.cluster_tol);

    RunResult r = start(sc);
    r.columns = {"eps"};
    std::vector<PuiseuxFit> fits;
    std::vector<std::string> labels;
    for (const std::string& m : {std::string("same"), std::string("different")}) {
        if (mode != "both" && mode != m) continue;
        const auto dir = perturbation_direction(c, parse_perturbation_case(m));
        fits.push_back(puiseux_fit(c, eps, dir, opt));
        labels.push_back(m);
        r.columns.push_back("splitting_" + m);
    }
    for (std::size_t k = 0; k < eps.size(); ++k) {
        Row row{num(eps[k])};
        for (const auto& f : fits) row.push_back(num(f.splitting[k]));
        r.rows.push_back(row);
    }
    r.metrics["slope"] = fits[0].slope;
    r.metrics["r_squared"] = fits[0].r_squared;
    r.metrics["prefactor"] = fits[0].branch_prefactor;
    r.metrics["ep_value_re"] = fits[0].ep_value.real();
    r.metrics["ep_value_im"] = fits[0].ep_value.imag();
    if (fits.size() == 2) {
        r.metrics["slope_different"] = fits[1].slope;
        r.metrics["r_squared_different"] = fits[1].r_squared;
        r.metrics["prefactor_different"] = fits[1].branch_prefactor;
        r.metrics["prefactor_ratio"] = fits[0].branch_prefactor / fits[1].branch_prefactor;
    }
    r.notes["branch"] = "smallest |arg(lambda - lambda_EP)|; other branches differ by exp(+-2 pi i / k)";
    return r;
}

// time grid from sweep.param = t or chi_t
std::vector<double> read_times(ParamSet& p, const Sweep& s, double chi, std::vector<double>& chi_t) {
    std::vector<double> t;
    if (s.param == "t") {
        t = s.values;
        for (double x : t) chi_t.push_back(chi * x);
    } else if (s.param == "chi_t") {
        if (!(chi > 0.0)) throw ConfigError("sweep.param: chi_t needs a stable n = 3, m = 1 system (chi^2 > 0)");
        chi_t = s.values;
        for (double x : chi_t) t.push_back(x / chi);
    } else {
        throw ConfigError("sweep.param: expected t or chi_t, got '" + s.param + "'");
    }
    for (double x : t)
        if (x < 0.0) throw ConfigError("sweep: times must be non-negative");
    (void)p;
    return t;
}

RunResult evolve_trace(Scenario& sc) {
    ParamSet& p = sc.params;
    SystemConfig c = read_system(p);
    const auto sweep = read_sweep(p);
    if (!sweep) throw ConfigError("evolve_trace: sweep.param (t or chi_t) is required");
    const bool has_readout = p.has("readout.theta_t");
    const double theta = p.number("readout.theta_t", 0.0);
    const double eta = p.number("eta", 1.0);
    const bool snapshot = p.flag("snapshot", false);
    const Spectrum sp0 = eigensolve(build_system(c));
    std::vector<double> chi_t;
    const std::vector<double> times = read_times(p, *sweep, sp0.chi, chi_t);

    RunResult r = start(sc);
    r.columns = {"t", "chi_t"};
    GaussianState s0 = coherent_init(c);
    for (const auto& l : s0.labels) r.columns.push_back("N_" + l);
    std::vector<int> magnons;
    for (int k = 0; k < c.magnons(); ++k) magnons.push_back(k);
    if (has_readout)
        for (int k = 0; k < c.magnons(); ++k) r.columns.push_back("N_d" + std::to_string(k + 1));
    r.columns.push_back("N_total");
    const bool conserved = c.n == 3 && c.m == 1;
    if (conserved) r.columns.push_back("N1_minus_N2_minus_Na");
    const bool pair = c.n >= 3;
    if (pair)
        for (const char* col : {"mean_x1_minus_x2", "var_x1_minus_x2", "var_x1_plus_x2"}) r.columns.push_back(col);
    r.columns.push_back("purity_det");
    r.columns.push_back("min_uncertainty_eig");

    double drift = 0.0, purity_dev = 0.0, min_unc = INFINITY;
    double first_conserved = NAN;
    GaussianState last;
    for (std::size_t k = 0; k < times.size(); ++k) {
        GaussianState s = c.lossless() ? evolve(s0, propagator(c, times[k])) : evolve_lossy(s0, c, times[k]);
        if (has_readout) s = readout_swap(s, theta, magnons);
        if (eta != 1.0) {
            std::vector<double> e(s.modes(), 1.0);
            for (int j = 0; j < c.magnons(); ++j) e[j] = eta;
            s = apply_external_loss(s, e);
        }
        const std::vector<double> n = excitation_numbers(s);
        Row row{num(times[k]), num(chi_t[k])};
        double total = 0.0;
        for (double x : n) row.push_back(num(x)), total += x;
        row.push_back(num(total));
        if (conserved) {
            const double q = n[0] - n[1] - n[2];
            if (k == 0) first_conserved = q;
            drift = std::max(drift, std::abs(q - first_conserved));
            row.push_back(num(q));
        }
        if (pair) {
            const VecR cm = observable_x1_minus_x2(c.n).c;
            VecR cm_full = VecR::Zero(s.mu.size()), cp_full = VecR::Zero(s.mu.size());
            cm_full.head(cm.size()) = cm;
            cp_full.head(cm.size()) = observable_x1_plus_x2(c.n).c;
            row.push_back(num(cm_full.dot(s.mu)));
            row.push_back(num(cm_full.dot(s.Lambda * cm_full)));
            row.push_back(num(cp_full.dot(s.Lambda * cp_full)));
        }
        const double pd = purity_determinant(s);
        const double ue = uncertainty_min_eigenvalue(s);
        purity_dev = std::max(purity_dev, std::abs(pd - 1.0));
        min_unc = std::min(min_unc, ue);
        row.push_back(num(pd));
        row.push_back(num(ue));
        r.rows.push_back(row);
        last = s;
    }
    if (conserved) r.metrics["max_conservation_drift"] = drift;
    r.metrics["max_purity_deviation"] = purity_dev;
    r.metrics["min_uncertainty_eig"] = min_unc;
    if (snapshot) r.snapshot = state_to_json(last);
    return r;
}

SensorModel read_sensor(ParamSet& p) {
    SensorModel m;
    m.config = read_system(p);
    m.direction = read_direction(p, m.config, true);
    m.eta = p.number("eta", 1.0);
    if (!(m.eta >= 0.0 && m.eta <= 1.0)) throw ConfigError("eta: must lie in [0, 1]");
    return m;
}

void set_sensor_param(SensorModel& m, const std::string& name, double v) {
    if (name == "eta") {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("sweep: eta must lie in [0, 1]");
        m.eta = v;
    } else if (name == "alpha") {
        if (m.config.n != 3) throw ConfigError("sweep.param: alpha needs n = 3");
        m.config.alpha = {cplx(0.0, v), cplx(0.0, -v)};
    } else {
        const std::vector<double> base = m.config.epsilon;
        apply_system_param(m.config, name, v, m.direction, base);
    }
}

RunResult sensitivity_sweep(Scenario& sc) {
    ParamSet& p = sc.params;
    SensorModel base = read_sensor(p);
    auto sweep = read_sweep(p);
    const bool explicit_t = p.has("t");
    const double fixed_t = explicit_t ? p.number("t", 0.0) : NAN;
    const double chi_t = explicit_t ? NAN : p.number("chi_t", 2.0 * M_PI);
    SensitivityOptions so;
    so.with_qfi = p.flag("qfi", true);
    so.with_sql = p.flag("sql", true);
    so.fd_step = p.number("fd_step", so.fd_step);
    const std::string obs_name = p.text("observable", "x1_minus_x2");
    if (!sweep) sweep = Sweep{"none", {NAN}};

    RunResult r = start(sc);
    r.columns = {"g", "kappa", "alpha", "gamma", "Gamma", "eta", "t", "chi", "observable", "susceptibility",
                 "noise_var", "delta_eps", "qfi", "qcrb", "sql", "valid_regime"};
    if (sweep->param != "none") r.columns.insert(r.columns.begin(), "sweep_" + sweep->param);
    double min_ratio = INFINITY, max_ratio = 0.0;
    bool first = true;
    for (double v : sweep->values) {
        SensorModel m = base;
        double t = fixed_t, ct = chi_t;
        if (sweep->param == "t") {
            t = v;
        } else if (sweep->param == "chi_t") {
            ct = v;
            t = NAN;
        } else if (sweep->param != "none") {
            set_sensor_param(m, sweep->param, v);
        }
        if (std::isnan(t)) {
            const double chi = sensor_chi(m);
            if (!(chi > 0.0)) throw RegimeError("chi_t: chi^2 <= 0 at " + sweep->param + " = " + num(v));
            t = ct / chi;
        }
        const Observable obs = obs_name == "optimal" ? optimal_observable(m, t) : parse_observable(obs_name, m.config.n);
        const SensitivityReport rep = sensitivity(m, obs, t, so);
        Row row;
        if (sweep->param != "none") row.push_back(num(v));
        row.insert(row.end(), {num(rep.g), num(rep.kappa), num(rep.alpha), num(rep.gamma), num(rep.Gamma), num(rep.eta),
                               num(rep.t), num(rep.chi), obs_name, num(rep.susceptibility), num(rep.noise_var),
                               num(rep.delta_eps), num(rep.qfi), num(rep.qcrb), num(rep.sql),
                               rep.valid_regime ? "true" : "false"});
        r.rows.push_back(row);
        const double ratio = rep.delta_eps / rep.qcrb;
        if (so.with_qfi && std::isfinite(ratio)) {
            min_ratio = std::min(min_ratio, ratio);
            max_ratio = std::max(max_ratio, ratio);
        }
        if (first) {
            r.metrics["susceptibility"] = rep.susceptibility;
            r.metrics["noise_var"] = rep.noise_var;
            r.metrics["delta_eps"] = rep.delta_eps;
            if (so.with_qfi) r.metrics["qcrb_ratio"] = ratio;
            if (so.with_qfi) r.metrics["qfi"] = rep.qfi;
            if (so.with_sql) r.metrics["sql_gain_db"] = sql_gain_db(rep);
            first = false;
        }
        if (!rep.warning.empty()) r.notes["warning"] = rep.warning;
    }
    if (so.with_qfi) {
        r.metrics["min_qcrb_ratio"] = min_ratio;
        r.metrics["max_qcrb_ratio"] = max_ratio;
    }
    if (so.with_sql) r.notes["sql_convention"] = SensitivityReport{}.sql_convention;
    return r;
}

RunResult qfi_trace(Scenario& sc) {
    ParamSet& p = sc.params;
    SensorModel m = read_sensor(p);
    const auto sweep = read_sweep(p);
    if (!sweep) throw ConfigError("qfi_trace: sweep.param (t or chi_t) is required");
    const double chi = sensor_chi(m);
    std::vector<double> chi_t;
    const std::vector<double> times = read_times(p, *sweep, chi, chi_t);
    std::string obs_name = p.text("observable", "x1_minus_x2");
    SensitivityOptions so;
    so.with_sql = false;

    RunResult r = start(sc);
    r.columns = {"t",   "chi_t",  "susceptibility", "noise_var",  "delta_eps",  "inv_delta_eps",
                 "qfi", "qfi_mu", "qfi_lambda",     "sqrt_qfi",   "qcrb_ratio"};
    double min_ratio = INFINITY, wp_ratio = NAN, wp_dist = INFINITY;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        Row row{num(t), num(chi_t[k])};
        if (t == 0.0) {
            row.insert(row.end(), {num(0.0), num(obs_name == "optimal" ? NAN : noise_variance(m, parse_observable(obs_name, m.config.n), 0.0)),
                                   "inf", num(0.0), num(0.0), num(0.0), num(0.0), num(0.0), "nan"});
            r.rows.push_back(row);
            continue;
        }
        const Observable obs = obs_name == "optimal" ? optimal_observable(m, t) : parse_observable(obs_name, m.config.n);
        const SensitivityReport rep = sensitivity(m, obs, t, so);
        const double ratio = rep.delta_eps / rep.qcrb;
        row.insert(row.end(), {num(rep.susceptibility), num(rep.noise_var), num(rep.delta_eps),
                               num(1.0 / rep.delta_eps), num(rep.qfi), num(rep.qfi_mu), num(rep.qfi_lambda),
                               num(std::sqrt(rep.qfi)), num(ratio)});
        r.rows.push_back(row);
        if (std::isfinite(ratio)) min_ratio = std::min(min_ratio, ratio);
        // nearest sample to a working point chi t = 2 q pi, q >= 1
        const double q = std::round(chi_t[k] / (2.0 * M_PI));
        if (q >= 1.0) {
            const double dist = std::abs(chi_t[k] - 2.0 * M_PI * q);
            if (dist < wp_dist) wp_dist = dist, wp_ratio = ratio;
        }
    }
    r.metrics["min_qcrb_ratio"] = min_ratio;
    if (std::isfinite(wp_ratio)) {
        r.metrics["working_point_ratio"] = wp_ratio;
        r.metrics["working_point_offset"] = wp_dist;
    }
    return r;
}

RunResult scaling(Scenario& sc) {
    ParamSet& p = sc.params;
    const ScalingFamily fam = parse_scaling_family(p.text("family", "ep3"));
    const auto sweep = read_sweep(p);
    std::vector<double> grid;
    if (sweep) {
        if (sweep->param != "chi") throw ConfigError("scaling: sweep.param must be chi");
        grid = sweep->values;
    } else {
        grid = default_chi_grid(p.integer("points", 12));
        p.record("sweep.param", "chi");
        p.record("sweep.values", join_numbers(grid));
    }
    const std::string obs = p.text("observable", "x1_minus_x2");
    const double alpha = p.number("sensor_alpha", 2.0);
    const bool with_qfi = p.flag("qfi", false);
    const ScalingResult res = scaling_fit(fam, grid, obs, alpha, with_qfi);

    RunResult r = start(sc);
    r.columns = {"chi", fam == ScalingFamily::ep4 ? "g1" : "g", "t", "delta_eps", "qfi", "stable"};
    for (const auto& pt : res.points)
        r.rows.push_back({num(pt.chi), num(pt.param), num(pt.t), num(pt.stable ? pt.delta_eps : NAN),
                          num(with_qfi && pt.stable ? pt.qfi : NAN), pt.stable ? "true" : "false"});
    r.metrics["computable"] = res.computable ? 1.0 : 0.0;
    int excluded = 0;
    for (const auto& pt : res.points) excluded += pt.stable ? 0 : 1;
    r.metrics["excluded_points"] = excluded;
    if (res.computable) {
        r.metrics["slope"] = res.slope;
        r.metrics["r_squared"] = res.r_squared;
        if (with_qfi && std::isfinite(res.qfi_slope)) r.metrics["qfi_slope"] = res.qfi_slope;
    }
    if (!res.warnings.empty()) {
        std::string w;
        for (const auto& s : res.warnings) w += (w.empty() ? "" : "; ") + s;
        r.notes["warning"] = w;
    }
    if (fam == ScalingFamily::ep4) r.notes["status"] = "exploratory";
    return r;
}

RunResult loss_sweep(Scenario& sc) {
    ParamSet& p = sc.params;
    SensorModel base = read_sensor(p);
    const auto sweep = read_sweep(p);
    if (!sweep || (sweep->param != "gamma" && sweep->param != "Gamma" && sweep->param != "eta"))
        throw ConfigError("loss_sweep: sweep.param must be gamma, Gamma or eta");
    const double q = p.number("working_point", 1.0);
    const int samples = p.integer("sql_samples", 400);

    RunResult r = start(sc);
    r.columns = {sweep->param, "chi", "t", "susceptibility", "noise_var", "delta_eps", "peak_excitation", "sql", "gain_db"};
    std::vector<double> de;
    double min_gain = INFINITY;
    for (double v : sweep->values) {
        SensorModel m = base;
        set_sensor_param(m, sweep->param, v);
        const double t = working_time(m, q);
        const Observable obs = observable_x1_minus_x2(m.config.n);
        SensitivityOptions so;
        so.with_qfi = false;
        so.with_sql = false;
        SensitivityReport rep = sensitivity(m, obs, t, so);
        rep.peak_excitation = peak_excitation(m, t, samples);
        rep.sql = sql(rep.peak_excitation, t);
        const double gain = sql_gain_db(rep);
        min_gain = std::min(min_gain, gain);
        de.push_back(rep.delta_eps);
        r.rows.push_back({num(v), num(rep.chi), num(t), num(rep.susceptibility), num(rep.noise_var),
                          num(rep.delta_eps), num(rep.peak_excitation), num(rep.sql), num(gain)});
        if (r.rows.size() == 1) {
            r.metrics["delta_eps"] = rep.delta_eps;
            r.metrics["gain_db"] = gain;
        }
    }
    // loss grows with gamma, Gamma and with decreasing eta
    const bool up = sweep->values.size() < 2 || sweep->values[1] > sweep->values[0];
    const bool worse_with_index = (sweep->param == "eta") ? !up : up;
    bool mono = true;
    for (std::size_t k = 1; k < de.size(); ++k) {
        const double prev = de[k - 1], cur = de[k];
        const double slack = 1e-9 * std::max(prev, cur);
        if (worse_with_index ? cur < prev - slack : cur > prev + slack) mono = false;
    }
    r.metrics["monotone"] = mono ? 1.0 : 0.0;
    r.metrics["min_gain_db"] = min_gain;
    r.notes["sql_convention"] = SensitivityReport{}.sql_convention;
    return r;
}

}  // namespace

bool RunResult::passed() const {
    for (const auto& o : outcomes)
        if (!o.pass) return false;
    return true;
}

RunResult run_scenario(Scenario sc) {
    RunResult r;
    if (sc.experiment == "spectrum_sweep") r = spectrum_sweep(sc);
    else if (sc.experiment == "discriminant_map") r = discriminant_map(sc);
    else if (sc.experiment == "puiseux") r = puiseux(sc);
    else if (sc.experiment == "evolve_trace") r = evolve_trace(sc);
    else if (sc.experiment == "sensitivity_sweep") r = sensitivity_sweep(sc);
    else if (sc.experiment == "qfi_trace") r = qfi_trace(sc);
    else if (sc.experiment == "scaling") r = scaling(sc);
    else if (sc.experiment == "loss_sweep") r = loss_sweep(sc);
    else throw ConfigError("experiment: unknown '" + sc.experiment + "'");

    const auto unused = sc.params.unused();
    if (!unused.empty()) {
        std::string list;
        for (const auto& k : unused) list += (list.empty() ? "" : ", ") + k;
        throw ConfigError("unknown or inapplicable keys for " + sc.experiment + ": " + list);
    }
    r.header = sc.params.resolved();

    for (const Expectation& e : sc.expectations) {
        ExpectationOutcome o;
        o.expectation = e;
        const auto it = r.metrics.find(e.metric);
        o.found = it != r.metrics.end();
        if (o.found) {
            o.measured = it->second;
            bool ok = std::isfinite(o.measured);
            if (e.value) {
                const double tol = e.tol ? *e.tol : 1e-12 * std::max(1.0, std::abs(*e.value));
                ok = ok && std::abs(o.measured - *e.value) <= tol;
            }
            if (e.min) ok = ok && o.measured >= *e.min;
            if (e.max) ok = ok && o.measured <= *e.max;
            o.pass = ok;
        }
        r.outcomes.push_back(o);
    }
    return r;
}

std::string render_csv(const RunResult& r) {
    std::ostringstream os;
    for (const auto& kv : r.header) os << "# " << kv.first << " = " << kv.second << "\n";
    for (const auto& kv : r.notes) os << "# note." << kv.first << " = " << kv.second << "\n";
    for (std::size_t k = 0; k < r.columns.size(); ++k) os << (k ? "," : "") << r.columns[k];
    os << "\n";
    for (const auto& row : r.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << row[k];
        os << "\n";
    }
    for (const auto& kv : r.metrics) os << "# metric." << kv.first << " = " << format_number(kv.second) << "\n";
    for (const auto& o : r.outcomes)
        os << "# expect." << o.expectation.metric << " = " << (o.pass ? "pass" : "FAIL") << " (measured "
           << (o.found ? format_number(o.measured) : "missing") << ")\n";
    return os.str();
}

nlohmann::json render_json(const RunResult& r) {
    using nlohmann::json;
    json j;
    j["scenario"] = r.name;
    j["experiment"] = r.experiment;
    json params = json::array();
    for (const auto& kv : r.header) params.push_back({kv.first, kv.second});
    j["parameters"] = params;
    j["notes"] = r.notes;
    j["columns"] = r.columns;
    j["rows"] = r.rows;
    json metrics = json::object();
    for (const auto& kv : r.metrics) metrics[kv.first] = format_number(kv.second);
    j["metrics"] = metrics;
    json ex = json::array();
    for (const auto& o : r.outcomes) {
        json e{{"metric", o.expectation.metric}, {"pass", o.pass},
               {"measured", o.found ? format_number(o.measured) : "missing"}};
        if (o.expectation.value) e["value"] = *o.expectation.value;
        if (o.expectation.tol) e["tol"] = *o.expectation.tol;
        if (o.expectation.min) e["min"] = *o.expectation.min;
        if (o.expectation.max) e["max"] = *o.expectation.max;
        ex.push_back(e);
    }
    j["expectations"] = ex;
    j["passed"] = r.passed();
    return j;
}

std::string summary_line(const RunResult& r) {
    std::ostringstream os;
    int fails = 0;
    for (const auto& o : r.outcomes) fails += o.pass ? 0 : 1;
    os << r.name << " [" << r.experiment << "] " << r.rows.size() << " rows";
    if (r.outcomes.empty()) {
        os << ", no expectations";
    } else {
        os << ", expectations " << (r.outcomes.size() - fails) << "/" << r.outcomes.size() << " "
           << (fails ? "FAIL" : "pass");
        for (const auto& o : r.outcomes)
            if (!o.pass)
                os << " [" << o.expectation.metric << " = " << (o.found ? format_number(o.measured) : "missing") << "]";
    }
    return os.str();
}

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw ConfigError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

}  // namespace hoep
