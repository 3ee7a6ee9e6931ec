#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hoep/model.hpp"

namespace hoep {

// Flat key = value text; '#' starts a comment, arrays are comma separated,
// complex numbers are written a+bi. See README for the key list.
class ParamSet {
public:
    static ParamSet parse(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string raw(const std::string& key) const;

    // Typed reads record the resolved value (default included) for the output header.
    double number(const std::string& key, double def);
    double number(const std::string& key);
    int integer(const std::string& key, int def);
    bool flag(const std::string& key, bool def);
    std::string text(const std::string& key, const std::string& def);
    std::vector<double> numbers(const std::string& key, const std::vector<double>& def);
    std::vector<cplx> complexes(const std::string& key, const std::vector<cplx>& def);

    // Keys that were set but never read.
    std::vector<std::string> unused() const;
    void mark_used(const std::string& key) { used_.insert(key); }
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    const std::vector<std::pair<std::string, std::string>>& resolved() const { return resolved_; }
    void record(const std::string& key, const std::string& value);

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, int> lines_;
    std::set<std::string> used_;
    std::vector<std::pair<std::string, std::string>> resolved_;
};

double parse_real(const std::string& s, const std::string& key);
cplx parse_complex(const std::string& s, const std::string& key);
std::string format_number(double v);  // %.17g
std::string format_complex(cplx z);

struct Sweep {
    std::string param;
    std::vector<double> values;
};

// sweep.param with either sweep.values or sweep.start/stop/points[/scale = linear|log].
std::optional<Sweep> read_sweep(ParamSet& p, const std::string& prefix = "sweep");

struct Expectation {
    std::string metric;
    std::optional<double> value, tol, min, max;
};

struct ExpectationOutcome {
    Expectation expectation;
    double measured = 0.0;
    bool found = false;
    bool pass = false;
};

struct Scenario {
    std::string name;
    std::string experiment;
    std::string format = "csv";
    std::string output;  // file name relative to the output directory
    ParamSet params;
    std::vector<Expectation> expectations;
};

const std::vector<std::string>& experiment_names();

Scenario parse_scenario(const std::string& text, const std::string& fallback_name);
Scenario load_scenario(const std::string& path);

struct RunResult {
    std::string name;
    std::string experiment;
    std::vector<std::pair<std::string, std::string>> header;  // resolved parameters
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::map<std::string, double> metrics;
    std::map<std::string, std::string> notes;
    std::vector<ExpectationOutcome> outcomes;
    std::optional<nlohmann::json> snapshot;  // final Gaussian state, evolve_trace only
    bool passed() const;
};

// Builds the system from preset/n/m/g/... keys.
SystemConfig read_system(ParamSet& p);

RunResult run_scenario(Scenario scenario);

std::string render_csv(const RunResult& r);
nlohmann::json render_json(const RunResult& r);
std::string summary_line(const RunResult& r);

// Write through a temporary file in the same directory followed by rename.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace hoep
