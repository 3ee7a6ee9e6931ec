#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace hoep {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    bool known_unattainable = false;  // documented as failing with the correct physics
    std::string measured;             // one-line summary of the measured values
    std::string tolerance;
    std::vector<std::string> details;
    nlohmann::json data = nlohmann::json::object();
};

struct AcceptanceOptions {
    std::set<int> only;                    // empty runs all twelve
    std::map<int, double> tolerance_scale;  // multiplies every tolerance of a criterion
};

struct AcceptanceReport {
    std::vector<CriterionResult> criteria;
    // failures not on the documented list, plus documented ones that now pass
    int unexpected() const;
    std::vector<int> documented_failures() const;
};

// Criteria that fail against their stated tolerance; see README.
const std::set<int>& known_unattainable();

AcceptanceReport run_acceptance(const AcceptanceOptions& opt = {});

std::string format_line(const CriterionResult& c);
nlohmann::json to_json(const AcceptanceReport& r);

}  // namespace hoep
