// One line per criterion; exit status 0 when every outcome matches the
// documented list (criteria that fail with the correct physics stay failing).
#include <cstdio>
#include <iostream>

#include "hoep/acceptance.hpp"

int main() {
    const hoep::AcceptanceReport r = hoep::run_acceptance();
    for (const auto& c : r.criteria) std::cout << hoep::format_line(c) << "\n";
    int pass = 0;
    for (const auto& c : r.criteria) pass += c.pass ? 1 : 0;
    std::cout << "acceptance: " << pass << "/" << r.criteria.size() << " pass, unexpected " << r.unexpected()
              << "\n";
    return r.unexpected() == 0 ? 0 : 1;
}
