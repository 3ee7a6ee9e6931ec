#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "hoep/acceptance.hpp"
#include "hoep/scenario.hpp"

namespace {

enum Exit { kOk = 0, kExpectation = 1, kConfig = 2, kNumerical = 3 };

struct Outcome {
    int code = kOk;
    std::string message;
};

Outcome run_one(const std::string& file, const std::string& out_dir, const std::string& format) {
    Outcome o;
    try {
        hoep::Scenario sc = hoep::load_scenario(file);
        if (!format.empty()) sc.format = format;
        const std::string name = sc.output.empty() ? sc.name + "." + sc.format : sc.output;
        const hoep::RunResult r = hoep::run_scenario(std::move(sc));
        const std::filesystem::path target = std::filesystem::path(out_dir) / name;
        if (r.snapshot) {
            std::filesystem::path snap = target;
            snap.replace_extension();
            hoep::write_atomic(snap.string() + "_state.json", r.snapshot->dump(2) + "\n");
        }
        hoep::write_atomic(target.string(), format == "json" || (format.empty() && target.extension() == ".json")
                                                ? hoep::render_json(r).dump(2) + "\n"
                                                : hoep::render_csv(r));
        o.message = hoep::summary_line(r) + " -> " + target.string();
        o.code = r.passed() ? kOk : kExpectation;
    } catch (const hoep::NumericalError& e) {
        o.code = kNumerical;
        o.message = file + ": numerical error: " + e.what();
    } catch (const std::filesystem::filesystem_error& e) {
        o.code = kConfig;
        o.message = file + ": " + e.what();
    } catch (const std::exception& e) {
        // configuration, regime and contract errors all come from the scenario
        o.code = kConfig;
        o.message = file + ": " + e.what();
    }
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exceptional-point sensing simulator"};
    app.require_subcommand(1);

    std::string out_dir = "out";
    std::string format;
    int jobs = 1;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "Run scenario files");
    std::vector<std::string> files;
    run->add_option("scenario", files, "Scenario files")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_option("--format", format, "Override the output format")->check(CLI::IsMember({"csv", "json"}));
    run->add_option("--jobs", jobs, "Scenarios run concurrently")->check(CLI::PositiveNumber)->capture_default_str();
    run->add_option("--seed", seed, "Reserved; every computation is deterministic");

    auto* accept = app.add_subcommand("accept", "Run the acceptance criteria");
    std::string report_path;
    std::vector<int> only;
    accept->add_option("--json", report_path, "Write the machine-readable report here");
    accept->add_option("--only", only, "Criterion numbers to run")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfig;
    }

    if (run->parsed()) {
        std::vector<Outcome> outcomes(files.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t k; (k = next++) < files.size();) outcomes[k] = run_one(files[k], out_dir, format);
        };
        std::vector<std::thread> pool;
        const int n = std::min<int>(jobs, static_cast<int>(files.size()));
        for (int k = 0; k < n; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        int rc = kOk;
        for (const auto& o : outcomes) {
            (o.code == kOk || o.code == kExpectation ? std::cout : std::cerr) << o.message << "\n";
            rc = std::max(rc, o.code);
        }
        return rc;
    }

    hoep::AcceptanceOptions opt;
    opt.only.insert(only.begin(), only.end());
    const hoep::AcceptanceReport rep = hoep::run_acceptance(opt);
    for (const auto& c : rep.criteria) {
        std::cout << hoep::format_line(c) << "\n";
        for (const auto& d : c.details) std::cout << "        " << d << "\n";
    }
    const auto doc = rep.documented_failures();
    const auto passed = std::count_if(rep.criteria.begin(), rep.criteria.end(), [](const auto& c) { return c.pass; });
    std::cout << "summary: " << passed << "/" << rep.criteria.size() << " pass";
    if (!doc.empty()) {
        std::cout << ", documented failures:";
        for (int id : doc) std::cout << " " << id;
    }
    std::cout << ", unexpected " << rep.unexpected() << "\n";
    if (!report_path.empty()) {
        try {
            hoep::write_atomic(report_path, hoep::to_json(rep).dump(2) + "\n");
        } catch (const std::exception& e) {
            std::cerr << e.what() << "\n";
            return kConfig;
        }
    }
    return rep.unexpected() == 0 ? kOk : kExpectation;
}
