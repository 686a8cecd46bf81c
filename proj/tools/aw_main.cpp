#include "aw/errors.hpp"
#include "aw/harness.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

// Exit codes: 0 success, 2 protocol or check failure, 3 usage or config
// problem, 4 internal error.

int cmd_run(const std::string& config_path) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
        std::cerr << "cannot read config: " << config_path << "\n";
        return 3;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    aw::RunConfig config;
    try {
        config = aw::parse_run_config(buf.str());
    } catch (const aw::ParameterError& e) {
        std::cerr << "config: " << e.what() << "\n";
        return 3;
    }
    aw::RunOutcome out = aw::run_audit(config);
    std::cout << out.report;
    std::cout << "artifacts written to " << config.outdir.string() << "\n";
    if (!out.completed) {
        std::cout << "run aborted: " << out.abort_cause << "\n";
        return 2;
    }
    return out.satisfied ? 0 : 2;
}

int cmd_scenario(const std::string& name, std::uint64_t seed) {
    aw::ScenarioOutcome out = aw::run_scenario(name, seed);
    std::cout << "scenario " << out.name << ": "
              << (out.expectation_met ? "expectation met" : "EXPECTATION NOT MET") << "\n";
    if (!out.abort_cause.empty()) std::cout << "abort cause: " << out.abort_cause << "\n";
    std::cout << out.detail << "\n";
    if (!out.report.empty()) std::cout << out.report;
    return out.expectation_met ? 0 : 2;
}

int cmd_explore(std::uint64_t depth, bool self_test) {
    aw::ExploreStats stats = aw::explore_states(depth, self_test);
    std::cout << "paths " << stats.paths << ", states " << stats.states_visited << ", violations "
              << stats.violations << "\n";
    for (const auto& note : stats.violation_notes) std::cout << "  " << note << "\n";
    if (self_test) {
        // The self-test plants a corruption and passes only when the detector
        // catches it.
        return stats.violations >= 1 ? 0 : 2;
    }
    return stats.violations == 0 ? 0 : 2;
}

int cmd_verify(const std::string& dir, const std::string& key_file) {
    std::optional<std::filesystem::path> key;
    if (!key_file.empty()) key = key_file;
    aw::VerifyOutcome out = aw::verify_artifacts(dir, key);
    for (const auto& note : out.notes) std::cout << note << "\n";
    std::cout << (out.ok ? "verify: ok" : "verify: FAILED") << "\n";
    return out.ok ? 0 : 2;
}

int cmd_extract(std::uint64_t bits, std::uint64_t k_max, std::uint64_t seed) {
    aw::ExtractionOutcome out = aw::oracle_extraction_demo(bits, k_max, seed);
    std::cout << "targeted " << out.bits_targeted << " bits, recovered " << out.bits_recovered
              << " across " << out.questions_spent << " answers\n";
    std::cout << "leakage " << out.leakage_consumed << "/" << out.leakage_bound_total
              << " bits\n";
    std::cout << (out.recovered_match ? "recovered bits match the planted secret"
                                      : "recovered bits DO NOT match")
              << "\n";
    bool capped = out.bits_recovered <= k_max;
    return (capped && out.recovered_match) ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"three-party corpus audit over an emulated examiner enclave"};
    app.require_subcommand(1);

    std::string config_path;
    CLI::App* run = app.add_subcommand("run", "full audit from a config file, writing artifacts");
    run->add_option("--config", config_path, "key=value config file")->required();

    std::string scenario_name;
    std::uint64_t scenario_seed = 5;
    CLI::App* scenario = app.add_subcommand("scenario", "one rehearsed run with a known outcome");
    scenario->add_option("name", scenario_name, "one of: " + [] {
                            std::string all;
                            for (const auto& n : aw::scenario_names()) {
                                if (!all.empty()) all += ", ";
                                all += n;
                            }
                            return all;
                        }())
        ->required();
    scenario->add_option("--seed", scenario_seed, "deterministic seed");

    std::uint64_t depth = 12;
    bool self_test = false;
    CLI::App* explore = app.add_subcommand("explore", "walk single-deviation adversary paths");
    explore->add_option("--depth", depth, "maximum branch points to deviate at");
    explore->add_flag("--self-test", self_test, "plant a corruption and require detection");

    std::string verify_dir;
    std::string key_file;
    CLI::App* verify = app.add_subcommand("verify", "offline re-check of a run's artifacts");
    verify->add_option("dir", verify_dir, "artifact directory from a run")->required();
    verify->add_option("--prover-key", key_file, "escrowed prover key to open the sealed proof");

    std::uint64_t bits = 256;
    std::uint64_t extract_kmax = 40;
    std::uint64_t extract_seed = 5;
    CLI::App* extract = app.add_subcommand("extract", "budget-ceiling extraction demo");
    extract->add_option("--bits", bits, "planted secret size in bits");
    extract->add_option("--kmax", extract_kmax, "question budget");
    extract->add_option("--seed", extract_seed, "deterministic seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    try {
        if (*run) return cmd_run(config_path);
        if (*scenario) return cmd_scenario(scenario_name, scenario_seed);
        if (*explore) return cmd_explore(depth, self_test);
        if (*verify) return cmd_verify(verify_dir, key_file);
        if (*extract) return cmd_extract(bits, extract_kmax, extract_seed);
    } catch (const aw::ParameterError& e) {
        std::cerr << "usage: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal: " << e.what() << "\n";
        return 4;
    }
    return 3;
}
