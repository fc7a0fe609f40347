// qfloor CLI -- batch experiment runner over the qfloor library
//
// Subcommands: graded-distances, attack, verify, sweep. Every run is fully
// determined by a JSON config (plus a few override flags), so two executions
// with the same config produce identical output up to the timestamp field.
//
// Exit codes: 0 complete/pass, 1 usage or config error, 2 invariant
// violation (an implementation bug, never an expected outcome),
// 3 inconclusive Monte Carlo verdict.

#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qfloor/adversary.hpp"
#include "qfloor/catalog.hpp"
#include "qfloor/errors.hpp"
#include "qfloor/serialize.hpp"
#include "qfloor/words.hpp"

using nlohmann::json;
using namespace qfloor;

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<std::string> out;
    std::optional<std::size_t> trials;
    std::optional<double> half_width;
    std::optional<std::string> thresholds;
};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open config file: " + path);
    return json::parse(in);
}

void apply_overrides(json& config, const Overrides& overrides) {
    if (overrides.seed)
        config["seed"] = *overrides.seed;
    if (overrides.mode)
        config["mode"] = *overrides.mode;
    if (overrides.out)
        config["out"] = *overrides.out;
    if (overrides.trials)
        config["trials"] = *overrides.trials;
    if (overrides.half_width)
        config["half_width"] = *overrides.half_width;
    if (overrides.thresholds) {
        const auto comma = overrides.thresholds->find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("--thresholds expects \"a/b,c/d\"");
        config["thresholds"] =
            json{{"accept_completeness", overrides.thresholds->substr(0, comma)},
                 {"reject_soundness", overrides.thresholds->substr(comma + 1)}};
    }
}

Property resolve_property(const json& spec) {
    if (spec.contains("catalog"))
        return make_catalog_property(spec.at("catalog").get<std::string>(),
                                     spec.value("params", json::object()));
    if (spec.contains("file"))
        return load_property_file(spec.at("file").get<std::string>());
    return property_from_json(spec);
}

AttackInstance resolve_instance(const json& config) {
    const json& spec = config.at("instance");
    Property property = resolve_property(spec.at("property"));
    const Word u = Word::parse(property.alphabet(), spec.at("u").get<std::string>());
    return build_attack_instance(u, std::move(property));
}

TesterHandle resolve_tester(const json& config, const AttackInstance* instance) {
    const json& spec = config.at("tester");
    if (spec.contains("catalog"))
        return make_catalog_tester(spec.at("catalog").get<std::string>(),
                                   spec.value("params", json::object()), instance);
    if (spec.contains("tree_file")) {
        TesterHandle handle;
        handle.name = spec.at("tree_file").get<std::string>();
        handle.tree = load_tree_file(handle.name);
        handle.stepwise = stepwise_from_tree(*handle.tree, handle.name);
        return handle;
    }
    throw std::invalid_argument("tester spec needs \"catalog\" or \"tree_file\"");
}

EvalMode resolve_mode(const json& config) {
    const std::string mode = config.value("mode", "exact");
    if (mode == "exact")
        return EvalMode::Exact;
    if (mode == "mc" || mode == "montecarlo")
        return EvalMode::MonteCarlo;
    throw std::invalid_argument("mode must be \"exact\" or \"mc\"");
}

Thresholds resolve_thresholds(const json& config) {
    Thresholds thresholds;
    if (config.contains("thresholds")) {
        const json& spec = config.at("thresholds");
        if (spec.contains("accept_completeness"))
            thresholds.accept_completeness = rational_from_json(spec.at("accept_completeness"));
        if (spec.contains("reject_soundness"))
            thresholds.reject_soundness = rational_from_json(spec.at("reject_soundness"));
    }
    thresholds.validate();
    return thresholds;
}

McParams resolve_mc_params(const json& config) {
    McParams params;
    if (config.contains("half_width"))
        params.half_width = config.at("half_width").get<double>();
    if (config.contains("delta"))
        params.delta = config.at("delta").get<double>();
    if (config.contains("trials"))
        params.trials = config.at("trials").get<std::size_t>();
    return params;
}

std::string utc_timestamp() {
    char buffer[32];
    const std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buffer;
}

void emit(const json& config, json document) {
    document["timestamp"] = utc_timestamp();
    const std::string text = document.dump(2) + "\n";
    if (config.contains("out"))
        write_text_atomic(config.at("out").get<std::string>(), text);
    else
        std::cout << text;
}

void emit_text(const json& config, const std::string& text) {
    if (config.contains("out"))
        write_text_atomic(config.at("out").get<std::string>(), text);
    else
        std::cout << text;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_graded_distances(const json& config) {
    const AttackInstance instance = resolve_instance(config);
    const GradedDistanceReport report = verify_graded_distances(
        instance, config.value("max_exhaustive", std::size_t(65536)),
        config.value("seed", std::uint64_t(0x5eed)));
    json document = graded_report_to_json(report);
    document["command"] = "graded-distances";
    document["difference_count"] = instance.difference_count();
    emit(config, std::move(document));
    if (!report.passed) {
        std::cerr << "graded-distances: counterexample found (implementation bug)\n";
        return 2;
    }
    std::cerr << "graded-distances: " << report.subsets_checked << " subsets pass\n";
    return 0;
}

int cmd_attack(const json& config) {
    const AttackInstance instance = resolve_instance(config);
    const TesterHandle tester = resolve_tester(config, &instance);

    AttackOptions options;
    options.mode = resolve_mode(config);
    options.seed = config.value("seed", std::uint64_t(1));
    options.mc = resolve_mc_params(config);
    options.thresholds = resolve_thresholds(config);
    if (config.contains("k"))
        options.claimed_difference_bound = config.at("k").get<std::size_t>();

    const Certificate certificate =
        attack(tester, instance, config.at("flip_count").get<std::size_t>(), options);
    json document = certificate_to_json(certificate);
    document["command"] = "attack";
    emit(config, std::move(document));
    std::cerr << "attack: verdict " << to_string(certificate.verdict) << "\n";
    return certificate.verdict == Verdict::Inconclusive ? 3 : 0;
}

int cmd_verify(const json& config) {
    const std::string kind = config.value("verify", "distinguisher");
    CheckOutcome outcome = CheckOutcome::Fail;
    if (kind == "distinguisher") {
        const AttackInstance instance = resolve_instance(config);
        const TesterHandle tester = resolve_tester(config, &instance);
        VerifyOptions options;
        options.mode = resolve_mode(config);
        options.seed = config.value("seed", std::uint64_t(1));
        options.mc = resolve_mc_params(config);
        options.thresholds = resolve_thresholds(config);
        options.coverage = config.value("coverage", std::size_t(4096));
        const DistinguisherReport report = verify_distinguisher(
            tester, instance, config.at("flip_count").get<std::size_t>(), options);
        json document = distinguisher_report_to_json(report);
        document["command"] = "verify";
        document["kind"] = kind;
        emit(config, std::move(document));
        outcome = report.outcome;
    } else if (kind == "epsilon_test") {
        const json& instance_spec = config.at("instance");
        Property property = resolve_property(instance_spec.at("property"));
        std::optional<AttackInstance> instance;
        if (instance_spec.contains("u"))
            instance = resolve_instance(config);
        json tester_config = config;
        if (!instance && tester_config["tester"].contains("catalog") &&
            !tester_config["tester"]["params"].contains("n"))
            tester_config["tester"]["params"]["n"] = property.word_length();
        const TesterHandle tester =
            resolve_tester(tester_config, instance ? &*instance : nullptr);
        EpsilonTestOptions options;
        options.mode = resolve_mode(config);
        options.seed = config.value("seed", std::uint64_t(1));
        options.mc = resolve_mc_params(config);
        options.thresholds = resolve_thresholds(config);
        options.enum_bound = config.value("enum_bound", std::size_t(1) << 20);
        const EpsilonTestReport report = verify_epsilon_test(
            tester, property, rational_from_json(config.at("epsilon")), options);
        json document = epsilon_report_to_json(report);
        document["command"] = "verify";
        document["kind"] = kind;
        emit(config, std::move(document));
        outcome = report.outcome;
    } else {
        throw std::invalid_argument("verify kind must be distinguisher or epsilon_test");
    }
    std::cerr << "verify: " << to_string(outcome) << "\n";
    return outcome == CheckOutcome::Inconclusive ? 3 : 0;
}

std::size_t require_unsigned(const json& j, const char* name) {
    if (!j.is_number_integer() && !j.is_number_unsigned())
        throw std::invalid_argument(std::string(name) + " must be a non-negative integer");
    if (j.is_number_integer() && j.get<std::int64_t>() < 0)
        throw std::invalid_argument(std::string(name) + " must be a non-negative integer");
    return j.get<std::size_t>();
}

int cmd_sweep(const json& config) {
    const AttackInstance instance = resolve_instance(config);
    const json& tester_spec = config.at("tester");
    if (!tester_spec.contains("catalog"))
        throw std::invalid_argument("sweep needs a catalog tester whose q can vary");

    const json& sweep = config.at("sweep");
    const std::size_t q_min = require_unsigned(sweep.at("q_min"), "sweep.q_min");
    const std::size_t q_max = require_unsigned(sweep.at("q_max"), "sweep.q_max");

    AttackOptions options;
    options.mode = resolve_mode(config);
    options.seed = config.value("seed", std::uint64_t(1));
    options.mc = resolve_mc_params(config);
    options.thresholds = resolve_thresholds(config);
    const std::size_t flip_count = config.at("flip_count").get<std::size_t>();

    std::ostringstream csv;
    const bool exact = options.mode == EvalMode::Exact;
    if (exact)
        csv << "q,gap,union_bound,floor,floor_satisfied,verdict\n";
    else
        csv << "q,gap_estimate,gap_half_width,union_bound,floor,floor_satisfied,verdict\n";

    for (std::size_t q = q_min; q <= q_max; ++q) {
        json params = tester_spec.value("params", json::object());
        params["q"] = q;
        const TesterHandle tester =
            make_catalog_tester(tester_spec.at("catalog").get<std::string>(), params,
                                &instance);
        const Certificate cert = attack(tester, instance, flip_count, options);
        const bool floor_satisfied =
            Rational(static_cast<std::int64_t>(cert.query_budget)) >= cert.floor;
        csv << q << ",";
        if (exact)
            csv << cert.gap.exact.str() << ",";
        else
            csv << cert.gap.mc.estimate << "," << cert.gap.mc.half_width << ",";
        csv << cert.union_bound.str() << "," << cert.floor.str() << ","
            << (floor_satisfied ? "true" : "false") << "," << to_string(cert.verdict)
            << "\n";
    }
    emit_text(config, csv.str());
    std::cerr << "sweep: done\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"query-floor experiments: hybrid attacks on property testers"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON experiment config")->required();
        cmd->add_option("--seed", overrides.seed, "override config seed");
        cmd->add_option("--mode", overrides.mode, "override mode: exact|mc");
        cmd->add_option("--out", overrides.out, "override output path");
        cmd->add_option("--trials", overrides.trials, "override Monte Carlo trials");
        cmd->add_option("--half-width", overrides.half_width,
                        "override Monte Carlo half-width");
        cmd->add_option("--thresholds", overrides.thresholds,
                        "override thresholds as a/b,c/d");
    };

    CLI::App* graded = app.add_subcommand(
        "graded-distances", "check hybrid distances grade linearly with flip size");
    CLI::App* attack_cmd =
        app.add_subcommand("attack", "run the low-marginal hybrid attack");
    CLI::App* verify_cmd =
        app.add_subcommand("verify", "check distinguisher or epsilon-test validity");
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "attack across a query-budget range, emit CSV");
    for (CLI::App* cmd : {graded, attack_cmd, verify_cmd, sweep_cmd})
        add_common(cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        json config = load_config(config_path);
        apply_overrides(config, overrides);
        if (graded->parsed())
            return cmd_graded_distances(config);
        if (attack_cmd->parsed())
            return cmd_attack(config);
        if (verify_cmd->parsed())
            return cmd_verify(config);
        return cmd_sweep(config);
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::logic_error& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 2;
    }
}
