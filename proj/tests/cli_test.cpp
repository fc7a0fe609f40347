#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "qfloor/catalog.hpp"
#include "qfloor/rational.hpp"
#include "qfloor/serialize.hpp"

using nlohmann::json;
using qfloor::Rational;

namespace {

std::string cli_path() {
    const char* path = std::getenv("QFLOOR_CLI");
    REQUIRE_MESSAGE(path != nullptr, "QFLOOR_CLI must point at the qfloor binary");
    return path;
}

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

CliResult run_cli(const std::string& args) {
    const std::string out_path = "/tmp/qfloor_cli_out.txt";
    const std::string err_path = "/tmp/qfloor_cli_err.txt";
    const std::string command =
        cli_path() + " " + args + " > " + out_path + " 2> " + err_path;
    const int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    return result;
}

std::string write_config(const std::string& name, const json& config) {
    const std::string path = "/tmp/qfloor_cli_" + name + ".json";
    std::ofstream out(path, std::ios::trunc);
    out << config.dump(2);
    return path;
}

json standard_instance() {
    return json{{"property", json{{"catalog", "two_member_property"},
                                  {"params", json{{"n", 8}}}}},
                {"u", "11111111"}};
}

json parse_without_timestamp(const std::string& text) {
    json j = json::parse(text);
    j.erase("timestamp");
    return j;
}

} // namespace

TEST_CASE("graded-distances passes on the catalog instance") {
    const std::string config =
        write_config("graded", json{{"instance", standard_instance()}});
    const CliResult result = run_cli("graded-distances --config " + config);
    CHECK(result.exit_code == 0);
    const json report = json::parse(result.out);
    CHECK(report.at("passed") == true);
    CHECK(report.at("subsets_checked") == 16);
    CHECK(report.at("exhaustive") == true);
    CHECK(report.contains("timestamp"));
}

TEST_CASE("usage and config errors exit with 1") {
    CHECK(run_cli("graded-distances").exit_code != 0); // missing --config

    const CliResult missing = run_cli("graded-distances --config /tmp/no_such_file.json");
    CHECK(missing.exit_code == 1);

    std::ofstream bad("/tmp/qfloor_cli_bad_prop.txt");
    bad << "01\nnot_a_number\n000\n";
    bad.close();
    const std::string config = write_config(
        "badprop",
        json{{"instance", json{{"property", json{{"file", "/tmp/qfloor_cli_bad_prop.txt"}}},
                               {"u", "11111111"}}}});
    const CliResult malformed = run_cli("graded-distances --config " + config);
    CHECK(malformed.exit_code == 1);
}

TEST_CASE("empty properties are a config error with a clear message") {
    const std::string config = write_config(
        "empty",
        json{{"instance",
              json{{"property", json{{"alphabet", "01"}, {"n", 4}, {"members", json::array()}}},
                   {"u", "1111"}}}});
    const CliResult result = run_cli("graded-distances --config " + config);
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("empty property") != std::string::npos);
}

TEST_CASE("attack emits the refutation certificate deterministically") {
    json config{{"instance", standard_instance()},
                {"tester", json{{"catalog", "uniform_sampler"},
                                {"params", json{{"q", 1}, {"with_replacement", true}}}}},
                {"flip_count", 1},
                {"mode", "exact"}};
    const std::string path = write_config("attack", config);

    const CliResult first = run_cli("attack --config " + path);
    CHECK(first.exit_code == 0);
    const json cert = parse_without_timestamp(first.out);
    CHECK(cert.at("verdict") == "RefutedByGap");
    CHECK(cert.at("gap") == json{{"num", 1}, {"den", 8}});
    CHECK(cert.at("flip_set") == json::array({4}));

    const CliResult second = run_cli("attack --config " + path);
    CHECK(parse_without_timestamp(second.out) == cert);
}

TEST_CASE("attack with flip count equal to |D| is flagged not applicable") {
    json config{{"instance", standard_instance()},
                {"tester", json{{"catalog", "uniform_sampler"},
                                {"params", json{{"q", 1}, {"with_replacement", true}}}}},
                {"flip_count", 4},
                {"mode", "exact"}};
    const CliResult result = run_cli("attack --config " + write_config("na", config));
    CHECK(result.exit_code == 0);
    CHECK(json::parse(result.out).at("verdict") == "NotApplicable");
}

TEST_CASE("monte carlo attack with hopeless trial counts exits inconclusive") {
    json config{{"instance", standard_instance()},
                {"tester", json{{"catalog", "uniform_sampler"},
                                {"params", json{{"q", 1}, {"with_replacement", true}}}}},
                {"flip_count", 1},
                {"mode", "mc"},
                {"seed", 5},
                {"trials", 10}};
    const CliResult result = run_cli("attack --config " + write_config("mc", config));
    CHECK(result.exit_code == 3);
    CHECK(json::parse(result.out).at("verdict") == "Inconclusive");
}

TEST_CASE("attack accepts a tester from a decision-tree file") {
    const qfloor::TesterHandle sampler = qfloor::uniform_sampler_tester(8, 1, true);
    const std::string tree_path = "/tmp/qfloor_cli_tree.json";
    std::ofstream out(tree_path, std::ios::trunc);
    out << qfloor::tree_to_json(*sampler.tree).dump();
    out.close();

    json config{{"instance", standard_instance()},
                {"tester", json{{"tree_file", tree_path}}},
                {"flip_count", 1},
                {"mode", "exact"}};
    const CliResult result = run_cli("attack --config " + write_config("treefile", config));
    CHECK(result.exit_code == 0);
    CHECK(json::parse(result.out).at("verdict") == "RefutedByGap");
}

TEST_CASE("sweep emits one row per budget, all obeying the union bound") {
    json config{{"instance", standard_instance()},
                {"tester", json{{"catalog", "uniform_sampler"},
                                {"params", json{{"with_replacement", true}}}}},
                {"flip_count", 1},
                {"mode", "exact"},
                {"sweep", json{{"q_min", 1}, {"q_max", 8}}}};
    const CliResult result = run_cli("sweep --config " + write_config("sweep", config));
    CHECK(result.exit_code == 0);

    std::istringstream lines(result.out);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "q,gap,union_bound,floor,floor_satisfied,verdict");
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        if (line.empty())
            continue;
        ++rows;
        std::istringstream fields(line);
        std::string q, gap, union_bound;
        std::getline(fields, q, ',');
        std::getline(fields, gap, ',');
        std::getline(fields, union_bound, ',');
        CHECK(Rational::parse(gap) <= Rational::parse(union_bound));
    }
    CHECK(rows == 8);

    // Determinism: byte-identical CSV on a rerun.
    const CliResult again = run_cli("sweep --config " + write_config("sweep", config));
    CHECK(again.out == result.out);
}

TEST_CASE("sweep with an empty range emits only the header") {
    json config{{"instance", standard_instance()},
                {"tester", json{{"catalog", "uniform_sampler"},
                                {"params", json{{"with_replacement", true}}}}},
                {"flip_count", 1},
                {"mode", "exact"},
                {"sweep", json{{"q_min", 5}, {"q_max", 4}}}};
    const CliResult result = run_cli("sweep --config " + write_config("sweep_empty", config));
    CHECK(result.exit_code == 0);
    CHECK(result.out == "q,gap,union_bound,floor,floor_satisfied,verdict\n");
}

TEST_CASE("non-integer sweep bounds are a config error") {
    json config{{"instance", standard_instance()},
                {"tester", json{{"catalog", "uniform_sampler"},
                                {"params", json{{"with_replacement", true}}}}},
                {"flip_count", 1},
                {"sweep", json{{"q_min", 1.5}, {"q_max", 4}}}};
    const CliResult result = run_cli("sweep --config " + write_config("sweep_bad", config));
    CHECK(result.exit_code == 1);
}

TEST_CASE("verify runs both kinds through the CLI") {
    json distinguisher{{"instance",
                        json{{"property", json{{"catalog", "zero_property"},
                                               {"params", json{{"n", 8}}}}},
                             {"u", "11111111"}}},
                       {"tester", json{{"catalog", "uniform_sampler"},
                                       {"params", json{{"q", 16}, {"with_replacement", true}}}}},
                       {"flip_count", 1},
                       {"verify", "distinguisher"}};
    const CliResult pass =
        run_cli("verify --config " + write_config("verify_d", distinguisher));
    CHECK(pass.exit_code == 0);
    CHECK(json::parse(pass.out).at("outcome") == "pass");

    json epsilon{{"instance", json{{"property", json{{"catalog", "zero_property"},
                                                     {"params", json{{"n", 4}}}}}}},
                 {"tester", json{{"catalog", "constant"},
                                 {"params", json{{"accept", true}}}}},
                 {"verify", "epsilon_test"},
                 {"epsilon", "1/4"}};
    const CliResult fail = run_cli("verify --config " + write_config("verify_e", epsilon));
    CHECK(fail.exit_code == 0);
    CHECK(json::parse(fail.out).at("outcome") == "fail");
}

TEST_CASE("threshold overrides flow through the flag syntax") {
    json config{{"instance", standard_instance()},
                {"tester", json{{"catalog", "uniform_sampler"},
                                {"params", json{{"q", 2}, {"with_replacement", true}}}}},
                {"flip_count", 1},
                {"mode", "exact"}};
    const std::string path = write_config("thresh", config);
    const CliResult strict =
        run_cli("attack --config " + path + " --thresholds 3/4,3/4");
    CHECK(strict.exit_code == 0);
    const json cert = json::parse(strict.out);
    CHECK(cert.at("floor") == json{{"num", 2}, {"den", 1}});

    const CliResult invalid =
        run_cli("attack --config " + path + " --thresholds 1/3,1/3");
    CHECK(invalid.exit_code == 1);
}

TEST_CASE("output lands atomically at the configured path") {
    json config{{"instance", standard_instance()},
                {"tester", json{{"catalog", "uniform_sampler"},
                                {"params", json{{"q", 1}, {"with_replacement", true}}}}},
                {"flip_count", 1},
                {"mode", "exact"},
                {"out", "/tmp/qfloor_cli_cert_out.json"}};
    std::remove("/tmp/qfloor_cli_cert_out.json");
    const CliResult result = run_cli("attack --config " + write_config("outfile", config));
    CHECK(result.exit_code == 0);
    CHECK(result.out.empty());
    const json cert = json::parse(slurp("/tmp/qfloor_cli_cert_out.json"));
    CHECK(cert.at("verdict") == "RefutedByGap");
    std::remove("/tmp/qfloor_cli_cert_out.json");
}
