#include "qfloor/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qfloor {

using nlohmann::json;

json rational_to_json(const Rational& value) {
    return json{{"num", value.num()}, {"den", value.den()}};
}

Rational rational_from_json(const json& j) {
    if (j.is_object())
        return Rational(j.at("num").get<std::int64_t>(), j.at("den").get<std::int64_t>());
    if (j.is_string())
        return Rational::parse(j.get<std::string>());
    if (j.is_number_integer())
        return Rational(j.get<std::int64_t>());
    throw std::invalid_argument("rational_from_json: expected {num,den}, \"a/b\", or integer");
}

json mc_estimate_to_json(const McEstimate& value) {
    return json{{"estimate", value.estimate},
                {"half_width", value.half_width},
                {"confidence", value.confidence}};
}

json prob_value_to_json(const ProbValue& value) {
    if (value.mode == EvalMode::Exact)
        return rational_to_json(value.exact);
    return mc_estimate_to_json(value.mc);
}

json marginals_to_json(const MarginalMap& marginals) {
    json rows = json::array();
    if (marginals.mode == EvalMode::Exact) {
        for (const auto& [position, p] : marginals.exact)
            rows.push_back(json{{"position", position}, {"p", rational_to_json(p)}});
    } else {
        for (const auto& [position, estimate] : marginals.mc)
            rows.push_back(json{{"position", position}, {"p", mc_estimate_to_json(estimate)}});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Decision trees
// ---------------------------------------------------------------------------

json tree_to_json(const DecisionTree& tree) {
    json nodes = json::array();
    for (const TreeNode& node : tree.nodes) {
        if (const auto* leaf = std::get_if<LeafNode>(&node)) {
            nodes.push_back(json{{"kind", "leaf"},
                                 {"decision", leaf->accept ? "accept" : "reject"}});
        } else if (const auto* query = std::get_if<QueryNode>(&node)) {
            nodes.push_back(json{{"kind", "query"},
                                 {"position", query->position},
                                 {"children", query->children}});
        } else {
            const auto& chance = std::get<ChanceNode>(node);
            json branches = json::array();
            for (const ChanceBranch& branch : chance.branches)
                branches.push_back(json{{"weight", rational_to_json(branch.weight)},
                                        {"child", branch.child}});
            nodes.push_back(json{{"kind", "chance"}, {"branches", std::move(branches)}});
        }
    }
    return json{{"schema_version", 1},
                {"alphabet", tree.alphabet.symbols()},
                {"word_length", tree.word_length},
                {"query_budget", tree.query_budget},
                {"root", tree.root},
                {"nodes", std::move(nodes)}};
}

DecisionTree tree_from_json(const json& j) {
    DecisionTree tree;
    tree.alphabet = Alphabet(j.at("alphabet").get<std::string>());
    tree.word_length = j.at("word_length").get<std::size_t>();
    tree.query_budget = j.at("query_budget").get<std::size_t>();
    tree.root = j.at("root").get<std::uint32_t>();
    for (const json& node : j.at("nodes")) {
        const std::string kind = node.at("kind").get<std::string>();
        if (kind == "leaf") {
            const std::string decision = node.at("decision").get<std::string>();
            if (decision != "accept" && decision != "reject")
                throw std::invalid_argument("tree_from_json: decision must be accept|reject");
            tree.add(LeafNode{decision == "accept"});
        } else if (kind == "query") {
            QueryNode query;
            query.position = node.at("position").get<std::size_t>();
            query.children = node.at("children").get<std::vector<std::uint32_t>>();
            tree.add(std::move(query));
        } else if (kind == "chance") {
            ChanceNode chance;
            for (const json& branch : node.at("branches"))
                chance.branches.push_back({rational_from_json(branch.at("weight")),
                                           branch.at("child").get<std::uint32_t>()});
            tree.add(std::move(chance));
        } else {
            throw std::invalid_argument("tree_from_json: unknown node kind '" + kind + "'");
        }
    }
    tree.validate();
    return tree;
}

// ---------------------------------------------------------------------------
// Certificates and reports
// ---------------------------------------------------------------------------

json certificate_to_json(const Certificate& certificate) {
    json j{{"schema_version", certificate.schema_version},
           {"tester", certificate.tester_name},
           {"mode", certificate.mode == EvalMode::Exact ? "exact" : "montecarlo"},
           {"word_length", certificate.word_length},
           {"difference_count", certificate.difference_count},
           {"flip_count", certificate.flip_count},
           {"query_budget", certificate.query_budget},
           {"transformed_budget", certificate.transformed_budget},
           {"marginals", marginals_to_json(certificate.marginals)},
           {"flip_set", certificate.flip_set},
           {"attack_word", certificate.attack_word},
           {"accept_on_v", prob_value_to_json(certificate.accept_on_v)},
           {"accept_on_attack", prob_value_to_json(certificate.accept_on_attack)},
           {"gap", prob_value_to_json(certificate.gap)},
           {"union_bound", rational_to_json(certificate.union_bound)},
           {"floor", rational_to_json(certificate.floor)},
           {"thresholds",
            json{{"accept_completeness",
                  rational_to_json(certificate.thresholds.accept_completeness)},
                 {"reject_soundness",
                  rational_to_json(certificate.thresholds.reject_soundness)}}},
           {"verdict", to_string(certificate.verdict)}};
    if (certificate.mode == EvalMode::MonteCarlo) {
        j["seed"] = certificate.seed;
        j["trials"] = certificate.trials;
    }
    if (certificate.floor_claimed)
        j["floor_claimed"] = rational_to_json(*certificate.floor_claimed);
    return j;
}

json graded_report_to_json(const GradedDistanceReport& report) {
    json j{{"passed", report.passed},
           {"exhaustive", report.exhaustive},
           {"subsets_checked", report.subsets_checked}};
    if (report.counterexample) {
        j["counterexample"] = json{
            {"subset", report.counterexample->subset},
            {"expected", rational_to_json(report.counterexample->expected)},
            {"actual", rational_to_json(report.counterexample->actual)}};
    }
    return j;
}

namespace {

json hybrid_check_to_json(const HybridCheck& check) {
    return json{{"subset", check.subset},
                {"acceptance", prob_value_to_json(check.acceptance)},
                {"ok", check.ok}};
}

json epsilon_failure_to_json(const EpsilonFailure& entry) {
    return json{{"word", entry.word},
                {"distance", rational_to_json(entry.distance)},
                {"acceptance", prob_value_to_json(entry.acceptance)},
                {"is_member", entry.is_member}};
}

} // namespace

json distinguisher_report_to_json(const DistinguisherReport& report) {
    json failures = json::array();
    for (const HybridCheck& check : report.failures)
        failures.push_back(hybrid_check_to_json(check));
    json j{{"outcome", to_string(report.outcome)},
           {"accept_on_v", prob_value_to_json(report.accept_on_v)},
           {"completeness_ok", report.completeness_ok},
           {"exhaustive", report.exhaustive},
           {"hybrids_checked", report.hybrids_checked},
           {"failures", std::move(failures)}};
    if (report.worst)
        j["worst"] = hybrid_check_to_json(*report.worst);
    return j;
}

json epsilon_report_to_json(const EpsilonTestReport& report) {
    json failures = json::array();
    for (const EpsilonFailure& entry : report.failures)
        failures.push_back(epsilon_failure_to_json(entry));
    json j{{"outcome", to_string(report.outcome)},
           {"words_swept", report.words_swept},
           {"members_checked", report.members_checked},
           {"far_words_checked", report.far_words_checked},
           {"failures", std::move(failures)}};
    if (report.worst_member)
        j["worst_member"] = epsilon_failure_to_json(*report.worst_member);
    if (report.worst_far_word)
        j["worst_far_word"] = epsilon_failure_to_json(*report.worst_far_word);
    return j;
}

json equivalence_report_to_json(const EquivalenceReport& report) {
    json rows = json::array();
    for (const EquivalenceRow& row : report.rows)
        rows.push_back(json{
            {"input", row.input.str()},
            {"acceptance_original", rational_to_json(row.acceptance_original)},
            {"acceptance_transformed", rational_to_json(row.acceptance_transformed)},
            {"mismatch_probability", rational_to_json(row.mismatch_probability)},
            {"ok", row.ok}});
    return json{{"all_ok", report.all_ok}, {"rows", std::move(rows)}};
}

// ---------------------------------------------------------------------------
// Property files
// ---------------------------------------------------------------------------

json property_to_json(const Property& property) {
    json members = json::array();
    for (const Word& member : property.members())
        members.push_back(member.str());
    return json{{"alphabet", property.alphabet().symbols()},
                {"n", property.word_length()},
                {"members", std::move(members)}};
}

Property property_from_json(const json& j) {
    const Alphabet alphabet(j.at("alphabet").get<std::string>());
    const std::size_t n = j.at("n").get<std::size_t>();
    std::vector<Word> members;
    for (const json& entry : j.at("members")) {
        Word member = Word::parse(alphabet, entry.get<std::string>());
        if (member.size() != n)
            throw std::invalid_argument("property: member length differs from declared n");
        members.push_back(std::move(member));
    }
    return Property(alphabet, n, std::move(members));
}

namespace {

Property property_from_text(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        const auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos)
            continue;
        const auto end = line.find_last_not_of(" \t\r");
        line = line.substr(start, end - start + 1);
        if (line.empty() || line[0] == '#')
            continue;
        lines.push_back(line);
    }
    if (lines.size() < 2)
        throw std::invalid_argument("property file: need an alphabet line and an n line");
    const Alphabet alphabet(lines[0]);
    std::size_t n = 0;
    try {
        n = static_cast<std::size_t>(std::stoull(lines[1]));
    } catch (const std::logic_error&) {
        throw std::invalid_argument("property file: second line must be the word length");
    }
    std::vector<Word> members;
    for (std::size_t i = 2; i < lines.size(); ++i) {
        Word member = Word::parse(alphabet, lines[i]);
        if (member.size() != n)
            throw std::invalid_argument("property file: member length differs from declared n");
        members.push_back(std::move(member));
    }
    return Property(alphabet, n, std::move(members));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

Property load_property_file(const std::string& path) {
    const std::string contents = read_file(path);
    const auto first = contents.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && contents[first] == '{')
        return property_from_json(json::parse(contents));
    std::istringstream in(contents);
    return property_from_text(in);
}

DecisionTree load_tree_file(const std::string& path) {
    return tree_from_json(json::parse(read_file(path)));
}

void write_text_atomic(const std::string& path, const std::string& contents) {
    const std::string temp = path + ".tmp";
    {
        std::ofstream out(temp, std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write file: " + temp);
        out << contents;
    }
    if (std::rename(temp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot rename " + temp + " to " + path);
}

} // namespace qfloor
