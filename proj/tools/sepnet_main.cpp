// sepnet: detect additive-mixture structure in CPTs, rewrite networks to
// exploit it in variable elimination, and run exact DBN prediction by
// propagating subsystem marginals. Documents are JSON; see README.md.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sepnet/io.hpp"

namespace {

using namespace sepnet;
using nlohmann::json;

std::string read_input(const std::string& path) {
    if (path.empty() || path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DocumentError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const std::string& text, const std::string& output) {
    if (output.empty() || output == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(output, std::ios::binary);
    if (!out) throw DocumentError("cannot open '" + output + "' for writing");
    out << text;
}

VarList resolve_names(const std::vector<std::string>& names, const VarList& declared,
                      const char* what) {
    VarList out;
    for (const std::string& n : names) {
        auto pos = find_var(declared, n);
        if (!pos) throw DocumentError(std::string(what) + ": unknown variable '" + n + "'");
        out.push_back(declared[*pos]);
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<VarList> parse_blocks(const std::vector<std::string>& tokens, const VarList& declared) {
    std::vector<VarList> out;
    for (const std::string& t : tokens) out.push_back(resolve_names(split(t, ','), declared, "--blocks"));
    return out;
}

Assignment parse_evidence(const std::string& text, const VarList& declared) {
    Assignment a;
    if (text.empty()) return a;
    for (const std::string& item : split(text, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw DocumentError("--evidence expects VAR=VAL[,VAR=VAL...], got '" + item + "'");
        const VarList v = resolve_names({item.substr(0, eq)}, declared, "--evidence");
        a.set(v.front(), std::stoi(item.substr(eq + 1)));
    }
    return a;
}

std::vector<VarList> parse_family_flag(const std::string& text, const VarList& declared) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DocumentError(std::string("--family is not valid JSON: ") + e.what());
    }
    std::vector<VarList> out;
    for (const json& s : j) {
        std::vector<std::string> names;
        for (const json& n : s) names.push_back(n.get<std::string>());
        out.push_back(resolve_names(names, declared, "--family"));
    }
    return out;
}

TreeNode parse_tree_flag_node(const json& j, const VarList& declared) {
    TreeNode node;
    if (j.contains("leaf")) {
        std::vector<std::string> names;
        for (const json& n : j.at("leaf")) names.push_back(n.get<std::string>());
        node.subset = resolve_names(names, declared, "--tree");
        return node;
    }
    if (!j.contains("children")) throw DocumentError("--tree: node needs 'leaf' or 'children'");
    for (const json& c : j.at("children")) node.children.push_back(parse_tree_flag_node(c, declared));
    return node;
}

TreeRepresentation parse_tree_flag(const std::string& text, const VarList& declared) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DocumentError(std::string("--tree is not valid JSON: ") + e.what());
    }
    return TreeRepresentation(parse_tree_flag_node(j, declared));
}

const Cpt& find_cpt(const NetworkDocument& doc, const std::string& node) {
    for (const Cpt& c : doc.cpts)
        if (c.child().name == node) return c;
    throw DocumentError("network has no cpt for node '" + node + "'");
}

std::optional<bool> run_oracle(const Cpt& cpt, const std::vector<VarList>& subsets) {
    try {
        return sufficiency_oracle(cpt, subsets);
    } catch (const CapExceededError&) {
        return std::nullopt;
    }
}

struct CommonFlags {
    std::string input;
    std::string output;
    std::string node;
    std::vector<std::string> blocks;
    std::string given;
    std::string tree_json;
    std::string family_json;
    std::string evidence;
    std::string policy = "strict";
    int steps = 0;
    bool exact = false;
    std::uint64_t seed = 1;
    int locations = 4;
    int directions = 4;
};

// Family and tree for a DBN: flags override the document; a family without a
// tree gets the flat one-leaf-per-subset tree.
std::pair<std::vector<VarList>, TreeRepresentation> dbn_family(const DbnDocument& doc,
                                                               const CommonFlags& flags) {
    std::vector<VarList> family;
    if (!flags.family_json.empty())
        family = parse_family_flag(flags.family_json, doc.model.state);
    else if (doc.family)
        family = *doc.family;
    else
        throw DocumentError("no family: pass --family or add one to the document");

    if (!flags.tree_json.empty()) return {family, parse_tree_flag(flags.tree_json, doc.model.state)};
    if (doc.tree) return {family, *doc.tree};
    return {family, TreeRepresentation::flat(family)};
}

int cmd_check(const CommonFlags& flags) {
    const ModelDocument doc = parse_model(read_input(flags.input));
    CheckResultDocument result;

    if (std::holds_alternative<DbnDocument>(doc)) {
        const DbnDocument& dbn = std::get<DbnDocument>(doc);
        const auto [family, tree] = dbn_family(dbn, flags);
        result.mode = "self_sufficient";
        SelfSufficiencyCheck check = check_self_sufficient(dbn.model, family, tree);
        result.sufficient = check.ok();
        if (check.ok()) {
            result.oracle = check.family->oracle_validated ? std::optional<bool>(true) : std::nullopt;
        } else {
            result.failed_subset = "(" + var_names(check.failed_subset) + ")";
            result.failure_path = check.failure_path;
            result.failed_at = check.failed_at;
            result.witness = check.witness;
        }
        emit(write_check_result(result), flags.output);
        return result.sufficient ? 0 : 1;
    }

    const NetworkDocument& net = std::get<NetworkDocument>(doc);
    if (flags.node.empty()) throw DocumentError("check on a network needs --node");
    const Cpt& cpt = find_cpt(net, flags.node);

    if (!flags.tree_json.empty()) {
        const TreeRepresentation tree = parse_tree_flag(flags.tree_json, net.variables);
        result.mode = "tree";
        TreeSeparation sep = tree_separate(cpt, tree);
        result.sufficient = sep.ok();
        result.failure_path = sep.failure_path;
        result.failed_at = sep.failed_at;
        result.witness = sep.witness;
        result.oracle = run_oracle(cpt, tree.leaf_subsets());
    } else if (!flags.given.empty()) {
        if (flags.blocks.size() != 2)
            throw DocumentError("check --given needs exactly two --blocks (the sets X and Y)");
        const auto blocks = parse_blocks(flags.blocks, net.variables);
        const VarList given = resolve_names(split(flags.given, ','), net.variables, "--given");
        result.mode = "conditional";
        ConditionalSeparation sep = conditional_separate(cpt, blocks[0], blocks[1], given);
        result.sufficient = sep.ok();
        if (sep.ok()) {
            result.gamma = sep.decomposition->gamma;
        } else {
            result.failed_at = sep.failed_at;
            result.witness = sep.witness;
        }
        // Conditional separability given W decides sufficiency of {X u W, Y u W}.
        result.oracle =
            run_oracle(cpt, {union_vars(blocks[0], given), union_vars(blocks[1], given)});
    } else {
        std::vector<VarList> blocks = parse_blocks(flags.blocks, net.variables);
        if (blocks.empty())
            for (const Variable& p : cpt.parents()) blocks.push_back({p});
        result.mode = "separable";
        Separation sep = separate_n(cpt, blocks);
        result.sufficient = sep.ok();
        result.degenerate = sep.degenerate_child;
        result.witness = sep.witness;
        result.oracle = run_oracle(cpt, blocks);
    }
    emit(write_check_result(result), flags.output);
    return result.sufficient ? 0 : 1;
}

int cmd_decompose(const CommonFlags& flags) {
    const ModelDocument doc = parse_model(read_input(flags.input));
    if (!std::holds_alternative<NetworkDocument>(doc))
        throw DocumentError("decompose expects a network document");
    const NetworkDocument& net = std::get<NetworkDocument>(doc);
    if (flags.node.empty()) throw DocumentError("decompose needs --node");
    const Cpt& cpt = find_cpt(net, flags.node);

    if (!flags.tree_json.empty() || !flags.given.empty()) {
        TreeRepresentation tree = [&] {
            if (!flags.tree_json.empty()) return parse_tree_flag(flags.tree_json, net.variables);
            // Conditional decomposition given W is the two-leaf tree over
            // X u W and Y u W; the root set is exactly W.
            if (flags.blocks.size() != 2)
                throw DocumentError("decompose --given needs exactly two --blocks");
            const auto blocks = parse_blocks(flags.blocks, net.variables);
            const VarList given = resolve_names(split(flags.given, ','), net.variables, "--given");
            return TreeRepresentation::flat(
                {union_vars(blocks[0], given), union_vars(blocks[1], given)});
        }();
        TreeSeparation sep = tree_separate(cpt, tree);
        if (!sep.ok()) {
            CheckResultDocument fail;
            fail.mode = "tree";
            fail.sufficient = false;
            fail.failure_path = sep.failure_path;
            fail.failed_at = sep.failed_at;
            fail.witness = sep.witness;
            emit(write_check_result(fail), flags.output);
            return 1;
        }
        emit(write_tree_decomposition({*sep.decomposition}), flags.output);
        return 0;
    }

    std::vector<VarList> blocks = parse_blocks(flags.blocks, net.variables);
    if (blocks.empty())
        for (const Variable& p : cpt.parents()) blocks.push_back({p});
    Separation sep = separate_n(cpt, blocks);
    if (!sep.ok()) {
        CheckResultDocument fail;
        fail.mode = "separable";
        fail.sufficient = false;
        fail.witness = sep.witness;
        emit(write_check_result(fail), flags.output);
        return 1;
    }
    emit(write_decomposition({*sep.decomposition, sep.trace, sep.degenerate_child}), flags.output);
    return 0;
}

int cmd_transform(const CommonFlags& flags) {
    const ModelDocument doc = parse_model(read_input(flags.input));
    if (!std::holds_alternative<NetworkDocument>(doc))
        throw DocumentError("transform expects a network document");
    const NetworkDocument& net = std::get<NetworkDocument>(doc);

    std::vector<NodeAnnotation> annotations;
    if (!flags.node.empty())
        annotations.push_back({flags.node, parse_blocks(flags.blocks, net.variables)});

    FactorsDocument out;
    try {
        out.factors = transform_network(net.cpts, annotations);
    } catch (const NotSeparableError& e) {
        CheckResultDocument fail;
        fail.mode = "separable";
        fail.sufficient = false;
        fail.failed_subset = e.node;
        fail.witness = e.witness;
        emit(write_check_result(fail), flags.output);
        return 1;
    }
    out.variables = net.variables;
    for (const NodeAnnotation& a : annotations) {
        const Cpt& cpt = find_cpt(net, a.node);
        std::size_t n = a.blocks.empty() ? cpt.parents().size() : a.blocks.size();
        out.variables.emplace_back(selector_name(a.node), static_cast<int>(n));
        out.selectors.push_back(selector_name(a.node));
    }
    emit(write_factors(out), flags.output);
    return 0;
}

int cmd_predict(const CommonFlags& flags) {
    const ModelDocument doc = parse_model(read_input(flags.input));
    if (!std::holds_alternative<DbnDocument>(doc)) throw DocumentError("predict expects a dbn document");
    const DbnDocument& dbn = std::get<DbnDocument>(doc);
    const Assignment evidence = parse_evidence(flags.evidence, dbn.model.state);

    PredictionDocument out;
    out.steps = flags.steps;
    out.exact = flags.exact;

    if (flags.exact) {
        DbnModel model = dbn.model;
        if (!evidence.empty()) {
            if (!model.initial_joint)
                throw DocumentError("exact prediction with evidence needs an initial joint");
            model.initial_joint = normalize(restrict_to_evidence(*model.initial_joint, evidence));
        }
        out.joints = predict_exact(model, flags.steps);
        emit(write_prediction(out), flags.output);
        return 0;
    }

    const auto [family_subsets, tree] = dbn_family(dbn, flags);
    SelfSufficiencyCheck check = check_self_sufficient(dbn.model, family_subsets, tree);
    if (!check.ok()) {
        CheckResultDocument fail;
        fail.mode = "self_sufficient";
        fail.sufficient = false;
        fail.failed_subset = "(" + var_names(check.failed_subset) + ")";
        fail.failure_path = check.failure_path;
        fail.failed_at = check.failed_at;
        fail.witness = check.witness;
        emit(write_check_result(fail), flags.output);
        return 1;
    }

    DbnModel model = dbn.model;
    if (!evidence.empty()) {
        const MarginalSet q0 = initial_marginals(model, family_subsets);
        const FilterPolicy policy =
            flags.policy == "demonstrate" ? FilterPolicy::Demonstrate : FilterPolicy::Strict;
        FilterOutcome filtered = filter_step(*check.family, q0, evidence, policy);
        out.approximate = filtered.approximate;
        model.initial_joint.reset();
        model.initial_marginals = std::move(filtered.marginals);
    }
    out.marginals = predict_marginals(*check.family, model, flags.steps);
    emit(write_prediction(out), flags.output);
    return 0;
}

int cmd_compare(const CommonFlags& flags) {
    const ModelDocument doc = parse_model(read_input(flags.input));
    if (!std::holds_alternative<DbnDocument>(doc)) throw DocumentError("compare expects a dbn document");
    const DbnDocument& dbn = std::get<DbnDocument>(doc);
    const auto [family_subsets, tree] = dbn_family(dbn, flags);

    SelfSufficiencyCheck check = check_self_sufficient(dbn.model, family_subsets, tree);
    if (!check.ok()) {
        CheckResultDocument fail;
        fail.mode = "self_sufficient";
        fail.sufficient = false;
        fail.failed_subset = "(" + var_names(check.failed_subset) + ")";
        fail.failure_path = check.failure_path;
        fail.failed_at = check.failed_at;
        fail.witness = check.witness;
        emit(write_check_result(fail), flags.output);
        return 1;
    }

    const auto marg = predict_marginals(*check.family, dbn.model, flags.steps);
    const auto exact = predict_exact(dbn.model, flags.steps);

    ComparisonDocument out;
    out.steps = flags.steps;
    for (int t = 0; t <= flags.steps; ++t) {
        double worst = 0.0;
        for (std::size_t i = 0; i < family_subsets.size(); ++i)
            worst = std::max(worst, max_abs_diff(marg[static_cast<std::size_t>(t)].marginals[i],
                                                 marginalize_to(exact[static_cast<std::size_t>(t)],
                                                                family_subsets[i])));
        out.per_step_max_divergence.push_back(worst);
        out.max_divergence = std::max(out.max_divergence, worst);
    }

    // Optional joint queries: compare the exact joint over the listed
    // variables with the product of their propagated single-variable marginals.
    for (const VarList& pair : parse_blocks(flags.blocks, dbn.model.state)) {
        ComparisonDocument::PairDivergence pd;
        pd.vars = pair;
        for (int t = 0; t <= flags.steps; ++t) {
            Factor recon = Factor::scalar(1.0);
            for (const Variable& v : pair)
                recon = multiply(recon, marg[static_cast<std::size_t>(t)].marginal_for({v}));
            const double d =
                max_abs_diff(marginalize_to(exact[static_cast<std::size_t>(t)], pair), recon);
            pd.per_step.push_back(d);
            pd.max = std::max(pd.max, d);
        }
        out.pairs.push_back(std::move(pd));
    }

    out.cost = cost_report(*check.family, dbn.model, flags.steps);
    emit(write_comparison(out), flags.output);
    return 0;
}

int cmd_demo(const std::string& kind, const CommonFlags& flags) {
    GeneratedDbn g;
    if (kind == "weather") {
        g = make_weather(demo_weather_spec(flags.locations, flags.directions, flags.seed));
    } else if (kind == "figure5") {
        g = make_figure5();
    } else if (kind == "modes") {
        g = make_from_modes(demo_mode_spec(flags.seed));
    } else {
        throw DocumentError("unknown demo '" + kind + "' (weather | figure5 | modes)");
    }
    DbnDocument doc;
    doc.model = std::move(g.model);
    doc.family = std::move(g.family);
    doc.tree = std::move(g.tree);
    emit(write_dbn(doc), flags.output);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"separable-structure toolkit for Bayesian networks and DBNs"};
    app.require_subcommand(1);
    CommonFlags flags;
    std::string demo_kind;

    auto add_io = [&](CLI::App* cmd, bool input) {
        if (input) cmd->add_option("model", flags.input, "model document path (- or empty: stdin)");
        cmd->add_option("--output", flags.output, "write the result document here instead of stdout");
    };

    CLI::App* check = app.add_subcommand("check", "decide sufficiency / self-sufficiency");
    add_io(check, true);
    check->add_option("--node", flags.node, "child variable to test (network documents)");
    check->add_option("--blocks", flags.blocks, "parent blocks, each a comma-joined variable list");
    check->add_option("--given", flags.given, "conditioning set (comma-joined)");
    check->add_option("--tree", flags.tree_json, "tree representation (JSON)");
    check->add_option("--family", flags.family_json, "family subsets (JSON, dbn documents)");

    CLI::App* decompose = app.add_subcommand("decompose", "emit a mixture decomposition");
    add_io(decompose, true);
    decompose->add_option("--node", flags.node, "child variable to decompose")->required();
    decompose->add_option("--blocks", flags.blocks, "parent blocks");
    decompose->add_option("--given", flags.given, "conditioning set");
    decompose->add_option("--tree", flags.tree_json, "tree representation (JSON)");

    CLI::App* transform = app.add_subcommand("transform", "rewrite a network with selector factors");
    add_io(transform, true);
    transform->add_option("--node", flags.node, "node to decompose");
    transform->add_option("--blocks", flags.blocks, "parent blocks (default: one per parent)");

    CLI::App* predict = app.add_subcommand("predict", "propagate subset marginals (or --exact joints)");
    add_io(predict, true);
    predict->add_option("--steps", flags.steps, "horizon T")->required();
    predict->add_flag("--exact", flags.exact, "propagate the full joint instead");
    predict->add_option("--family", flags.family_json, "family subsets (JSON)");
    predict->add_option("--tree", flags.tree_json, "tree representation (JSON)");
    predict->add_option("--evidence", flags.evidence, "VAR=VAL[,...] applied at t=0");
    predict->add_option("--policy", flags.policy, "strict | demonstrate")
        ->check(CLI::IsMember({"strict", "demonstrate"}));

    CLI::App* compare = app.add_subcommand("compare", "marginal propagation vs the exact joint");
    add_io(compare, true);
    compare->add_option("--steps", flags.steps, "horizon T")->required();
    compare->add_option("--family", flags.family_json, "family subsets (JSON)");
    compare->add_option("--tree", flags.tree_json, "tree representation (JSON)");
    compare->add_option("--blocks", flags.blocks,
                        "joint queries to reconstruct from single-variable marginals");

    CLI::App* demo = app.add_subcommand("demo", "emit a ready-made model document");
    demo->add_option("kind", demo_kind, "weather | figure5 | modes")->required();
    demo->add_option("--locations", flags.locations, "weather: number of locations");
    demo->add_option("--directions", flags.directions, "weather: wind cardinality");
    demo->add_option("--seed", flags.seed, "generator seed");
    add_io(demo, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (check->parsed()) return cmd_check(flags);
        if (decompose->parsed()) return cmd_decompose(flags);
        if (transform->parsed()) return cmd_transform(flags);
        if (predict->parsed()) return cmd_predict(flags);
        if (compare->parsed()) return cmd_compare(flags);
        if (demo->parsed()) return cmd_demo(demo_kind, flags);
    } catch (const DocumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FactorError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
