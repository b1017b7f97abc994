#include "sepnet/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include <json.hpp>

namespace sepnet {

using nlohmann::json;

std::string format_double(double v) {
    char buf[48];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out;
}

std::string jstr(const std::string& s) { return "\"" + escape(s) + "\""; }

std::string jnums(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += format_double(v[i]);
    }
    return s + "]";
}

std::string jints(const std::vector<std::size_t>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(v[i]);
    }
    return s + "]";
}

std::string jnames(const VarList& vars) {
    std::string s = "[";
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (i) s += ", ";
        s += jstr(vars[i].name);
    }
    return s + "]";
}

std::string jstrings(const std::vector<std::string>& names) {
    std::string s = "[";
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) s += ", ";
        s += jstr(names[i]);
    }
    return s + "]";
}

std::string jvariables(const VarList& vars, const std::string& indent) {
    std::string s = "[\n";
    for (std::size_t i = 0; i < vars.size(); ++i) {
        s += indent + "  {\"name\": " + jstr(vars[i].name) +
             ", \"cardinality\": " + std::to_string(vars[i].cardinality) + "}";
        s += i + 1 < vars.size() ? ",\n" : "\n";
    }
    return s + indent + "]";
}

// Assignment as an object with alphabetically sorted keys, so the byte form
// does not depend on the scope order it was built from.
std::string jassignment(const Assignment& a) {
    std::vector<std::pair<std::string, int>> items;
    for (const auto& [v, val] : a.entries()) items.emplace_back(v.name, val);
    std::sort(items.begin(), items.end());
    std::string s = "{";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) s += ", ";
        s += jstr(items[i].first) + ": " + std::to_string(items[i].second);
    }
    return s + "}";
}

std::string jcpt_entry(const std::string& child_name, const VarList& parents,
                       const std::vector<double>& table) {
    return "{\"child\": " + jstr(child_name) + ", \"parents\": " + jnames(parents) +
           ", \"table\": " + jnums(table) + "}";
}

std::string jwitness(const AdditivityWitness& w) {
    return "{\"assignment\": " + jassignment(w.parents) +
           ", \"child_value\": " + std::to_string(w.child_value) +
           ", \"table_value\": " + format_double(w.table_value) +
           ", \"additive_value\": " + format_double(w.additive_value) + "}";
}

void write_tree_node(std::string& s, const TreeRepresentation& tree, std::size_t id) {
    if (tree.is_leaf(id)) {
        s += "{\"leaf\": " + jnames(tree.subset_of(id)) + "}";
        return;
    }
    s += "{\"vars\": " + jnames(tree.located_at(id)) + ", \"children\": [";
    const auto& ch = tree.children_of(id);
    for (std::size_t i = 0; i < ch.size(); ++i) {
        if (i) s += ", ";
        write_tree_node(s, tree, ch[i]);
    }
    s += "]}";
}

// ---- parse helpers ---------------------------------------------------------

const json& req(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw DocumentError(std::string("missing field '") + key + "'");
    return *it;
}

std::string req_string(const json& j, const char* key) {
    const json& v = req(j, key);
    if (!v.is_string()) throw DocumentError(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> parse_table(const json& j) {
    if (!j.is_array()) throw DocumentError("'table' must be an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const json& v : j) {
        if (!v.is_number()) throw DocumentError("'table' must contain only numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

using VarMap = std::map<std::string, Variable>;

// Parses the declaration list, preserving its order (documents round-trip
// byte-exactly, so the order is part of the document).
VarMap parse_variables(const json& j, int min_cardinality, VarList* ordered = nullptr) {
    const json& arr = req(j, "variables");
    if (!arr.is_array()) throw DocumentError("'variables' must be an array");
    VarMap vars;
    for (const json& v : arr) {
        const std::string name = req_string(v, "name");
        const json& card = req(v, "cardinality");
        if (!card.is_number_integer()) throw DocumentError("'cardinality' must be an integer");
        const int c = card.get<int>();
        if (c < min_cardinality)
            throw DocumentError("variable '" + name + "' has cardinality " + std::to_string(c) +
                                " (must be >= " + std::to_string(min_cardinality) + ")");
        if (!vars.emplace(name, Variable(name, c)).second)
            throw DocumentError("duplicate variable '" + name + "'");
        if (ordered) ordered->emplace_back(name, c);
    }
    return vars;
}

Variable lookup(const VarMap& vars, const std::string& name) {
    auto it = vars.find(name);
    if (it == vars.end()) throw DocumentError("undeclared variable '" + name + "'");
    return it->second;
}

VarList parse_name_list(const json& j, const VarMap& vars) {
    if (!j.is_array()) throw DocumentError("expected an array of variable names");
    VarList out;
    for (const json& v : j) {
        if (!v.is_string()) throw DocumentError("variable references must be strings");
        out.push_back(lookup(vars, v.get<std::string>()));
    }
    return out;
}

Assignment parse_assignment(const json& j, const VarMap& vars) {
    if (!j.is_object()) throw DocumentError("an assignment must be an object of name: value");
    Assignment a;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_number_integer()) throw DocumentError("assignment values must be integers");
        a.set(lookup(vars, it.key()), it.value().get<int>());
    }
    return a;
}

TreeNode parse_tree_node(const json& j, const VarMap& vars) {
    TreeNode node;
    if (j.contains("leaf")) {
        node.subset = parse_name_list(j.at("leaf"), vars);
        return node;
    }
    const json& ch = req(j, "children");
    if (!ch.is_array() || ch.empty()) throw DocumentError("internal tree node needs 'children'");
    for (const json& c : ch) node.children.push_back(parse_tree_node(c, vars));
    return node;
}

// The "vars" labels on internal nodes are derived data; when present they
// must match the derived locations.
void validate_tree_labels(const json& j, const TreeRepresentation& tree, std::size_t& id) {
    const std::size_t self = id++;
    if (j.contains("leaf")) return;
    if (j.contains("vars")) {
        VarList claimed;
        for (const json& v : j.at("vars")) {
            auto pos = find_var(tree.vars_under(0), v.get<std::string>());
            if (!pos) throw DocumentError("tree 'vars' mentions unknown variable");
            claimed.push_back(tree.vars_under(0)[*pos]);
        }
        if (!same_var_set(claimed, tree.located_at(self)))
            throw DocumentError("tree node 'vars' does not match the derived variable locations");
    }
    for (const json& c : j.at("children")) validate_tree_labels(c, tree, id);
}

NetworkDocument parse_network(const json& j) {
    NetworkDocument doc;
    const VarMap vars = parse_variables(j, 2, &doc.variables);
    const json& cpts = req(j, "cpts");
    if (!cpts.is_array()) throw DocumentError("'cpts' must be an array");
    for (const json& c : cpts) {
        const Variable child = lookup(vars, req_string(c, "child"));
        VarList parents = parse_name_list(req(c, "parents"), vars);
        try {
            doc.cpts.emplace_back(child, std::move(parents), parse_table(req(c, "table")));
        } catch (const FactorError& e) {
            throw DocumentError(std::string("invalid cpt for '") + child.name + "': " + e.what());
        }
    }
    return doc;
}

DbnDocument parse_dbn(const json& j) {
    DbnDocument doc;
    const VarMap vars = parse_variables(j, 2);
    doc.model.state = parse_name_list(req(j, "state"), vars);

    std::map<std::string, Cpt> transitions;
    const json& trs = req(j, "transitions");
    if (!trs.is_array()) throw DocumentError("'transitions' must be an array");
    for (const json& t : trs) {
        const Variable child = lookup(vars, req_string(t, "child"));
        VarList parents = parse_name_list(req(t, "parents"), vars);
        try {
            Cpt cpt(next_copy(child), std::move(parents), parse_table(req(t, "table")));
            if (!transitions.emplace(child.name, std::move(cpt)).second)
                throw DocumentError("duplicate transition for '" + child.name + "'");
        } catch (const FactorError& e) {
            throw DocumentError(std::string("invalid transition for '") + child.name + "': " + e.what());
        }
    }
    for (const Variable& s : doc.model.state) {
        auto it = transitions.find(s.name);
        if (it == transitions.end()) throw DocumentError("missing transition for state variable '" + s.name + "'");
        doc.model.transitions.push_back(it->second);
    }

    const json& init = req(j, "initial");
    if (init.contains("joint")) {
        try {
            doc.model.initial_joint = Factor(doc.model.state, parse_table(init.at("joint")));
            doc.model.initial_joint->throw_if_negative("initial joint");
        } catch (const FactorError& e) {
            throw DocumentError(std::string("invalid initial joint: ") + e.what());
        }
    } else if (init.contains("marginals")) {
        MarginalSet ms;
        for (const json& m : init.at("marginals")) {
            ms.subsets.push_back(parse_name_list(req(m, "vars"), vars));
            try {
                Factor f(ms.subsets.back(), parse_table(req(m, "table")));
                f.throw_if_negative("initial marginal");
                ms.marginals.push_back(normalize(f));
            } catch (const FactorError& e) {
                throw DocumentError(std::string("invalid initial marginal: ") + e.what());
            }
        }
        doc.model.initial_marginals = std::move(ms);
    } else {
        throw DocumentError("'initial' must contain 'joint' or 'marginals'");
    }

    if (j.contains("family")) {
        std::vector<VarList> family;
        for (const json& f : j.at("family")) family.push_back(parse_name_list(f, vars));
        doc.family = std::move(family);
    }
    if (j.contains("tree")) {
        try {
            doc.tree = TreeRepresentation(parse_tree_node(j.at("tree"), vars));
        } catch (const FactorError& e) {
            throw DocumentError(std::string("invalid tree: ") + e.what());
        }
        std::size_t id = 0;
        validate_tree_labels(j.at("tree"), *doc.tree, id);
    }

    try {
        doc.model.validate();
    } catch (const FactorError& e) {
        throw DocumentError(std::string("invalid dbn: ") + e.what());
    }
    return doc;
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw DocumentError(std::string("not valid JSON: ") + e.what());
    }
}

} // namespace

ModelDocument parse_model(const std::string& text) {
    const json j = parse_json(text);
    const std::string kind = req_string(j, "kind");
    if (kind == "network") return parse_network(j);
    if (kind == "dbn") return parse_dbn(j);
    throw DocumentError("unknown model kind '" + kind + "'");
}

std::string write_network(const NetworkDocument& doc) {
    std::string s = "{\n  \"kind\": \"network\",\n  \"variables\": ";
    s += jvariables(doc.variables, "  ");
    s += ",\n  \"cpts\": [\n";
    for (std::size_t i = 0; i < doc.cpts.size(); ++i) {
        s += "    " + jcpt_entry(doc.cpts[i].child().name, doc.cpts[i].parents(),
                                 doc.cpts[i].table().values());
        s += i + 1 < doc.cpts.size() ? ",\n" : "\n";
    }
    s += "  ]\n}\n";
    return s;
}

std::string write_dbn(const DbnDocument& doc) {
    std::string s = "{\n  \"kind\": \"dbn\",\n  \"variables\": ";
    s += jvariables(doc.model.state, "  ");
    s += ",\n  \"state\": " + jnames(doc.model.state);
    s += ",\n  \"transitions\": [\n";
    for (std::size_t i = 0; i < doc.model.transitions.size(); ++i) {
        s += "    " + jcpt_entry(doc.model.state[i].name, doc.model.transitions[i].parents(),
                                 doc.model.transitions[i].table().values());
        s += i + 1 < doc.model.transitions.size() ? ",\n" : "\n";
    }
    s += "  ],\n  \"initial\": ";
    if (doc.model.initial_joint) {
        s += "{\"joint\": " + jnums(doc.model.initial_joint->values()) + "}";
    } else if (doc.model.initial_marginals) {
        s += "{\"marginals\": [\n";
        const MarginalSet& ms = *doc.model.initial_marginals;
        for (std::size_t i = 0; i < ms.subsets.size(); ++i) {
            s += "    {\"vars\": " + jnames(ms.subsets[i]) + ", \"table\": " +
                 jnums(ms.marginals[i].values()) + "}";
            s += i + 1 < ms.subsets.size() ? ",\n" : "\n";
        }
        s += "  ]}";
    } else {
        throw DocumentError("dbn document requires an initial distribution");
    }
    if (doc.family) {
        s += ",\n  \"family\": [";
        for (std::size_t i = 0; i < doc.family->size(); ++i) {
            if (i) s += ", ";
            s += jnames((*doc.family)[i]);
        }
        s += "]";
    }
    if (doc.tree) {
        s += ",\n  \"tree\": ";
        write_tree_node(s, *doc.tree, 0);
    }
    s += "\n}\n";
    return s;
}

std::string write_model(const ModelDocument& doc) {
    if (std::holds_alternative<NetworkDocument>(doc))
        return write_network(std::get<NetworkDocument>(doc));
    return write_dbn(std::get<DbnDocument>(doc));
}

namespace {

VarList decomposition_variables(const SeparableDecomposition& d) {
    VarList vars{d.child};
    for (const VarList& b : d.blocks) vars = union_vars(vars, b);
    return vars;
}

} // namespace

std::string write_decomposition(const DecompositionDocument& doc) {
    const SeparableDecomposition& d = doc.decomposition;
    std::string s = "{\n  \"kind\": \"decomposition\",\n  \"variables\": ";
    s += jvariables(decomposition_variables(d), "  ");
    s += ",\n  \"child\": " + jstr(d.child.name);
    s += ",\n  \"blocks\": [";
    for (std::size_t i = 0; i < d.blocks.size(); ++i) {
        if (i) s += ", ";
        s += jnames(d.blocks[i]);
    }
    s += "],\n  \"weights\": " + jnums(d.weights);
    s += ",\n  \"degenerate\": " + std::string(doc.degenerate ? "true" : "false");
    s += ",\n  \"components\": [\n";
    for (std::size_t i = 0; i < d.components.size(); ++i) {
        s += "    {\"parents\": " + jnames(d.components[i].parents()) + ", \"table\": " +
             jnums(d.components[i].table().values()) + "}";
        s += i + 1 < d.components.size() ? ",\n" : "\n";
    }
    s += "  ]";
    if (doc.trace) {
        const DecompositionTrace& t = *doc.trace;
        s += ",\n  \"trace\": {\n";
        s += "    \"z1\": " + std::to_string(t.z1) + ",\n";
        s += "    \"reference\": " + jassignment(t.reference) + ",\n";
        s += "    \"baseline\": " + jnums(t.baseline.values()) + ",\n";
        s += "    \"deltas\": [\n";
        for (std::size_t i = 0; i < t.deltas.size(); ++i) {
            VarList block(t.deltas[i].scope().begin(), t.deltas[i].scope().end() - 1);
            s += "      {\"vars\": " + jnames(block) + ", \"table\": " + jnums(t.deltas[i].values()) + "}";
            s += i + 1 < t.deltas.size() ? ",\n" : "\n";
        }
        s += "    ],\n";
        s += "    \"ranges\": " + jnums(t.ranges) + "\n  }";
    }
    s += "\n}\n";
    return s;
}

DecompositionDocument parse_decomposition(const std::string& text) {
    const json j = parse_json(text);
    if (req_string(j, "kind") != "decomposition") throw DocumentError("not a decomposition document");
    const VarMap vars = parse_variables(j, 1);

    DecompositionDocument doc;
    SeparableDecomposition& d = doc.decomposition;
    d.child = lookup(vars, req_string(j, "child"));
    for (const json& b : req(j, "blocks")) d.blocks.push_back(parse_name_list(b, vars));
    for (const json& w : req(j, "weights")) d.weights.push_back(w.get<double>());
    doc.degenerate = req(j, "degenerate").get<bool>();
    for (const json& c : req(j, "components")) {
        VarList parents = parse_name_list(req(c, "parents"), vars);
        try {
            d.components.emplace_back(d.child, std::move(parents), parse_table(req(c, "table")));
        } catch (const FactorError& e) {
            throw DocumentError(std::string("invalid component: ") + e.what());
        }
    }
    if (j.contains("trace")) {
        const json& t = j.at("trace");
        DecompositionTrace trace;
        trace.z1 = req(t, "z1").get<int>();
        trace.reference = parse_assignment(req(t, "reference"), vars);
        trace.baseline = Factor({d.child}, parse_table(req(t, "baseline")));
        for (const json& del : req(t, "deltas")) {
            VarList scope = parse_name_list(req(del, "vars"), vars);
            scope.push_back(d.child);
            trace.deltas.emplace_back(std::move(scope), parse_table(req(del, "table")));
        }
        for (const json& r : req(t, "ranges")) trace.ranges.push_back(r.get<double>());
        doc.trace = std::move(trace);
    }
    try {
        d.validate();
    } catch (const FactorError& e) {
        throw DocumentError(std::string("decomposition does not re-validate: ") + e.what());
    }
    return doc;
}

namespace {

void collect_tree_dec_vars(const TreeDecomposition& d, VarList& vars) {
    if (d.is_leaf()) {
        vars = union_vars(vars, d.leaf_subset);
        vars = union_vars(vars, d.leaf_cpt->parents());
        vars = union_vars(vars, {d.leaf_cpt->child()});
        return;
    }
    vars = union_vars(vars, d.root_set);
    for (const auto& br : d.branches)
        for (const TreeDecomposition& c : br.children) collect_tree_dec_vars(c, vars);
}

void write_tree_dec_node(std::string& s, const TreeDecomposition& d) {
    if (d.is_leaf()) {
        s += "{\"leaf\": " + jnames(d.leaf_subset) + ", \"parents\": " +
             jnames(d.leaf_cpt->parents()) + ", \"table\": " + jnums(d.leaf_cpt->table().values()) + "}";
        return;
    }
    s += "{\"root_set\": " + jnames(d.root_set) + ", \"branches\": [";
    for (std::size_t b = 0; b < d.branches.size(); ++b) {
        if (b) s += ", ";
        s += "{\"weights\": " + jnums(d.branches[b].weights) + ", \"children\": [";
        for (std::size_t i = 0; i < d.branches[b].children.size(); ++i) {
            if (i) s += ", ";
            write_tree_dec_node(s, d.branches[b].children[i]);
        }
        s += "]}";
    }
    s += "]}";
}

TreeDecomposition parse_tree_dec_node(const json& j, const VarMap& vars, const Variable& child) {
    TreeDecomposition d;
    if (j.contains("leaf")) {
        d.leaf_subset = parse_name_list(j.at("leaf"), vars);
        VarList parents = parse_name_list(req(j, "parents"), vars);
        try {
            d.leaf_cpt = Cpt(child, std::move(parents), parse_table(req(j, "table")));
        } catch (const FactorError& e) {
            throw DocumentError(std::string("invalid leaf cpt: ") + e.what());
        }
        return d;
    }
    d.root_set = parse_name_list(req(j, "root_set"), vars);
    const json& branches = req(j, "branches");
    if (branches.size() != detail::space_size(d.root_set))
        throw DocumentError("tree decomposition: branch count does not match the root set");
    for (const json& b : branches) {
        TreeDecomposition::Branch br;
        double sum = 0.0;
        for (const json& w : req(b, "weights")) {
            br.weights.push_back(w.get<double>());
            if (br.weights.back() < -kDefaultEpsNorm) throw DocumentError("negative branch weight");
            sum += br.weights.back();
        }
        if (std::abs(sum - 1.0) > kDefaultEpsNorm)
            throw DocumentError("tree decomposition: branch weights do not sum to 1");
        for (const json& c : req(b, "children")) br.children.push_back(parse_tree_dec_node(c, vars, child));
        if (br.children.size() != br.weights.size())
            throw DocumentError("tree decomposition: weights/children size mismatch");
        d.branches.push_back(std::move(br));
    }
    return d;
}

} // namespace

std::string write_tree_decomposition(const TreeDecompositionDocument& doc) {
    VarList vars;
    collect_tree_dec_vars(doc.root, vars);
    const TreeDecomposition* leaf = &doc.root;
    while (!leaf->is_leaf()) leaf = &leaf->branches.front().children.front();
    std::string s = "{\n  \"kind\": \"tree_decomposition\",\n  \"variables\": ";
    s += jvariables(vars, "  ");
    s += ",\n  \"child\": " + jstr(leaf->leaf_cpt->child().name);
    s += ",\n  \"root\": ";
    write_tree_dec_node(s, doc.root);
    s += "\n}\n";
    return s;
}

TreeDecompositionDocument parse_tree_decomposition(const std::string& text) {
    const json j = parse_json(text);
    if (req_string(j, "kind") != "tree_decomposition")
        throw DocumentError("not a tree decomposition document");
    const VarMap vars = parse_variables(j, 1);
    const Variable child = lookup(vars, req_string(j, "child"));
    TreeDecompositionDocument doc;
    doc.root = parse_tree_dec_node(req(j, "root"), vars, child);
    return doc;
}

std::string write_factors(const FactorsDocument& doc) {
    std::string s = "{\n  \"kind\": \"factors\",\n  \"variables\": ";
    s += jvariables(doc.variables, "  ");
    s += ",\n  \"selectors\": " + jstrings(doc.selectors);
    s += ",\n  \"factors\": [\n";
    for (std::size_t i = 0; i < doc.factors.size(); ++i) {
        s += "    {\"scope\": " + jnames(doc.factors[i].scope()) + ", \"table\": " +
             jnums(doc.factors[i].values()) + "}";
        s += i + 1 < doc.factors.size() ? ",\n" : "\n";
    }
    s += "  ]\n}\n";
    return s;
}

FactorsDocument parse_factors(const std::string& text) {
    const json j = parse_json(text);
    if (req_string(j, "kind") != "factors") throw DocumentError("not a factors document");
    FactorsDocument doc;
    const VarMap vars = parse_variables(j, 1, &doc.variables);
    for (const json& s : req(j, "selectors")) doc.selectors.push_back(s.get<std::string>());
    for (const json& f : req(j, "factors")) {
        try {
            Factor factor(parse_name_list(req(f, "scope"), vars), parse_table(req(f, "table")));
            factor.throw_if_negative("factors document");
            doc.factors.push_back(std::move(factor));
        } catch (const FactorError& e) {
            throw DocumentError(std::string("invalid factor: ") + e.what());
        }
    }
    return doc;
}

namespace {

VarList prediction_variables(const PredictionDocument& doc) {
    VarList vars;
    for (const MarginalSet& ms : doc.marginals)
        for (const VarList& s : ms.subsets) vars = union_vars(vars, s);
    for (const Factor& f : doc.joints) vars = union_vars(vars, f.scope());
    return vars;
}

} // namespace

std::string write_prediction(const PredictionDocument& doc) {
    std::string s = "{\n  \"kind\": \"prediction\",\n  \"steps\": " + std::to_string(doc.steps);
    s += ",\n  \"engine\": " + jstr(doc.exact ? "exact" : "marginals");
    s += ",\n  \"approximate\": " + std::string(doc.approximate ? "true" : "false");
    s += ",\n  \"variables\": " + jvariables(prediction_variables(doc), "  ");
    if (doc.exact) {
        s += ",\n  \"joints\": [\n";
        for (std::size_t t = 0; t < doc.joints.size(); ++t) {
            s += "    {\"vars\": " + jnames(doc.joints[t].scope()) + ", \"table\": " +
                 jnums(doc.joints[t].values()) + "}";
            s += t + 1 < doc.joints.size() ? ",\n" : "\n";
        }
        s += "  ]";
    } else {
        s += ",\n  \"marginals\": [\n";
        for (std::size_t t = 0; t < doc.marginals.size(); ++t) {
            s += "    [";
            const MarginalSet& ms = doc.marginals[t];
            for (std::size_t i = 0; i < ms.subsets.size(); ++i) {
                if (i) s += ", ";
                s += "{\"vars\": " + jnames(ms.subsets[i]) + ", \"table\": " +
                     jnums(ms.marginals[i].values()) + "}";
            }
            s += "]";
            s += t + 1 < doc.marginals.size() ? ",\n" : "\n";
        }
        s += "  ]";
    }
    s += "\n}\n";
    return s;
}

PredictionDocument parse_prediction(const std::string& text) {
    const json j = parse_json(text);
    if (req_string(j, "kind") != "prediction") throw DocumentError("not a prediction document");
    const VarMap vars = parse_variables(j, 1);
    PredictionDocument doc;
    doc.steps = req(j, "steps").get<int>();
    doc.exact = req_string(j, "engine") == "exact";
    doc.approximate = req(j, "approximate").get<bool>();
    if (doc.exact) {
        for (const json& t : req(j, "joints"))
            doc.joints.emplace_back(parse_name_list(req(t, "vars"), vars), parse_table(req(t, "table")));
    } else {
        for (const json& t : req(j, "marginals")) {
            MarginalSet ms;
            for (const json& m : t) {
                ms.subsets.push_back(parse_name_list(req(m, "vars"), vars));
                ms.marginals.emplace_back(ms.subsets.back(), parse_table(req(m, "table")));
            }
            doc.marginals.push_back(std::move(ms));
        }
    }
    return doc;
}

std::string write_check_result(const CheckResultDocument& doc) {
    std::string s = "{\n  \"kind\": \"check_result\",\n  \"mode\": " + jstr(doc.mode);
    s += ",\n  \"sufficient\": " + std::string(doc.sufficient ? "true" : "false");
    if (doc.degenerate) s += ",\n  \"degenerate\": true";
    if (doc.oracle) s += ",\n  \"oracle\": " + std::string(*doc.oracle ? "true" : "false");
    if (!doc.failed_subset.empty()) s += ",\n  \"failed_subset\": " + jstr(doc.failed_subset);
    if (!doc.failure_path.empty()) s += ",\n  \"failure_path\": " + jints(doc.failure_path);
    if (doc.failed_at) s += ",\n  \"failed_at\": " + jassignment(*doc.failed_at);
    if (doc.witness) s += ",\n  \"witness\": " + jwitness(*doc.witness);
    if (!doc.gamma.empty()) s += ",\n  \"gamma\": " + jnums(doc.gamma);
    s += "\n}\n";
    return s;
}

std::string write_comparison(const ComparisonDocument& doc) {
    std::string s = "{\n  \"kind\": \"comparison\",\n  \"steps\": " + std::to_string(doc.steps);
    s += ",\n  \"per_step_max_divergence\": " + jnums(doc.per_step_max_divergence);
    s += ",\n  \"max_divergence\": " + format_double(doc.max_divergence);
    if (!doc.pairs.empty()) {
        s += ",\n  \"pairs\": [\n";
        for (std::size_t i = 0; i < doc.pairs.size(); ++i) {
            s += "    {\"vars\": " + jnames(doc.pairs[i].vars) + ", \"max\": " +
                 format_double(doc.pairs[i].max) + ", \"per_step\": " + jnums(doc.pairs[i].per_step) + "}";
            s += i + 1 < doc.pairs.size() ? ",\n" : "\n";
        }
        s += "  ]";
    }
    s += ",\n  \"cost\": {";
    s += "\"marginal_ops\": " + std::to_string(doc.cost.marginal_ops);
    s += ", \"exact_ops\": " + std::to_string(doc.cost.exact_ops);
    s += ", \"bound_marginal\": " + format_double(doc.cost.bound_marginal);
    s += ", \"bound_exact\": " + format_double(doc.cost.bound_exact);
    s += ", \"horizon\": " + std::to_string(doc.cost.horizon);
    s += ", \"family_size\": " + std::to_string(doc.cost.family_size);
    s += ", \"max_subset_size\": " + std::to_string(doc.cost.max_subset_size);
    s += ", \"max_cardinality\": " + std::to_string(doc.cost.max_cardinality);
    s += ", \"state_size\": " + std::to_string(doc.cost.state_size);
    s += "}\n}\n";
    return s;
}

} // namespace sepnet
