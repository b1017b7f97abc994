#include "sepnet/inference.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace sepnet {

namespace {

using Adjacency = std::map<std::string, std::set<std::string>>;

Adjacency interaction_graph(const std::vector<Factor>& factors) {
    Adjacency adj;
    for (const Factor& f : factors)
        for (const Variable& a : f.scope()) {
            adj[a.name];
            for (const Variable& b : f.scope())
                if (a.name != b.name) adj[a.name].insert(b.name);
        }
    return adj;
}

std::size_t fill_count(const Adjacency& adj, const std::string& v) {
    const auto& nb = adj.at(v);
    std::size_t fill = 0;
    for (auto i = nb.begin(); i != nb.end(); ++i)
        for (auto j = std::next(i); j != nb.end(); ++j)
            if (!adj.at(*i).count(*j)) ++fill;
    return fill;
}

} // namespace

VarList min_fill_ordering(const std::vector<Factor>& factors, const VarList& keep) {
    Adjacency adj = interaction_graph(factors);
    std::map<std::string, Variable> vars;
    for (const Factor& f : factors)
        for (const Variable& v : f.scope()) vars.emplace(v.name, v);

    std::set<std::string> remaining;
    for (const auto& [name, _] : adj)
        if (!contains_var(keep, name)) remaining.insert(name);

    VarList order;
    while (!remaining.empty()) {
        std::string best;
        std::size_t best_fill = 0;
        for (const std::string& v : remaining) { // std::set iterates in name order
            const std::size_t fill = fill_count(adj, v);
            if (best.empty() || fill < best_fill) {
                best = v;
                best_fill = fill;
            }
        }
        // Connect the eliminated variable's neighbors, then remove it.
        const auto nb = adj[best];
        for (const std::string& i : nb)
            for (const std::string& j : nb)
                if (i != j) adj[i].insert(j);
        for (const std::string& i : nb) adj[i].erase(best);
        adj.erase(best);
        remaining.erase(best);
        order.push_back(vars.at(best));
    }
    return order;
}

EliminationResult eliminate(const std::vector<Factor>& factors, const VarList& query,
                            const Assignment& evidence, const VarList& ordering) {
    for (const Variable& q : query) {
        bool found = false;
        for (const Factor& f : factors) found = found || contains_var(f.scope(), q.name);
        if (!found) throw FactorError("eliminate: query variable '" + q.name + "' appears in no factor");
        if (evidence.contains(q.name))
            throw FactorError("eliminate: query variable '" + q.name + "' is also evidence");
    }
    for (const auto& [v, _] : evidence.entries()) {
        bool found = false;
        for (const Factor& f : factors) found = found || contains_var(f.scope(), v.name);
        if (!found) throw FactorError("eliminate: evidence variable '" + v.name + "' appears in no factor");
    }

    OpCountScope ops;
    std::vector<Factor> work;
    work.reserve(factors.size());
    for (const Factor& f : factors)
        work.push_back(condition(f, evidence.restricted_to(f.scope())));

    EliminationReport report;
    report.ordering = ordering.empty() ? min_fill_ordering(work, query) : ordering;

    for (const Variable& v : report.ordering) {
        Factor product = Factor::scalar(1.0);
        std::vector<Factor> rest;
        bool seen = false;
        for (Factor& f : work) {
            if (contains_var(f.scope(), v.name)) {
                product = multiply(product, f);
                seen = true;
            } else {
                rest.push_back(std::move(f));
            }
        }
        if (!seen) continue; // conditioned away entirely
        report.step_scope_sizes.push_back(static_cast<int>(product.scope().size()));
        rest.push_back(sum_out(product, v));
        work = std::move(rest);
    }

    Factor joint = Factor::scalar(1.0);
    for (const Factor& f : work) joint = multiply(joint, f);

    EliminationResult out;
    out.mass = joint.total_mass();
    if (!(out.mass > 0.0)) throw ZeroMassError("eliminate: evidence has probability zero");
    out.posterior = normalize(marginalize_to(joint, query));
    report.multiply_adds = ops.elapsed();
    out.report = std::move(report);
    return out;
}

} // namespace sepnet
