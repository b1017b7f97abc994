#include "sepnet/dbn.hpp"

#include <algorithm>
#include <cmath>

#include "sepnet/rng.hpp"

namespace sepnet {

Variable next_copy(const Variable& v) { return Variable(v.name + "'", v.cardinality); }

namespace {

// Replace the trailing `tail` scope variables by one compound variable whose
// values enumerate theirs mixed-radix (same layout, so values are untouched).
Factor flatten_tail(const Factor& f, std::size_t tail, const Variable& compound) {
    std::size_t prod = 1;
    for (std::size_t i = f.scope().size() - tail; i < f.scope().size(); ++i)
        prod *= static_cast<std::size_t>(f.scope()[i].cardinality);
    if (prod != static_cast<std::size_t>(compound.cardinality))
        throw FactorError("flatten: compound cardinality mismatch");
    VarList scope(f.scope().begin(), f.scope().end() - static_cast<std::ptrdiff_t>(tail));
    scope.push_back(compound);
    return Factor(std::move(scope), f.values());
}

std::string compound_name(const VarList& members) {
    std::string s = "(";
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (i) s += ",";
        s += members[i].name;
    }
    return s + ")'";
}

} // namespace

const Cpt& DbnModel::transition_for(const std::string& state_var) const {
    for (std::size_t i = 0; i < state.size(); ++i)
        if (state[i].name == state_var) return transitions[i];
    throw FactorError("no transition for state variable '" + state_var + "'");
}

void DbnModel::validate() const {
    if (state.empty()) throw FactorError("dbn: empty state");
    for (std::size_t i = 0; i < state.size(); ++i) {
        if (state[i].cardinality < 2)
            throw FactorError("dbn: state variable '" + state[i].name + "' has cardinality < 2");
        for (std::size_t j = i + 1; j < state.size(); ++j)
            if (state[i].name == state[j].name)
                throw FactorError("dbn: duplicate state variable '" + state[i].name + "'");
    }
    if (transitions.size() != state.size())
        throw FactorError("dbn: expected one transition per state variable");
    for (std::size_t i = 0; i < state.size(); ++i) {
        if (transitions[i].child() != next_copy(state[i]))
            throw FactorError("dbn: transition " + std::to_string(i) + " child is not the next-slice copy of '" +
                              state[i].name + "'");
        for (const Variable& p : transitions[i].parents()) {
            auto pos = find_var(state, p.name);
            if (!pos || state[*pos].cardinality != p.cardinality)
                throw FactorError("dbn: transition parent '" + p.name + "' is not a state variable");
        }
        transitions[i].validate();
    }
    if (initial_joint && !same_var_set(initial_joint->scope(), state))
        throw FactorError("dbn: initial joint scope does not match the state");
    if (initial_marginals)
        for (const VarList& s : initial_marginals->subsets)
            if (!contains_all(state, s))
                throw FactorError("dbn: initial marginal subset mentions a non-state variable");
}

Cpt DbnModel::subset_transition(const VarList& subset, std::size_t parent_space_cap) const {
    VarList members;
    for (const Variable& v : subset) {
        auto pos = find_var(state, v.name);
        if (!pos) throw FactorError("subset variable '" + v.name + "' is not a state variable");
        members.push_back(state[*pos]);
    }
    VarList parents;
    for (const Variable& s : state)
        for (const Variable& m : members)
            if (contains_var(transition_for(m.name).parents(), s.name) && !contains_var(parents, s.name))
                parents.push_back(s);
    if (detail::space_size(parents) > parent_space_cap)
        throw CapExceededError("subset transition for (" + var_names(subset) + "): parent space " +
                               std::to_string(detail::space_size(parents)) + " exceeds cap");

    Factor prod = Factor::scalar(1.0);
    for (const Variable& m : members) prod = multiply(prod, transition_for(m.name).table());

    VarList target = parents;
    std::size_t child_card = 1;
    for (const Variable& m : members) {
        target.push_back(next_copy(m));
        child_card *= static_cast<std::size_t>(m.cardinality);
    }
    prod = reorder(prod, target);

    const Variable child = members.size() == 1
                               ? next_copy(members.front())
                               : Variable(compound_name(members), static_cast<int>(child_card));
    const Factor flat = flatten_tail(prod, members.size(), child);
    return Cpt(child, parents, flat.values());
}

std::size_t SubsystemFamily::max_subset_size() const {
    std::size_t m = 0;
    for (const VarList& s : subsets) m = std::max(m, s.size());
    return m;
}

SelfSufficiencyCheck check_self_sufficient(const DbnModel& model,
                                           const std::vector<VarList>& family,
                                           const TreeRepresentation& tree,
                                           const SelfSufficiencyOptions& opts) {
    model.validate();
    if (family.empty()) throw FactorError("self-sufficiency: empty family");
    VarList covered;
    for (const VarList& s : family) covered = union_vars(covered, s);
    if (!same_var_set(covered, model.state))
        throw FactorError("self-sufficiency: family does not cover the state");
    const auto leaves = tree.leaf_subsets();
    if (leaves.size() != family.size())
        throw FactorError("self-sufficiency: tree has " + std::to_string(leaves.size()) +
                          " leaves for " + std::to_string(family.size()) + " subsets");
    for (const VarList& s : family) {
        bool found = false;
        for (const VarList& l : leaves) found = found || same_var_set(l, s);
        if (!found)
            throw FactorError("self-sufficiency: family subset (" + var_names(s) +
                              ") is not a tree leaf");
    }

    const std::size_t state_space = detail::space_size(model.state);
    const bool oracle_feasible = opts.cross_validate && state_space <= opts.oracle_state_cap;

    SubsystemFamily fam;
    fam.subsets = family;
    fam.tree = tree;
    fam.oracle_validated = oracle_feasible;

    for (const VarList& subset : family) {
        const Cpt product = model.subset_transition(subset, opts.parent_space_cap);
        TreeSeparation sep = tree_separate(product, tree, opts.separation);
        if (oracle_feasible) {
            OracleOptions oopts;
            oopts.parent_space_cap = opts.oracle_state_cap;
            oopts.eps_sep = opts.separation.eps_sep;
            const bool oracle = sufficiency_oracle(product, family, oopts);
            if (oracle != sep.ok())
                throw FactorError("self-sufficiency: constructive check and oracle disagree on (" +
                                  var_names(subset) + ")");
        }
        if (!sep.ok()) {
            SelfSufficiencyCheck fail;
            fail.failed_subset = subset;
            fail.failure_path = std::move(sep.failure_path);
            fail.failed_at = std::move(sep.failed_at);
            fail.witness = std::move(sep.witness);
            return fail;
        }
        fam.decompositions.push_back(std::move(*sep.decomposition));
    }

    SelfSufficiencyCheck out;
    out.family = std::move(fam);
    return out;
}

MarginalSet initial_marginals(const DbnModel& model, const std::vector<VarList>& family) {
    MarginalSet out;
    out.subsets = family;
    for (const VarList& s : family) {
        if (model.initial_joint) {
            out.marginals.push_back(normalize(marginalize_to(*model.initial_joint, s)));
        } else if (model.initial_marginals) {
            out.marginals.push_back(normalize(model.initial_marginals->marginal_for(s)));
        } else {
            throw FactorError("dbn has no initial distribution");
        }
    }
    return out;
}

std::vector<MarginalSet> predict_marginals(const SubsystemFamily& family, const DbnModel& model,
                                           int horizon, double eps_consistency) {
    if (horizon < 0) throw FactorError("predict: negative horizon");
    std::vector<MarginalSet> out;
    out.push_back(initial_marginals(model, family.subsets));
    out.front().check(kDefaultEpsNorm, eps_consistency);

    ApplyOptions apply_opts;
    apply_opts.eps_consistency = eps_consistency;
    apply_opts.check_consistency = false; // the whole set is checked once per step

    for (int t = 1; t <= horizon; ++t) {
        const MarginalSet& prev = out.back();
        MarginalSet next;
        next.subsets = family.subsets;
        for (std::size_t i = 0; i < family.subsets.size(); ++i) {
            Factor q = apply_decomposition(family.decompositions[i], prev, apply_opts);
            // The compound child enumerates the subset members mixed-radix in
            // subset order, so the values reinterpret directly.
            next.marginals.push_back(normalize(Factor(family.subsets[i], q.values())));
        }
        next.check(kDefaultEpsNorm, eps_consistency);
        out.push_back(std::move(next));
    }
    return out;
}

std::vector<Factor> predict_exact(const DbnModel& model, int horizon, std::size_t state_space_cap) {
    if (horizon < 0) throw FactorError("predict: negative horizon");
    if (!model.initial_joint) throw FactorError("exact prediction requires an initial joint");
    if (detail::space_size(model.state) > state_space_cap)
        throw CapExceededError("exact prediction: state space " +
                               std::to_string(detail::space_size(model.state)) + " exceeds cap " +
                               std::to_string(state_space_cap));

    VarList primed;
    for (const Variable& v : model.state) primed.push_back(next_copy(v));

    std::vector<Factor> out;
    out.push_back(normalize(reorder(*model.initial_joint, model.state)));
    for (int t = 1; t <= horizon; ++t) {
        Factor f = out.back();
        for (const Cpt& tr : model.transitions) f = multiply(f, tr.table());
        for (const Variable& v : model.state) f = sum_out(f, v);
        f = reorder(f, primed);
        out.emplace_back(model.state, f.values());
    }
    return out;
}

FilterOutcome filter_step(const SubsystemFamily& family, const MarginalSet& marginals,
                          const Assignment& evidence, FilterPolicy policy) {
    // Canonicalize evidence variables against the family's variables.
    Assignment ev;
    for (const auto& [v, val] : evidence.entries()) {
        const Variable* found = nullptr;
        for (const VarList& s : family.subsets)
            if (auto pos = find_var(s, v.name)) {
                found = &s[*pos];
                break;
            }
        if (!found)
            throw FactorError("filter: observed variable '" + v.name + "' is not a state variable");
        ev.set(*found, val);
    }

    if (policy == FilterPolicy::Strict) {
        for (const auto& [v, _] : ev.entries()) {
            std::vector<std::string> missing;
            for (const VarList& s : marginals.subsets)
                if (!contains_var(s, v.name)) missing.push_back("(" + var_names(s) + ")");
            if (!missing.empty())
                throw SufficiencyBrokenError("observed variable '" + v.name +
                                                 "' does not appear in all family subsets",
                                             v.name, std::move(missing));
        }
    }

    FilterOutcome out;
    out.approximate = policy == FilterPolicy::Demonstrate;
    out.marginals.subsets = marginals.subsets;
    for (std::size_t i = 0; i < marginals.subsets.size(); ++i) {
        const Assignment local = ev.restricted_to(marginals.subsets[i]);
        if (local.empty()) {
            out.marginals.marginals.push_back(marginals.marginals[i]);
            continue;
        }
        Factor sliced = restrict_to_evidence(marginals.marginals[i], local);
        if (!(sliced.total_mass() > 0.0))
            throw ZeroMassError("filter: evidence " + local.to_string() + " has probability zero in (" +
                                var_names(marginals.subsets[i]) + ")");
        out.marginals.marginals.push_back(normalize(sliced));
    }
    return out;
}

CostReport cost_report(const SubsystemFamily& family, const DbnModel& model, int horizon) {
    CostReport r;
    r.horizon = horizon;
    r.family_size = static_cast<int>(family.subsets.size());
    r.max_subset_size = static_cast<int>(family.max_subset_size());
    r.state_size = static_cast<int>(model.state.size());
    for (const Variable& v : model.state) r.max_cardinality = std::max(r.max_cardinality, v.cardinality);
    r.bound_marginal = horizon * r.family_size * std::pow(r.max_cardinality, r.max_subset_size);
    r.bound_exact = horizon * std::pow(r.max_cardinality, r.state_size);
    {
        // Measure the propagation loop itself: reducing an initial joint to
        // subset marginals costs b^M and is not part of the per-step claim,
        // so the marginal engine starts from precomputed subset marginals.
        DbnModel from_marginals = model;
        from_marginals.initial_marginals = initial_marginals(model, family.subsets);
        from_marginals.initial_joint.reset();
        OpCountScope ops;
        predict_marginals(family, from_marginals, horizon);
        r.marginal_ops = ops.elapsed();
    }
    {
        OpCountScope ops;
        predict_exact(model, horizon);
        r.exact_ops = ops.elapsed();
    }
    return r;
}

// ---- weather -------------------------------------------------------------

void WeatherModelSpec::validate() const {
    if (locations < 1) throw FactorError("weather: needs at least one location");
    if (directions < 2) throw FactorError("weather: wind variable needs cardinality >= 2");
    if (location_cardinality < 2) throw FactorError("weather: location cardinality must be >= 2");
    auto check_dist = [](const std::vector<double>& p, const std::string& what) {
        double s = 0.0;
        for (double v : p) {
            if (v < 0.0) throw FactorError(what + " has a negative entry");
            s += v;
        }
        if (std::fabs(s - 1.0) > kDefaultEpsNorm) throw FactorError(what + " does not sum to 1");
    };
    if (wind_transition.size() != static_cast<std::size_t>(directions))
        throw FactorError("weather: wind transition needs one row per direction");
    for (const auto& row : wind_transition) {
        if (row.size() != static_cast<std::size_t>(directions))
            throw FactorError("weather: wind transition row size mismatch");
        check_dist(row, "wind transition row");
    }
    if (selection.size() != static_cast<std::size_t>(directions))
        throw FactorError("weather: selection needs one table per direction");
    for (const auto& per_dir : selection) {
        if (per_dir.size() != static_cast<std::size_t>(locations))
            throw FactorError("weather: selection row count mismatch");
        for (const auto& row : per_dir) {
            if (row.size() != static_cast<std::size_t>(locations))
                throw FactorError("weather: selection row size mismatch");
            check_dist(row, "selection distribution");
        }
    }
    if (packet.size() != static_cast<std::size_t>(locations))
        throw FactorError("weather: packet table count mismatch");
    for (int i = 0; i < locations; ++i)
        for (int j = 0; j < locations; ++j) {
            bool used = false;
            for (int w = 0; w < directions; ++w) used = used || selection[w][i][j] > 0.0;
            if (!used) continue;
            const auto& p = packet[i][j];
            if (p.size() != static_cast<std::size_t>(location_cardinality))
                throw FactorError("weather: packet " + std::to_string(i) + "<-" + std::to_string(j) +
                                  " is missing or misshapen");
            for (const auto& row : p) {
                if (row.size() != static_cast<std::size_t>(location_cardinality))
                    throw FactorError("weather: packet row size mismatch");
                check_dist(row, "packet row");
            }
        }
}

GeneratedDbn make_weather(const WeatherModelSpec& spec) {
    spec.validate();
    const Variable wind("W", spec.directions);
    VarList state{wind};
    for (int i = 0; i < spec.locations; ++i)
        state.emplace_back("X" + std::to_string(i), spec.location_cardinality);

    GeneratedDbn out;
    out.model.state = state;

    {
        std::vector<double> t;
        for (const auto& row : spec.wind_transition) t.insert(t.end(), row.begin(), row.end());
        out.model.transitions.emplace_back(next_copy(wind), VarList{wind}, std::move(t));
    }
    const std::size_t k = static_cast<std::size_t>(spec.location_cardinality);
    for (int i = 0; i < spec.locations; ++i) {
        std::vector<int> support;
        for (int j = 0; j < spec.locations; ++j) {
            bool used = false;
            for (int w = 0; w < spec.directions; ++w) used = used || spec.selection[w][i][j] > 0.0;
            if (used) support.push_back(j);
        }
        VarList parents{wind};
        for (int j : support) parents.push_back(state[static_cast<std::size_t>(j) + 1]);

        const std::size_t rows = detail::space_size(parents);
        std::vector<double> table(rows * k, 0.0);
        std::vector<int> digits;
        for (std::size_t r = 0; r < rows; ++r) {
            detail::decode(r, parents, digits);
            const int w = digits[0];
            for (std::size_t s = 0; s < support.size(); ++s) {
                const double g = spec.selection[w][i][support[s]];
                if (g <= 0.0) continue;
                const int xj = digits[s + 1];
                const auto& pk = spec.packet[i][support[s]];
                for (std::size_t z = 0; z < k; ++z) table[r * k + z] += g * pk[xj][z];
            }
        }
        out.model.transitions.emplace_back(next_copy(state[static_cast<std::size_t>(i) + 1]),
                                           std::move(parents), std::move(table));
    }

    if (!spec.initial_joint.empty()) out.model.initial_joint = Factor(state, spec.initial_joint);

    for (int i = 0; i < spec.locations; ++i)
        out.family.push_back({wind, state[static_cast<std::size_t>(i) + 1]});
    out.tree = TreeRepresentation::flat(out.family);
    return out;
}

WeatherModelSpec demo_weather_spec(int locations, int directions, std::uint64_t seed) {
    if (locations < 1 || directions < 2)
        throw FactorError("demo weather: need locations >= 1 and directions >= 2");
    SplitMix64 rng(seed);
    WeatherModelSpec spec;
    spec.locations = locations;
    spec.directions = directions;
    spec.location_cardinality = 2;

    for (int w = 0; w < directions; ++w) {
        std::vector<double> row = rng.distribution(directions);
        row[static_cast<std::size_t>(w)] += 1.0;
        for (double& v : row) v /= 2.0;
        spec.wind_transition.push_back(std::move(row));
    }

    // Each location draws from itself or its right neighbor; the split varies
    // by direction. Constant support keeps the per-step work proportional to
    // the number of locations.
    spec.selection.assign(static_cast<std::size_t>(directions),
                          std::vector<std::vector<double>>(
                              static_cast<std::size_t>(locations),
                              std::vector<double>(static_cast<std::size_t>(locations), 0.0)));
    for (int i = 0; i < locations; ++i)
        for (int w = 0; w < directions; ++w) {
            const double self = 0.15 + 0.7 * rng.uniform();
            const int right = (i + 1) % locations;
            spec.selection[w][i][i] += self;
            spec.selection[w][i][right] += 1.0 - self;
        }

    spec.packet.assign(static_cast<std::size_t>(locations),
                       std::vector<std::vector<std::vector<double>>>(static_cast<std::size_t>(locations)));
    for (int i = 0; i < locations; ++i) {
        std::vector<int> sources{i};
        if ((i + 1) % locations != i) sources.push_back((i + 1) % locations);
        for (int j : sources) {
            std::vector<double> rows;
            for (int r = 0; r < spec.location_cardinality; ++r) {
                std::vector<double> row = rng.distribution(spec.location_cardinality);
                row[static_cast<std::size_t>(r)] += 1.0;
                for (double& v : row) v /= 2.0;
                rows.insert(rows.end(), row.begin(), row.end());
            }
            auto& p = spec.packet[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            for (int r = 0; r < spec.location_cardinality; ++r)
                p.emplace_back(rows.begin() + r * spec.location_cardinality,
                               rows.begin() + (r + 1) * spec.location_cardinality);
        }
    }

    std::size_t joint = static_cast<std::size_t>(directions);
    for (int i = 0; i < locations; ++i) joint *= static_cast<std::size_t>(spec.location_cardinality);
    spec.initial_joint = rng.distribution(static_cast<int>(joint));
    return spec;
}

// ---- figure-5 counterexample ----------------------------------------------

GeneratedDbn make_figure5() {
    const Variable x("X", 2), y("Y", 2);
    GeneratedDbn out;
    out.model.state = {x, y};
    // Deterministic copies; the second parent is deliberately irrelevant.
    out.model.transitions.emplace_back(next_copy(x), VarList{x, y},
                                       std::vector<double>{1, 0, 1, 0, 0, 1, 0, 1});
    out.model.transitions.emplace_back(next_copy(y), VarList{x, y},
                                       std::vector<double>{1, 0, 0, 1, 1, 0, 0, 1});
    out.model.initial_joint = Factor({x, y}, {0.45, 0.05, 0.05, 0.45});
    out.family = {{x}, {y}};
    out.tree = TreeRepresentation::flat(out.family);
    return out;
}

// ---- mode-mixture models ---------------------------------------------------

void ModeSpec::validate() const {
    if (state.empty()) throw FactorError("modes: empty state");
    if (subsystems.empty()) throw FactorError("modes: no subsystems");
    VarList covered;
    for (const VarList& s : subsystems) covered = union_vars(covered, s);
    if (!same_var_set(covered, state)) throw FactorError("modes: subsystems do not cover the state");

    const auto leaves = tree.leaf_subsets();
    if (leaves.size() != subsystems.size())
        throw FactorError("modes: tree leaf count does not match the subsystems");
    for (std::size_t i = 0; i < leaves.size(); ++i)
        if (!same_var_set(leaves[i], subsystems[i]))
            throw FactorError("modes: tree leaves must list the subsystems in order");
    if (!tree.is_complete())
        throw FactorError("modes: tree representation is not complete");

    const VarList root_vars = tree.located_at(0);
    for (const Variable& v : mode_given)
        if (!contains_var(root_vars, v.name))
            throw FactorError("modes: mode distribution may depend only on root-located variables; '" +
                              v.name + "' is not one");

    if (modes.empty()) throw FactorError("modes: no modes");
    if (mode_dist.size() != detail::space_size(mode_given))
        throw FactorError("modes: mode distribution needs one row per conditioning assignment");
    for (const auto& row : mode_dist) {
        if (row.size() != modes.size()) throw FactorError("modes: mode distribution row size mismatch");
        double s = 0.0;
        for (double v : row) {
            if (v < 0.0) throw FactorError("modes: negative mode probability");
            s += v;
        }
        if (std::fabs(s - 1.0) > kDefaultEpsNorm) throw FactorError("modes: mode distribution row does not sum to 1");
    }

    for (std::size_t mi = 0; mi < modes.size(); ++mi) {
        const Mode& mode = modes[mi];
        if (mode.source.size() != subsystems.size())
            throw FactorError("modes: mode " + std::to_string(mi) + " must assign one source per subsystem");
        for (std::size_t s : mode.source)
            if (s >= subsystems.size()) throw FactorError("modes: source index out of range");
        for (const Variable& v : state) {
            auto it = mode.var_models.find(v.name);
            if (it == mode.var_models.end())
                throw FactorError("modes: mode " + std::to_string(mi) + " has no model for '" + v.name + "'");
            const Cpt& m = it->second;
            if (m.child() != next_copy(v))
                throw FactorError("modes: model child for '" + v.name + "' must be its next-slice copy");
            // A variable's model must be readable from every sharer's source:
            // its parents must lie in the intersection of those source subsets.
            for (const Variable& p : m.parents())
                for (std::size_t i = 0; i < subsystems.size(); ++i) {
                    if (!contains_var(subsystems[i], v.name)) continue;
                    if (!contains_var(subsystems[mode.source[i]], p.name))
                        throw FactorError("modes: in mode " + std::to_string(mi) + ", '" + v.name +
                                          "' depends on '" + p.name + "' which subsystem " +
                                          std::to_string(i) + "'s source cannot provide");
                }
        }
    }
    // The state transition factors into one CPT per variable, so next-slice
    // variables are independent given the previous slice. Mixing modes whose
    // routings differ would need a shared latent selector across the slice
    // and breaks self-sufficiency: the per-subsystem product of independent
    // per-variable mixtures has cross terms spanning several blocks. The
    // routing pattern must therefore be determined by the conditioning
    // assignment; modes sharing a routing may still be mixed freely.
    for (std::size_t g = 0; g < mode_dist.size(); ++g)
        for (std::size_t i = 0; i < subsystems.size(); ++i) {
            std::size_t routed = subsystems.size();
            for (std::size_t mi = 0; mi < modes.size(); ++mi) {
                if (mode_dist[g][mi] <= 0.0) continue;
                if (routed == subsystems.size()) routed = modes[mi].source[i];
                else if (routed != modes[mi].source[i])
                    throw FactorError("modes: conditioning assignment " + std::to_string(g) +
                                      " mixes modes that route subsystem " + std::to_string(i) +
                                      " from different sources");
            }
        }

    if (!initial_joint.empty() && initial_joint.size() != detail::space_size(state))
        throw FactorError("modes: initial joint size mismatch");
}

GeneratedDbn make_from_modes(const ModeSpec& spec) {
    spec.validate();
    GeneratedDbn out;
    out.model.state = spec.state;

    for (const Variable& v : spec.state) {
        VarList parents;
        for (const Variable& s : spec.state) {
            bool used = contains_var(spec.mode_given, s.name);
            for (const ModeSpec::Mode& mode : spec.modes)
                used = used || contains_var(mode.var_models.at(v.name).parents(), s.name);
            if (used) parents.push_back(s);
        }
        const std::size_t rows = detail::space_size(parents);
        const auto zc = static_cast<std::size_t>(v.cardinality);
        std::vector<double> table(rows * zc, 0.0);
        std::vector<int> digits;
        for (std::size_t r = 0; r < rows; ++r) {
            detail::decode(r, parents, digits);
            Assignment a;
            for (std::size_t k = 0; k < parents.size(); ++k) a.set(parents[k], digits[k]);
            std::size_t g = 0;
            for (const Variable& gv : spec.mode_given)
                g = g * static_cast<std::size_t>(gv.cardinality) +
                    static_cast<std::size_t>(*a.value_of(gv.name));
            for (std::size_t mi = 0; mi < spec.modes.size(); ++mi) {
                const double pm = spec.mode_dist[g][mi];
                if (pm <= 0.0) continue;
                const Cpt& m = spec.modes[mi].var_models.at(v.name);
                std::size_t row = 0;
                for (const Variable& p : m.parents())
                    row = row * static_cast<std::size_t>(p.cardinality) +
                          static_cast<std::size_t>(*a.value_of(p.name));
                for (std::size_t z = 0; z < zc; ++z)
                    table[r * zc + z] += pm * m.value(row, static_cast<int>(z));
            }
        }
        out.model.transitions.emplace_back(next_copy(v), std::move(parents), std::move(table));
    }

    if (!spec.initial_joint.empty()) out.model.initial_joint = Factor(spec.state, spec.initial_joint);
    out.family = spec.subsystems;
    out.tree = spec.tree;
    return out;
}

ModeSpec demo_mode_spec(std::uint64_t seed) {
    SplitMix64 rng(seed);
    // Ternary root so each of its values can select a routing pattern:
    // r=0 top-down, r=1 subsystem 4 takes over the B level, r=2 subsystem 3
    // takes over the whole hierarchy.
    const Variable r("R", 3), a("A", 2), b("B", 2);
    const Variable x1("X1", 2), x2("X2", 2), x3("X3", 2), x4("X4", 2);

    ModeSpec spec;
    spec.state = {r, a, b, x1, x2, x3, x4};
    spec.subsystems = {{r, a, x1}, {r, a, x2}, {r, b, x3}, {r, b, x4}};
    {
        TreeNode left, right, root;
        for (int i = 0; i < 2; ++i) {
            TreeNode leaf;
            leaf.subset = spec.subsystems[static_cast<std::size_t>(i)];
            left.children.push_back(std::move(leaf));
        }
        for (int i = 2; i < 4; ++i) {
            TreeNode leaf;
            leaf.subset = spec.subsystems[static_cast<std::size_t>(i)];
            right.children.push_back(std::move(leaf));
        }
        root.children.push_back(std::move(left));
        root.children.push_back(std::move(right));
        spec.tree = TreeRepresentation(std::move(root));
    }

    auto random_cpt = [&](const Variable& child, VarList parents) {
        const std::size_t rows = detail::space_size(parents);
        std::vector<double> t;
        for (std::size_t i = 0; i < rows; ++i) {
            const auto row = rng.distribution(child.cardinality);
            t.insert(t.end(), row.begin(), row.end());
        }
        return Cpt(next_copy(child), std::move(parents), std::move(t));
    };

    // Parent sets per (mode, variable); each must fit inside every sharer's
    // source subsystem for that mode. Patterns appear twice with independent
    // local tables, so the mode distribution genuinely mixes dynamics.
    struct ModePlan {
        std::vector<std::size_t> source;
        std::vector<std::pair<std::string, VarList>> parents;
    };
    const ModePlan top_down{{0, 1, 2, 3},
                            {{"R", {r}},
                             {"A", {r, a}},
                             {"B", {r, b}},
                             {"X1", {r, a, x1}},
                             {"X2", {r, a, x2}},
                             {"X3", {r, b, x3}},
                             {"X4", {r, b, x4}}}};
    const ModePlan take_over_b{{0, 1, 3, 3},
                               {{"R", {r}},
                                {"A", {r, a}},
                                {"B", {r, b, x4}},
                                {"X1", {r, a, x1}},
                                {"X2", {r, a, x2}},
                                {"X3", {b, x4}},
                                {"X4", {r, x4}}}};
    const ModePlan catastrophe{{2, 2, 2, 2},
                               {{"R", {r, x3}},
                                {"A", {r, b, x3}},
                                {"B", {r, b, x3}},
                                {"X1", {b, x3}},
                                {"X2", {r, x3}},
                                {"X3", {r, b, x3}},
                                {"X4", {b, x3}}}};
    const std::vector<ModePlan> plans = {top_down, top_down, take_over_b, take_over_b, catastrophe};
    for (const ModePlan& plan : plans) {
        ModeSpec::Mode mode;
        mode.source = plan.source;
        for (const auto& [name, parents] : plan.parents) {
            auto pos = find_var(spec.state, name);
            mode.var_models.emplace(name, random_cpt(spec.state[*pos], parents));
        }
        spec.modes.push_back(std::move(mode));
    }

    // The previous root value fixes the routing pattern; within a pattern the
    // two variants are mixed with a seeded split.
    spec.mode_given = {r};
    const double split_td = 0.35 + 0.3 * rng.uniform();
    const double split_to = 0.35 + 0.3 * rng.uniform();
    spec.mode_dist = {{split_td, 1.0 - split_td, 0.0, 0.0, 0.0},
                      {0.0, 0.0, split_to, 1.0 - split_to, 0.0},
                      {0.0, 0.0, 0.0, 0.0, 1.0}};
    spec.initial_joint = rng.distribution(static_cast<int>(detail::space_size(spec.state)));
    return spec;
}

// ---- merging rule ----------------------------------------------------------

Cpt product_child_cpt(const Cpt& cpt1, const Cpt& cpt2, const std::string& pair_name) {
    if (cpt1.child().name == cpt2.child().name)
        throw FactorError("product child: the two children must be distinct");
    const Factor prod = multiply(cpt1.table(), cpt2.table());
    VarList target = union_vars(cpt1.parents(), cpt2.parents());
    target.push_back(cpt1.child());
    target.push_back(cpt2.child());
    const Factor arranged = reorder(prod, target);
    const Variable pair(pair_name, cpt1.child().cardinality * cpt2.child().cardinality);
    const Factor flat = flatten_tail(arranged, 2, pair);
    VarList parents(target.begin(), target.end() - 2);
    return Cpt(pair, std::move(parents), flat.values());
}

bool merge_rule_check(const Cpt& cpt1, const Cpt& cpt2, const VarList& x1, const VarList& y1,
                      const VarList& x2, const VarList& y2, const OracleOptions& opts) {
    if (!sufficiency_oracle(cpt1, {x1, y1}, opts))
        throw FactorError("merge rule: (" + var_names(x1) + ") and (" + var_names(y1) +
                          ") are not sufficient for '" + cpt1.child().name + "'");
    if (!sufficiency_oracle(cpt2, {x2, y2}, opts))
        throw FactorError("merge rule: (" + var_names(x2) + ") and (" + var_names(y2) +
                          ") are not sufficient for '" + cpt2.child().name + "'");
    const Cpt pair = product_child_cpt(cpt1, cpt2,
                                       "(" + cpt1.child().name + "*" + cpt2.child().name + ")");
    return sufficiency_oracle(
        pair, {union_vars(x1, x2), union_vars(x1, y2), union_vars(y1, x2), union_vars(y1, y2)}, opts);
}

} // namespace sepnet
