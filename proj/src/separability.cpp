#include "sepnet/separability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sepnet {

namespace {

// Positions of each block variable inside the parent list, and the block's
// assignment-space size. Blocks keep their given variable order.
struct BlockIndex {
    VarList vars;                       // canonicalized to the parent Variable objects
    std::vector<std::size_t> parent_pos;
    std::size_t space = 1;
};

std::vector<BlockIndex> index_blocks(const Cpt& cpt, const std::vector<VarList>& blocks) {
    if (blocks.empty()) throw FactorError("separate: at least one block is required");
    std::vector<bool> covered(cpt.parents().size(), false);
    std::vector<BlockIndex> out;
    for (const VarList& block : blocks) {
        BlockIndex bi;
        for (const Variable& v : block) {
            auto pos = find_var(cpt.parents(), v.name);
            if (!pos)
                throw FactorError("separate: block variable '" + v.name + "' is not a parent of '" +
                                  cpt.child().name + "'");
            if (covered[*pos])
                throw FactorError("separate: blocks overlap on '" + v.name + "'");
            covered[*pos] = true;
            bi.vars.push_back(cpt.parents()[*pos]);
            bi.parent_pos.push_back(*pos);
            bi.space *= static_cast<std::size_t>(cpt.parents()[*pos].cardinality);
        }
        out.push_back(std::move(bi));
    }
    for (std::size_t i = 0; i < covered.size(); ++i)
        if (!covered[i])
            throw FactorError("separate: parent '" + cpt.parents()[i].name + "' is in no block");
    return out;
}

Assignment assignment_from_digits(const VarList& vars, const std::vector<int>& digits) {
    Assignment a;
    for (std::size_t i = 0; i < vars.size(); ++i) a.set(vars[i], digits[i]);
    return a;
}

std::vector<double> replicate_row(std::span<const double> row, std::size_t copies) {
    std::vector<double> out;
    out.reserve(row.size() * copies);
    for (std::size_t i = 0; i < copies; ++i) out.insert(out.end(), row.begin(), row.end());
    return out;
}

// Clamp tiny negative entries to zero and renormalize each child row; entries
// below -eps are a hard error.
std::vector<double> sanitize_component(std::vector<double> table, std::size_t zc, double eps,
                                       const std::string& child) {
    for (double v : table)
        if (v < -eps)
            throw ComponentNotDistributionError("component for '" + child + "' has entry " +
                                                std::to_string(v));
    for (std::size_t r = 0; r < table.size() / zc; ++r) {
        double s = 0.0;
        for (std::size_t z = 0; z < zc; ++z) {
            double& v = table[r * zc + z];
            if (v < 0.0) v = 0.0;
            s += v;
        }
        if (!(s > 0.0))
            throw ComponentNotDistributionError("component row for '" + child + "' has zero mass");
        for (std::size_t z = 0; z < zc; ++z) table[r * zc + z] /= s;
    }
    return table;
}

} // namespace

double SeparableDecomposition::reconstruction_error(const Cpt& source) const {
    const auto bi = index_blocks(source, blocks);
    const std::size_t zc = static_cast<std::size_t>(source.child().cardinality);
    std::vector<int> digits;
    double worst = 0.0;
    for (std::size_t x = 0; x < source.parent_space(); ++x) {
        detail::decode(x, source.parents(), digits);
        for (std::size_t z = 0; z < zc; ++z) {
            double mix = 0.0;
            for (std::size_t i = 0; i < blocks.size(); ++i) {
                std::size_t a = 0;
                for (std::size_t k = 0; k < bi[i].parent_pos.size(); ++k)
                    a = a * static_cast<std::size_t>(bi[i].vars[k].cardinality) +
                        static_cast<std::size_t>(digits[bi[i].parent_pos[k]]);
                mix += weights[i] * components[i].value(a, static_cast<int>(z));
            }
            worst = std::max(worst, std::fabs(mix - source.value(x, static_cast<int>(z))));
        }
    }
    return worst;
}

void SeparableDecomposition::validate(double eps_norm, double eps_sep, const Cpt* source) const {
    if (blocks.size() != weights.size() || blocks.size() != components.size())
        throw FactorError("decomposition: blocks/weights/components size mismatch");
    double s = 0.0;
    for (double w : weights) {
        if (w < -eps_norm) throw FactorError("decomposition: negative weight");
        s += w;
    }
    if (std::fabs(s - 1.0) > eps_norm) throw FactorError("decomposition: weights sum to " + std::to_string(s));
    for (std::size_t i = 0; i < components.size(); ++i) {
        components[i].validate(eps_norm);
        if (components[i].child() != child) throw FactorError("decomposition: component child mismatch");
        if (!same_var_set(components[i].parents(), blocks[i]))
            throw FactorError("decomposition: component " + std::to_string(i) + " parents != block");
    }
    if (source && reconstruction_error(*source) > eps_sep)
        throw FactorError("decomposition does not reconstruct its source");
}

Separation separate_n(const Cpt& cpt, std::vector<VarList> blocks, const SeparationOptions& opts) {
    const auto bi = index_blocks(cpt, blocks);
    const std::size_t n = bi.size();
    const std::size_t zc = static_cast<std::size_t>(cpt.child().cardinality);
    const std::size_t np = cpt.parent_space();
    const double eps = opts.eps_sep;

    // z1: child value with the widest spread over parent assignments.
    int z1 = 0;
    double best_range = -1.0;
    for (std::size_t z = 0; z < zc; ++z) {
        double lo = cpt.value(0, static_cast<int>(z)), hi = lo;
        for (std::size_t x = 1; x < np; ++x) {
            const double v = cpt.value(x, static_cast<int>(z));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo > best_range) {
            best_range = hi - lo;
            z1 = static_cast<int>(z);
        }
    }

    // Reference assignment: minimizes P(z1 | .), lowest index on ties.
    std::size_t ref = 0;
    for (std::size_t x = 1; x < np; ++x)
        if (cpt.value(x, z1) < cpt.value(ref, z1)) ref = x;

    std::vector<int> ref_digits;
    detail::decode(ref, cpt.parents(), ref_digits);
    const std::vector<double> baseline(cpt.row(ref).begin(), cpt.row(ref).end());

    // Per-block deltas against the baseline, varying one block off the
    // reference at a time.
    const auto parent_strides = detail::strides(cpt.parents());
    std::vector<std::vector<double>> delta(n); // delta[i][a*zc + z]
    std::vector<int> adigits;
    for (std::size_t i = 0; i < n; ++i) {
        delta[i].resize(bi[i].space * zc);
        for (std::size_t a = 0; a < bi[i].space; ++a) {
            detail::decode(a, bi[i].vars, adigits);
            std::size_t x = ref;
            for (std::size_t k = 0; k < bi[i].vars.size(); ++k) {
                const std::size_t pp = bi[i].parent_pos[k];
                x += (static_cast<std::size_t>(adigits[k]) - static_cast<std::size_t>(ref_digits[pp])) *
                     parent_strides[pp];
            }
            for (std::size_t z = 0; z < zc; ++z)
                delta[i][a * zc + z] = cpt.value(x, static_cast<int>(z)) - baseline[z];
        }
    }

    // Additivity check: P(z|x) must equal baseline + sum of block deltas.
    std::vector<int> digits;
    std::vector<std::size_t> aidx(n);
    for (std::size_t x = 0; x < np; ++x) {
        detail::decode(x, cpt.parents(), digits);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t a = 0;
            for (std::size_t k = 0; k < bi[i].parent_pos.size(); ++k)
                a = a * static_cast<std::size_t>(bi[i].vars[k].cardinality) +
                    static_cast<std::size_t>(digits[bi[i].parent_pos[k]]);
            aidx[i] = a;
        }
        for (std::size_t z = 0; z < zc; ++z) {
            double additive = baseline[z];
            for (std::size_t i = 0; i < n; ++i) additive += delta[i][aidx[i] * zc + z];
            const double actual = cpt.value(x, static_cast<int>(z));
            if (std::fabs(actual - additive) > eps) {
                Separation out;
                AdditivityWitness w;
                w.parents = assignment_from_digits(cpt.parents(), digits);
                w.child_value = static_cast<int>(z);
                w.table_value = actual;
                w.additive_value = additive;
                out.witness = std::move(w);
                return out;
            }
        }
    }

    // Ranges at z1 (all deltas at z1 are >= 0 because the reference minimizes
    // P(z1|.)) and per-block sup norms.
    std::vector<double> range(n, 0.0), sup(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < bi[i].space; ++a) {
            range[i] = std::max(range[i], delta[i][a * zc + static_cast<std::size_t>(z1)]);
            for (std::size_t z = 0; z < zc; ++z)
                sup[i] = std::max(sup[i], std::fabs(delta[i][a * zc + z]));
        }
    const double total = std::accumulate(range.begin(), range.end(), 0.0);

    DecompositionTrace trace;
    trace.z1 = z1;
    trace.reference = assignment_from_digits(cpt.parents(), ref_digits);
    trace.baseline = Factor({cpt.child()}, baseline);
    for (std::size_t i = 0; i < n; ++i) {
        VarList sc = bi[i].vars;
        sc.push_back(cpt.child());
        trace.deltas.emplace_back(std::move(sc), delta[i]);
    }
    trace.ranges = range;

    SeparableDecomposition dec;
    dec.child = cpt.child();
    for (const auto& b : bi) dec.blocks.push_back(b.vars);

    Separation out;

    if (total <= eps) {
        // Child independent of all parents; every weight vector is valid.
        out.degenerate_child = true;
        dec.weights.assign(n, 1.0 / static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            dec.components.emplace_back(cpt.child(), bi[i].vars, replicate_row(cpt.row(ref), bi[i].space));
        out.decomposition = std::move(dec);
        out.trace = std::move(trace);
        return out;
    }

    // Natural weights from the trace ranges; components baseline + delta/weight.
    std::vector<double> weights(n);
    for (std::size_t i = 0; i < n; ++i) weights[i] = range[i] / total;

    auto build_components = [&](const std::vector<double>& w,
                                const std::vector<std::vector<double>>& anchor) {
        std::vector<std::vector<double>> comp(n);
        bool feasible = true;
        for (std::size_t i = 0; i < n; ++i) {
            comp[i].resize(bi[i].space * zc);
            if (w[i] <= 0.0) {
                if (sup[i] > eps) feasible = false; // block matters but got no weight
                for (std::size_t a = 0; a < bi[i].space; ++a)
                    for (std::size_t z = 0; z < zc; ++z) comp[i][a * zc + z] = baseline[z];
                continue;
            }
            for (std::size_t a = 0; a < bi[i].space; ++a)
                for (std::size_t z = 0; z < zc; ++z) {
                    const double v = anchor[i][z] + delta[i][a * zc + z] / w[i];
                    if (v < -eps) feasible = false;
                    comp[i][a * zc + z] = v;
                }
        }
        return std::pair(std::move(comp), feasible);
    };

    std::vector<std::vector<double>> anchor(n, baseline);
    auto [comp, feasible] = build_components(weights, anchor);

    if (!feasible) {
        // The natural weights do not yield valid component distributions for
        // this table (possible when some block's effect misses z1 entirely).
        // Reallocate: give block i at least the mass its negative deltas
        // require, then spread the remaining slack in natural proportions.
        std::vector<std::vector<double>> need(n, std::vector<double>(zc, 0.0));
        std::vector<double> floor_w(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t z = 0; z < zc; ++z) {
                double worst = 0.0;
                for (std::size_t a = 0; a < bi[i].space; ++a)
                    worst = std::max(worst, -delta[i][a * zc + z]);
                need[i][z] = worst;
                floor_w[i] += worst;
            }
        }
        std::vector<double> slack(zc, 0.0);
        double slack_total = 0.0;
        for (std::size_t z = 0; z < zc; ++z) {
            double s = baseline[z];
            for (std::size_t i = 0; i < n; ++i) s -= need[i][z];
            slack[z] = std::max(0.0, s);
            slack_total += slack[z];
        }
        double wsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            weights[i] = floor_w[i] + slack_total * (range[i] / total);
            wsum += weights[i];
        }
        for (auto& w : weights) w /= wsum;
        for (std::size_t i = 0; i < n; ++i) {
            if (weights[i] <= 0.0) continue;
            const double extra = weights[i] - floor_w[i];
            for (std::size_t z = 0; z < zc; ++z)
                anchor[i][z] = (need[i][z] + (slack_total > 0.0 ? extra * slack[z] / slack_total : 0.0)) /
                               weights[i];
        }
        std::tie(comp, feasible) = build_components(weights, anchor);
        if (!feasible)
            throw ComponentNotDistributionError("separable table for '" + cpt.child().name +
                                                "' admits no valid component allocation");
    }

    dec.weights = std::move(weights);
    for (std::size_t i = 0; i < n; ++i)
        dec.components.emplace_back(cpt.child(), bi[i].vars,
                                    sanitize_component(std::move(comp[i]), zc, eps, cpt.child().name));
    out.decomposition = std::move(dec);
    out.trace = std::move(trace);
    return out;
}

Separation separate_two(const Cpt& cpt, const VarList& left, const VarList& right,
                        const SeparationOptions& opts) {
    return separate_n(cpt, {left, right}, opts);
}

ConditionalSeparation conditional_separate(const Cpt& cpt, const VarList& x, const VarList& y,
                                           const VarList& given, const SeparationOptions& opts) {
    if (!same_var_set(union_vars(x, y), cpt.parents()))
        throw FactorError("conditional_separate: X u Y must equal the parents of '" +
                          cpt.child().name + "'");
    for (const Variable& v : given)
        if (!contains_var(cpt.parents(), v.name))
            throw FactorError("conditional_separate: conditioning variable '" + v.name +
                              "' is not a parent");
    const VarList u = subtract_vars(x, given);
    const VarList v = subtract_vars(y, given);
    if (!intersect_vars(u, v).empty())
        throw FactorError("conditional_separate: blocks overlap on (" +
                          var_names(intersect_vars(u, v)) + ") outside the conditioning set");

    // Conditioning set in parent order, so assignments enumerate in table order.
    VarList w_vars;
    for (const Variable& p : cpt.parents())
        if (contains_var(given, p.name)) w_vars.push_back(p);

    ConditionalDecomposition dec;
    dec.given = w_vars;
    std::vector<int> digits;
    for (std::size_t wi = 0; wi < detail::space_size(w_vars); ++wi) {
        detail::decode(wi, w_vars, digits);
        Assignment w;
        for (std::size_t k = 0; k < w_vars.size(); ++k) w.set(w_vars[k], digits[k]);
        Separation sep = separate_two(cpt.conditioned(w), u, v, opts);
        if (!sep.ok()) {
            ConditionalSeparation fail;
            fail.failed_at = std::move(w);
            fail.witness = std::move(sep.witness);
            return fail;
        }
        dec.gamma.push_back(sep.decomposition->weights[0]);
        dec.assignments.push_back(std::move(w));
        dec.entries.push_back(std::move(*sep.decomposition));
    }
    ConditionalSeparation out;
    out.decomposition = std::move(dec);
    return out;
}

double TreeDecomposition::evaluate(const Assignment& parents, int z) const {
    if (is_leaf()) {
        Assignment a = parents.restricted_to(leaf_cpt->parents());
        std::size_t row = 0;
        for (const Variable& p : leaf_cpt->parents())
            row = row * static_cast<std::size_t>(p.cardinality) +
                  static_cast<std::size_t>(*a.value_of(p.name));
        return leaf_cpt->value(row, z);
    }
    std::size_t wi = 0;
    for (const Variable& w : root_set)
        wi = wi * static_cast<std::size_t>(w.cardinality) +
             static_cast<std::size_t>(*parents.value_of(w.name));
    const Branch& br = branches[wi];
    double out = 0.0;
    for (std::size_t i = 0; i < br.children.size(); ++i)
        out += br.weights[i] * br.children[i].evaluate(parents, z);
    return out;
}

double TreeDecomposition::reconstruction_error(const Cpt& source) const {
    std::vector<int> digits;
    double worst = 0.0;
    for (std::size_t x = 0; x < source.parent_space(); ++x) {
        detail::decode(x, source.parents(), digits);
        const Assignment a = assignment_from_digits(source.parents(), digits);
        for (int z = 0; z < source.child().cardinality; ++z)
            worst = std::max(worst, std::fabs(evaluate(a, z) - source.value(x, z)));
    }
    return worst;
}

namespace {

TreeSeparation tree_separate_rec(const Cpt& local, const TreeRepresentation& tree, std::size_t node,
                                 const SeparationOptions& opts) {
    TreeSeparation out;
    if (tree.is_leaf(node)) {
        TreeDecomposition d;
        d.leaf_cpt = local;
        d.leaf_subset = tree.subset_of(node);
        out.decomposition = std::move(d);
        return out;
    }

    VarList root_set;
    for (const Variable& p : local.parents())
        if (tree.location(p.name) == node) root_set.push_back(p);

    std::vector<VarList> blocks;
    for (std::size_t c : tree.children_of(node)) {
        VarList block;
        for (const Variable& p : local.parents())
            if (!contains_var(root_set, p.name) && contains_var(tree.vars_under(c), p.name))
                block.push_back(p);
        blocks.push_back(std::move(block));
    }

    TreeDecomposition d;
    d.root_set = root_set;
    std::vector<int> digits;
    for (std::size_t wi = 0; wi < detail::space_size(root_set); ++wi) {
        detail::decode(wi, root_set, digits);
        Assignment w;
        for (std::size_t k = 0; k < root_set.size(); ++k) w.set(root_set[k], digits[k]);
        Separation sep = separate_n(local.conditioned(w), blocks, opts);
        if (!sep.ok()) {
            out.failed_at = std::move(w);
            out.witness = std::move(sep.witness);
            return out;
        }
        TreeDecomposition::Branch br;
        br.weights = sep.decomposition->weights;
        const auto& child_ids = tree.children_of(node);
        for (std::size_t i = 0; i < child_ids.size(); ++i) {
            TreeSeparation sub =
                tree_separate_rec(sep.decomposition->components[i], tree, child_ids[i], opts);
            if (!sub.ok()) {
                out.failure_path.push_back(i);
                out.failure_path.insert(out.failure_path.end(), sub.failure_path.begin(),
                                        sub.failure_path.end());
                out.failed_at = std::move(sub.failed_at);
                out.witness = std::move(sub.witness);
                return out;
            }
            br.children.push_back(std::move(*sub.decomposition));
        }
        d.branches.push_back(std::move(br));
    }
    out.decomposition = std::move(d);
    return out;
}

} // namespace

TreeSeparation tree_separate(const Cpt& cpt, const TreeRepresentation& tree,
                             const SeparationOptions& opts) {
    VarList covered;
    for (const VarList& s : tree.leaf_subsets()) covered = union_vars(covered, s);
    if (!contains_all(covered, cpt.parents()))
        throw FactorError("tree_separate: tree leaves do not cover the parents of '" +
                          cpt.child().name + "'");
    return tree_separate_rec(cpt, tree, 0, opts);
}

namespace detail {

std::vector<std::vector<double>> null_space_basis(std::vector<std::vector<double>> rows,
                                                  std::size_t cols, double pivot_tol) {
    const std::size_t m = rows.size();
    std::vector<std::size_t> pivot_col;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < m; ++c) {
        std::size_t p = r;
        for (std::size_t i = r + 1; i < m; ++i)
            if (std::fabs(rows[i][c]) > std::fabs(rows[p][c])) p = i;
        if (std::fabs(rows[p][c]) <= pivot_tol) continue;
        std::swap(rows[r], rows[p]);
        const double inv = 1.0 / rows[r][c];
        for (std::size_t j = c; j < cols; ++j) rows[r][j] *= inv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == r || rows[i][c] == 0.0) continue;
            const double f = rows[i][c];
            for (std::size_t j = c; j < cols; ++j) rows[i][j] -= f * rows[r][j];
        }
        pivot_col.push_back(c);
        ++r;
    }

    std::vector<bool> is_pivot(cols, false);
    for (std::size_t c : pivot_col) is_pivot[c] = true;

    std::vector<std::vector<double>> basis;
    for (std::size_t f = 0; f < cols; ++f) {
        if (is_pivot[f]) continue;
        std::vector<double> v(cols, 0.0);
        v[f] = 1.0;
        for (std::size_t i = 0; i < pivot_col.size(); ++i) v[pivot_col[i]] = -rows[i][f];
        double amax = 0.0;
        for (double x : v) amax = std::max(amax, std::fabs(x));
        for (double& x : v) x /= amax;
        basis.push_back(std::move(v));
    }
    return basis;
}

} // namespace detail

bool sufficiency_oracle(const Cpt& cpt, const std::vector<VarList>& subsets,
                        const OracleOptions& opts) {
    const std::size_t np = cpt.parent_space();
    if (np > opts.parent_space_cap)
        throw CapExceededError("sufficiency oracle: parent space " + std::to_string(np) +
                               " exceeds cap " + std::to_string(opts.parent_space_cap));

    // Restrict subsets to actual parents; extra variables cannot affect the map.
    std::vector<VarList> restricted;
    VarList covered;
    for (const VarList& s : subsets) {
        VarList r;
        for (const Variable& p : cpt.parents())
            if (contains_var(s, p.name)) r.push_back(p);
        covered = union_vars(covered, r);
        restricted.push_back(std::move(r));
    }
    if (!same_var_set(covered, cpt.parents()))
        throw FactorError("sufficiency oracle: subsets do not cover the parents of '" +
                          cpt.child().name + "'");

    std::size_t total_rows = 0;
    for (const VarList& s : restricted) total_rows += detail::space_size(s);

    // M maps a joint parent distribution to its stacked subset marginals.
    std::vector<std::vector<double>> m(total_rows, std::vector<double>(np, 0.0));
    std::vector<int> digits;
    for (std::size_t x = 0; x < np; ++x) {
        detail::decode(x, cpt.parents(), digits);
        std::size_t base = 0;
        for (const VarList& s : restricted) {
            std::size_t a = 0;
            for (const Variable& v : s)
                a = a * static_cast<std::size_t>(v.cardinality) +
                    static_cast<std::size_t>(digits[*find_var(cpt.parents(), v.name)]);
            m[base + a][x] = 1.0;
            base += detail::space_size(s);
        }
    }

    const auto basis = detail::null_space_basis(std::move(m), np, opts.pivot_tol);
    for (const auto& v : basis) {
        for (int z = 0; z < cpt.child().cardinality; ++z) {
            double dot = 0.0;
            for (std::size_t x = 0; x < np; ++x) dot += cpt.value(x, z) * v[x];
            if (std::fabs(dot) > opts.eps_sep) return false;
        }
    }
    return true;
}

Factor apply_decomposition(const SeparableDecomposition& d, const MarginalSet& marginals,
                           const ApplyOptions& opts) {
    Factor result = Factor::zeros({d.child});
    const std::size_t zc = static_cast<std::size_t>(d.child.cardinality);
    for (std::size_t i = 0; i < d.blocks.size(); ++i) {
        if (d.weights[i] <= 0.0) continue;
        Factor q = marginals.marginal_for(d.blocks[i], opts.check_consistency, opts.eps_consistency);
        Factor contrib = multiply(q, d.components[i].table());
        for (const Variable& v : d.blocks[i]) contrib = sum_out(contrib, v);
        contrib = reorder(contrib, {d.child});
        for (std::size_t z = 0; z < zc; ++z) result.values()[z] += d.weights[i] * contrib.values()[z];
        op_counter() += zc;
    }
    return result;
}

namespace {

void collect_leaf_subsets(const TreeDecomposition& d, std::vector<const TreeDecomposition*>& out) {
    if (d.is_leaf()) {
        out.push_back(&d);
        return;
    }
    if (d.branches.empty()) return;
    for (const TreeDecomposition& c : d.branches.front().children) collect_leaf_subsets(c, out);
}

Factor apply_tree(const TreeDecomposition& d, const MarginalSet& marginals,
                  const ApplyOptions& opts) {
    if (d.is_leaf()) {
        const Cpt& cpt = *d.leaf_cpt;
        if (cpt.parents().empty())
            return Factor({cpt.child()},
                          std::vector<double>(cpt.row(0).begin(), cpt.row(0).end()));
        Factor q = marginals.marginal_for(cpt.parents(), opts.check_consistency, opts.eps_consistency);
        Factor contrib = multiply(q, cpt.table());
        for (const Variable& v : cpt.parents()) contrib = sum_out(contrib, v);
        return contrib;
    }

    // Leaf subsets beneath each child, for conditioning only what is needed.
    std::vector<std::vector<const TreeDecomposition*>> leaves_under(
        d.branches.empty() ? 0 : d.branches.front().children.size());
    for (std::size_t i = 0; i < leaves_under.size(); ++i)
        collect_leaf_subsets(d.branches.front().children[i], leaves_under[i]);

    const Variable child = [&] {
        std::vector<const TreeDecomposition*> all;
        collect_leaf_subsets(d, all);
        if (all.empty()) throw FactorError("apply_decomposition: tree decomposition has no leaves");
        return all.front()->leaf_cpt->child();
    }();
    Factor result = Factor::zeros({child});
    const std::size_t zc = static_cast<std::size_t>(child.cardinality);

    if (d.root_set.empty()) {
        const auto& br = d.branches.front();
        for (std::size_t i = 0; i < br.children.size(); ++i) {
            if (br.weights[i] <= 0.0) continue;
            Factor sub = apply_tree(br.children[i], marginals, opts);
            for (std::size_t z = 0; z < zc; ++z) result.values()[z] += br.weights[i] * sub.values()[z];
            op_counter() += zc;
        }
        return result;
    }

    Factor qw = marginals.marginal_for(d.root_set, opts.check_consistency, opts.eps_consistency);
    std::vector<int> digits;
    for (std::size_t wi = 0; wi < qw.size(); ++wi) {
        const double pw = qw.values()[wi];
        if (pw <= 0.0) continue;
        detail::decode(wi, d.root_set, digits);
        Assignment w;
        for (std::size_t k = 0; k < d.root_set.size(); ++k) w.set(d.root_set[k], digits[k]);

        const auto& br = d.branches[wi];
        for (std::size_t i = 0; i < br.children.size(); ++i) {
            if (br.weights[i] <= 0.0) continue;
            // Conditional marginals for the subsets this child actually reads.
            MarginalSet ms;
            for (const TreeDecomposition* leaf : leaves_under[i]) {
                const VarList& subset = leaf->leaf_subset;
                std::size_t src = marginals.subsets.size();
                for (std::size_t s = 0; s < marginals.subsets.size(); ++s)
                    if (same_var_set(marginals.subsets[s], subset)) {
                        src = s;
                        break;
                    }
                if (src == marginals.subsets.size())
                    throw FactorError("apply_decomposition: no marginal for subset (" +
                                      var_names(subset) + ")");
                const Assignment e = w.restricted_to(marginals.marginals[src].scope());
                Factor cond = normalize(condition(marginals.marginals[src], e));
                // keep the original subset label; deeper lookups match on it
                ms.subsets.push_back(marginals.subsets[src]);
                ms.marginals.push_back(std::move(cond));
            }
            Factor sub = apply_tree(br.children[i], ms, opts);
            const double scale = pw * br.weights[i];
            for (std::size_t z = 0; z < zc; ++z) result.values()[z] += scale * sub.values()[z];
            op_counter() += zc + 1;
        }
    }
    return result;
}

} // namespace

Factor apply_decomposition(const TreeDecomposition& d, const MarginalSet& marginals,
                           const ApplyOptions& opts) {
    return apply_tree(d, marginals, opts);
}

} // namespace sepnet
