#include "sepnet/transform.hpp"

namespace sepnet {

std::string selector_name(const std::string& child_name) { return "I[" + child_name + "]"; }

SelectorFactorization to_sum_of_products(const SeparableDecomposition& d) {
    const std::size_t n = d.blocks.size();
    SelectorFactorization out;
    out.selector = Variable(selector_name(d.child.name), static_cast<int>(n));
    const std::size_t zc = static_cast<std::size_t>(d.child.cardinality);
    for (std::size_t i = 0; i < n; ++i) {
        VarList scope{out.selector, d.child};
        for (const Variable& v : d.blocks[i]) scope.push_back(v);
        const std::size_t bs = detail::space_size(d.blocks[i]);
        std::vector<double> values(n * zc * bs, 1.0);
        for (std::size_t z = 0; z < zc; ++z)
            for (std::size_t a = 0; a < bs; ++a)
                values[(i * zc + z) * bs + a] =
                    d.weights[i] * d.components[i].value(a, static_cast<int>(z));
        out.factors.emplace_back(std::move(scope), std::move(values));
    }
    return out;
}

std::vector<Factor> transform_network(const std::vector<Cpt>& network,
                                      const std::vector<NodeAnnotation>& annotations,
                                      const SeparationOptions& opts) {
    std::vector<Factor> out;
    for (const Cpt& cpt : network) {
        const NodeAnnotation* ann = nullptr;
        for (const NodeAnnotation& a : annotations)
            if (a.node == cpt.child().name) ann = &a;
        if (!ann) {
            out.push_back(cpt.table());
            continue;
        }
        std::vector<VarList> blocks = ann->blocks;
        if (blocks.empty())
            for (const Variable& p : cpt.parents()) blocks.push_back({p});
        Separation sep = separate_n(cpt, blocks, opts);
        if (!sep.ok())
            throw NotSeparableError("node '" + cpt.child().name + "' is not separable into the annotated blocks",
                                    cpt.child().name, *sep.witness);
        SelectorFactorization sf = to_sum_of_products(*sep.decomposition);
        for (Factor& g : sf.factors) out.push_back(std::move(g));
    }
    return out;
}

} // namespace sepnet
