#include "sepnet/tree_rep.hpp"

#include "sepnet/errors.hpp"

namespace sepnet {

TreeRepresentation::TreeRepresentation(TreeNode root) : root_(std::move(root)) {
    index(root_, 0);
    if (parent_.empty()) throw FactorError("tree representation is empty");
    bool any_leaf = false;
    for (std::size_t id = 0; id < node_count(); ++id) {
        if (!is_leaf(id)) continue;
        any_leaf = true;
        if (subset_[id].empty()) throw FactorError("tree leaf has an empty subset");
    }
    if (!any_leaf) throw FactorError("tree representation has no leaves");
}

TreeRepresentation TreeRepresentation::leaf(VarList subset) {
    TreeNode n;
    n.subset = std::move(subset);
    return TreeRepresentation(std::move(n));
}

TreeRepresentation TreeRepresentation::flat(std::vector<VarList> subsets) {
    TreeNode root;
    for (auto& s : subsets) {
        TreeNode leaf;
        leaf.subset = std::move(s);
        root.children.push_back(std::move(leaf));
    }
    return TreeRepresentation(std::move(root));
}

void TreeRepresentation::index(const TreeNode& node, std::size_t parent) {
    const std::size_t id = parent_.size();
    parent_.push_back(id == 0 ? 0 : parent);
    children_.emplace_back();
    depth_.push_back(id == 0 ? 0 : depth_[parent] + 1);
    if (node.is_leaf()) {
        subset_.push_back(node.subset);
        under_.push_back(node.subset);
    } else {
        if (!node.subset.empty())
            throw FactorError("internal tree node must not carry a leaf subset");
        subset_.emplace_back();
        under_.emplace_back();
    }
    for (const TreeNode& c : node.children) {
        const std::size_t cid = parent_.size();
        children_[id].push_back(cid);
        index(c, id);
        under_[id] = union_vars(under_[id], under_[cid]);
    }
}

std::vector<VarList> TreeRepresentation::leaf_subsets() const {
    std::vector<VarList> out;
    for (std::size_t id = 0; id < node_count(); ++id)
        if (is_leaf(id)) out.push_back(subset_[id]);
    return out;
}

std::size_t TreeRepresentation::location(const std::string& name) const {
    // Lowest common ancestor of all leaves containing the variable.
    std::size_t lca = node_count();
    for (std::size_t id = 0; id < node_count(); ++id) {
        if (!is_leaf(id) || !contains_var(subset_[id], name)) continue;
        if (lca == node_count()) {
            lca = id;
            continue;
        }
        std::size_t a = lca, b = id;
        while (a != b) {
            if (depth_[a] >= depth_[b]) a = parent_[a];
            else b = parent_[b];
        }
        lca = a;
    }
    if (lca == node_count()) throw FactorError("variable '" + name + "' occurs in no tree leaf");
    return lca;
}

VarList TreeRepresentation::located_at(std::size_t id) const {
    VarList out;
    for (const Variable& v : under_[id])
        if (location(v.name) == id) out.push_back(v);
    return out;
}

bool TreeRepresentation::is_complete() const {
    for (const Variable& v : under_[0]) {
        const std::size_t loc = location(v.name);
        for (std::size_t id = 0; id < node_count(); ++id) {
            if (!is_leaf(id)) continue;
            // beneath loc?
            std::size_t a = id;
            while (a != loc && a != 0) a = parent_[a];
            if (a == loc && !contains_var(subset_[id], v.name)) return false;
        }
    }
    return true;
}

} // namespace sepnet
