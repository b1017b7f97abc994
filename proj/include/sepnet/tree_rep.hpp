#ifndef SEPNET_TREE_REP_HPP
#define SEPNET_TREE_REP_HPP

#include <string>
#include <vector>

#include "sepnet/variable.hpp"

namespace sepnet {

// Rooted tree with one leaf per variable subset. Internal nodes carry no
// labels of their own; a variable's location (the lowest node with all
// containing subsets at or beneath it) is derived.
struct TreeNode {
    std::vector<TreeNode> children;
    VarList subset; // leaf payload; empty for internal nodes

    bool is_leaf() const { return children.empty(); }
};

class TreeRepresentation {
  public:
    TreeRepresentation() = default;
    explicit TreeRepresentation(TreeNode root);

    // Single-leaf tree.
    static TreeRepresentation leaf(VarList subset);

    // Root with one leaf child per subset.
    static TreeRepresentation flat(std::vector<VarList> subsets);

    const TreeNode& root() const { return root_; }

    std::size_t node_count() const { return parent_.size(); }
    bool is_leaf(std::size_t id) const { return children_[id].empty(); }
    const std::vector<std::size_t>& children_of(std::size_t id) const { return children_[id]; }
    const VarList& subset_of(std::size_t id) const { return subset_[id]; }

    // Leaf subsets in depth-first order.
    std::vector<VarList> leaf_subsets() const;

    // Union of leaf subsets beneath the node.
    const VarList& vars_under(std::size_t id) const { return under_[id]; }

    // Node id of the variable's location. The variable must occur in a leaf.
    std::size_t location(const std::string& name) const;

    // Variables located exactly at the node.
    VarList located_at(std::size_t id) const;

    // True when every leaf beneath each variable's location contains it.
    bool is_complete() const;

  private:
    void index(const TreeNode& node, std::size_t parent);

    TreeNode root_;
    // Flattened form: node 0 is the root, children listed in order.
    std::vector<std::size_t> parent_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<VarList> subset_;
    std::vector<VarList> under_;
    std::vector<std::size_t> depth_;
};

} // namespace sepnet

#endif
