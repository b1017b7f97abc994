#ifndef SEPNET_VARIABLE_HPP
#define SEPNET_VARIABLE_HPP

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sepnet/errors.hpp"

namespace sepnet {

// A named discrete variable. Model documents require cardinality >= 2;
// the core allows 1 so that internal selector variables can have one value
// per mixture component (a one-component mixture is legal).
struct Variable {
    std::string name;
    int cardinality = 2;

    Variable() = default;
    Variable(std::string name, int cardinality) : name(std::move(name)), cardinality(cardinality) {
        if (this->name.empty()) throw FactorError("variable name must be non-empty");
        if (cardinality < 1) throw FactorError("variable '" + this->name + "' has cardinality < 1");
    }

    bool operator==(const Variable& o) const { return name == o.name && cardinality == o.cardinality; }
    bool operator!=(const Variable& o) const { return !(*this == o); }
    bool operator<(const Variable& o) const {
        return name < o.name || (name == o.name && cardinality < o.cardinality);
    }
};

using VarList = std::vector<Variable>;

inline std::optional<std::size_t> find_var(const VarList& scope, const std::string& name) {
    for (std::size_t i = 0; i < scope.size(); ++i)
        if (scope[i].name == name) return i;
    return std::nullopt;
}

inline bool contains_var(const VarList& scope, const std::string& name) {
    return find_var(scope, name).has_value();
}

// True when every variable of `sub` appears (by name) in `super`.
inline bool contains_all(const VarList& super, const VarList& sub) {
    return std::all_of(sub.begin(), sub.end(),
                       [&](const Variable& v) { return contains_var(super, v.name); });
}

inline VarList intersect_vars(const VarList& a, const VarList& b) {
    VarList out;
    for (const Variable& v : a)
        if (contains_var(b, v.name)) out.push_back(v);
    return out;
}

inline VarList subtract_vars(const VarList& a, const VarList& b) {
    VarList out;
    for (const Variable& v : a)
        if (!contains_var(b, v.name)) out.push_back(v);
    return out;
}

// Union preserving the order of `a`, then new variables of `b`.
inline VarList union_vars(const VarList& a, const VarList& b) {
    VarList out = a;
    for (const Variable& v : b)
        if (!contains_var(out, v.name)) out.push_back(v);
    return out;
}

inline bool same_var_set(const VarList& a, const VarList& b) {
    return a.size() == b.size() && contains_all(a, b) && contains_all(b, a);
}

inline std::string var_names(const VarList& vars, const char* sep = ",") {
    std::string s;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (i) s += sep;
        s += vars[i].name;
    }
    return s;
}

// An ordered list of (variable, value-index) pairs with no duplicates.
class Assignment {
  public:
    Assignment() = default;

    void set(const Variable& v, int value) {
        if (value < 0 || value >= v.cardinality)
            throw FactorError("assignment value " + std::to_string(value) + " out of range for '" +
                              v.name + "'");
        for (auto& e : entries_)
            if (e.first.name == v.name) throw FactorError("duplicate variable '" + v.name + "' in assignment");
        entries_.emplace_back(v, value);
    }

    static Assignment of(std::initializer_list<std::pair<Variable, int>> init) {
        Assignment a;
        for (const auto& [v, val] : init) a.set(v, val);
        return a;
    }

    std::optional<int> value_of(const std::string& name) const {
        for (const auto& e : entries_)
            if (e.first.name == name) return e.second;
        return std::nullopt;
    }

    bool contains(const std::string& name) const { return value_of(name).has_value(); }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::vector<std::pair<Variable, int>>& entries() const { return entries_; }

    Assignment restricted_to(const VarList& vars) const {
        Assignment out;
        for (const auto& e : entries_)
            if (contains_var(vars, e.first.name)) out.entries_.push_back(e);
        return out;
    }

    std::string to_string() const {
        std::string s;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (i) s += ",";
            s += entries_[i].first.name + "=" + std::to_string(entries_[i].second);
        }
        return s;
    }

  private:
    std::vector<std::pair<Variable, int>> entries_;
};

} // namespace sepnet

#endif
