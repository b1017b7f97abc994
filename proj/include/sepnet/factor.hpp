#ifndef SEPNET_FACTOR_HPP
#define SEPNET_FACTOR_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sepnet/variable.hpp"

namespace sepnet {

// Thread-local multiply-add counter. Factor operations add to it; wrap a
// region in OpCountScope to measure its cost.
std::uint64_t& op_counter();

class OpCountScope {
  public:
    OpCountScope() : start_(op_counter()) {}
    std::uint64_t elapsed() const { return op_counter() - start_; }

  private:
    std::uint64_t start_;
};

// Dense table over an ordered variable scope. Values are stored mixed-radix
// with the first scope variable most significant and the last fastest-varying.
class Factor {
  public:
    Factor() : values_(1, 1.0) {} // scalar 1, the multiplicative identity

    Factor(VarList scope, std::vector<double> values);

    static Factor scalar(double v) {
        Factor f;
        f.values_[0] = v;
        return f;
    }
    static Factor zeros(VarList scope);

    const VarList& scope() const { return scope_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    std::size_t size() const { return values_.size(); }

    // Stride of the variable at scope position `pos`.
    std::size_t stride(std::size_t pos) const;

    double total_mass() const;

    // Value at a full-scope assignment (matched by name).
    double at(const Assignment& a) const;

    // Linear index of the digit tuple (one digit per scope variable, in order).
    std::size_t linear_index(const std::vector<int>& digits) const;

    void throw_if_negative(const char* context) const;

    bool same_layout(const Factor& o) const { return scope_ == o.scope_; }

  private:
    VarList scope_;
    std::vector<double> values_;
};

// Pointwise product. Result scope is a's order followed by b's new variables.
// Shared variables must agree on cardinality.
Factor multiply(const Factor& a, const Factor& b);

// Sum the variable out of the factor; scope order otherwise preserved.
Factor sum_out(const Factor& f, const Variable& v);

// Slice at the evidence assignment; evidence variables leave the scope and no
// renormalization happens. Every evidence variable must be in scope.
Factor condition(const Factor& f, const Assignment& e);

// Sum out everything outside `subset`, then reorder the scope to subset order.
Factor marginalize_to(const Factor& f, const VarList& subset);

// Divide by total mass. Zero mass is an error, never a silent uniform.
Factor normalize(const Factor& f);

// Permute the scope to `new_scope` (same variable set), remapping values.
Factor reorder(const Factor& f, const VarList& new_scope);

// Zero out entries inconsistent with the evidence for variables in scope;
// scope is preserved. Evidence variables outside the scope are ignored.
Factor restrict_to_evidence(const Factor& f, const Assignment& e);

// Max absolute difference after reordering b to a's scope. Scopes must hold
// the same variable set.
double max_abs_diff(const Factor& a, const Factor& b);

namespace detail {

std::vector<std::size_t> strides(const VarList& scope);
std::size_t space_size(const VarList& scope);
void decode(std::size_t idx, const VarList& scope, std::vector<int>& digits);

} // namespace detail

} // namespace sepnet

#endif
