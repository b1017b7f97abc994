#include "sepnet/factor.hpp"

#include <cmath>
#include <limits>

namespace sepnet {

std::uint64_t& op_counter() {
    thread_local std::uint64_t count = 0;
    return count;
}

namespace detail {

std::vector<std::size_t> strides(const VarList& scope) {
    std::vector<std::size_t> s(scope.size());
    std::size_t acc = 1;
    for (std::size_t i = scope.size(); i-- > 0;) {
        s[i] = acc;
        acc *= static_cast<std::size_t>(scope[i].cardinality);
    }
    return s;
}

std::size_t space_size(const VarList& scope) {
    std::size_t n = 1;
    for (const Variable& v : scope) n *= static_cast<std::size_t>(v.cardinality);
    return n;
}

void decode(std::size_t idx, const VarList& scope, std::vector<int>& digits) {
    digits.resize(scope.size());
    for (std::size_t i = scope.size(); i-- > 0;) {
        auto c = static_cast<std::size_t>(scope[i].cardinality);
        digits[i] = static_cast<int>(idx % c);
        idx /= c;
    }
}

} // namespace detail

Factor::Factor(VarList scope, std::vector<double> values)
    : scope_(std::move(scope)), values_(std::move(values)) {
    for (std::size_t i = 0; i < scope_.size(); ++i)
        for (std::size_t j = i + 1; j < scope_.size(); ++j)
            if (scope_[i].name == scope_[j].name)
                throw FactorError("duplicate variable '" + scope_[i].name + "' in factor scope");
    if (values_.size() != detail::space_size(scope_))
        throw FactorError("factor over (" + var_names(scope_) + ") expects " +
                          std::to_string(detail::space_size(scope_)) + " values, got " +
                          std::to_string(values_.size()));
}

Factor Factor::zeros(VarList scope) {
    std::vector<double> v(detail::space_size(scope), 0.0);
    return Factor(std::move(scope), std::move(v));
}

std::size_t Factor::stride(std::size_t pos) const {
    std::size_t acc = 1;
    for (std::size_t i = scope_.size(); i-- > pos + 1;)
        acc *= static_cast<std::size_t>(scope_[i].cardinality);
    return acc;
}

double Factor::total_mass() const {
    double m = 0.0;
    for (double v : values_) m += v;
    return m;
}

double Factor::at(const Assignment& a) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < scope_.size(); ++i) {
        auto val = a.value_of(scope_[i].name);
        if (!val) throw FactorError("assignment misses scope variable '" + scope_[i].name + "'");
        idx = idx * static_cast<std::size_t>(scope_[i].cardinality) + static_cast<std::size_t>(*val);
    }
    return values_[idx];
}

std::size_t Factor::linear_index(const std::vector<int>& digits) const {
    if (digits.size() != scope_.size()) throw FactorError("digit count does not match scope");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < scope_.size(); ++i)
        idx = idx * static_cast<std::size_t>(scope_[i].cardinality) + static_cast<std::size_t>(digits[i]);
    return idx;
}

void Factor::throw_if_negative(const char* context) const {
    for (double v : values_)
        if (v < 0.0 || std::isnan(v))
            throw FactorError(std::string(context) + ": factor over (" + var_names(scope_) +
                              ") has a negative or NaN entry");
}

Factor multiply(const Factor& a, const Factor& b) {
    VarList scope = a.scope();
    for (const Variable& v : b.scope()) {
        auto pos = find_var(scope, v.name);
        if (!pos) {
            scope.push_back(v);
        } else if (scope[*pos].cardinality != v.cardinality) {
            throw FactorError("cardinality mismatch on shared variable '" + v.name + "': " +
                              std::to_string(scope[*pos].cardinality) + " vs " +
                              std::to_string(v.cardinality));
        }
    }

    const auto a_str = detail::strides(a.scope());
    const auto b_str = detail::strides(b.scope());
    std::vector<std::size_t> sa(scope.size(), 0), sb(scope.size(), 0);
    for (std::size_t i = 0; i < scope.size(); ++i) {
        if (auto p = find_var(a.scope(), scope[i].name)) sa[i] = a_str[*p];
        if (auto p = find_var(b.scope(), scope[i].name)) sb[i] = b_str[*p];
    }

    const std::size_t n = detail::space_size(scope);
    std::vector<double> out(n);
    std::vector<int> digit(scope.size(), 0);
    std::size_t ai = 0, bi = 0;
    for (std::size_t idx = 0;; ++idx) {
        out[idx] = a.values()[ai] * b.values()[bi];
        if (idx + 1 == n) break;
        for (std::size_t p = scope.size(); p-- > 0;) { // odometer increment
            ++digit[p];
            ai += sa[p];
            bi += sb[p];
            if (digit[p] < scope[p].cardinality) break;
            ai -= sa[p] * static_cast<std::size_t>(digit[p]);
            bi -= sb[p] * static_cast<std::size_t>(digit[p]);
            digit[p] = 0;
        }
    }
    op_counter() += n;
    return Factor(std::move(scope), std::move(out));
}

Factor sum_out(const Factor& f, const Variable& v) {
    auto pos = find_var(f.scope(), v.name);
    if (!pos) throw FactorError("sum_out: variable '" + v.name + "' not in scope");

    const std::size_t card = static_cast<std::size_t>(f.scope()[*pos].cardinality);
    const std::size_t after = f.stride(*pos);
    const std::size_t before = f.size() / (card * after);

    VarList scope = f.scope();
    scope.erase(scope.begin() + static_cast<std::ptrdiff_t>(*pos));
    std::vector<double> out(before * after, 0.0);
    for (std::size_t i = 0; i < before; ++i)
        for (std::size_t k = 0; k < card; ++k) {
            const double* src = f.values().data() + (i * card + k) * after;
            double* dst = out.data() + i * after;
            for (std::size_t j = 0; j < after; ++j) dst[j] += src[j];
        }
    op_counter() += f.size();
    return Factor(std::move(scope), std::move(out));
}

Factor condition(const Factor& f, const Assignment& e) {
    if (e.empty()) return f;
    const auto str = detail::strides(f.scope());
    std::size_t base = 0;
    std::vector<bool> fixed(f.scope().size(), false);
    for (const auto& [v, val] : e.entries()) {
        auto pos = find_var(f.scope(), v.name);
        if (!pos) throw FactorError("condition: evidence variable '" + v.name + "' not in scope");
        if (f.scope()[*pos].cardinality != v.cardinality)
            throw FactorError("condition: cardinality mismatch on '" + v.name + "'");
        fixed[*pos] = true;
        base += static_cast<std::size_t>(val) * str[*pos];
    }

    VarList kept;
    std::vector<std::size_t> kept_stride;
    for (std::size_t i = 0; i < f.scope().size(); ++i)
        if (!fixed[i]) {
            kept.push_back(f.scope()[i]);
            kept_stride.push_back(str[i]);
        }

    const std::size_t n = detail::space_size(kept);
    std::vector<double> out(n);
    std::vector<int> digit(kept.size(), 0);
    std::size_t src = base;
    for (std::size_t idx = 0;; ++idx) {
        out[idx] = f.values()[src];
        if (idx + 1 == n) break;
        for (std::size_t p = kept.size(); p-- > 0;) {
            ++digit[p];
            src += kept_stride[p];
            if (digit[p] < kept[p].cardinality) break;
            src -= kept_stride[p] * static_cast<std::size_t>(digit[p]);
            digit[p] = 0;
        }
    }
    return Factor(std::move(kept), std::move(out));
}

Factor marginalize_to(const Factor& f, const VarList& subset) {
    for (const Variable& v : subset)
        if (!contains_var(f.scope(), v.name))
            throw FactorError("marginalize_to: variable '" + v.name + "' not in scope");
    Factor g = f;
    for (const Variable& v : f.scope())
        if (!contains_var(subset, v.name)) g = sum_out(g, v);
    return reorder(g, subset);
}

Factor normalize(const Factor& f) {
    const double mass = f.total_mass();
    if (!(mass > 0.0))
        throw ZeroMassError("normalize: factor over (" + var_names(f.scope()) + ") has zero mass");
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f.values()[i] / mass;
    op_counter() += f.size();
    return Factor(f.scope(), std::move(out));
}

Factor reorder(const Factor& f, const VarList& new_scope) {
    if (new_scope == f.scope()) return f;
    if (new_scope.size() != f.scope().size() || !contains_all(f.scope(), new_scope) ||
        !contains_all(new_scope, f.scope()))
        throw FactorError("reorder: (" + var_names(new_scope) + ") is not a permutation of (" +
                          var_names(f.scope()) + ")");

    const auto old_str = detail::strides(f.scope());
    std::vector<std::size_t> str(new_scope.size());
    for (std::size_t i = 0; i < new_scope.size(); ++i) str[i] = old_str[*find_var(f.scope(), new_scope[i].name)];

    const std::size_t n = f.size();
    std::vector<double> out(n);
    std::vector<int> digit(new_scope.size(), 0);
    std::size_t src = 0;
    for (std::size_t idx = 0;; ++idx) {
        out[idx] = f.values()[src];
        if (idx + 1 == n) break;
        for (std::size_t p = new_scope.size(); p-- > 0;) {
            ++digit[p];
            src += str[p];
            if (digit[p] < new_scope[p].cardinality) break;
            src -= str[p] * static_cast<std::size_t>(digit[p]);
            digit[p] = 0;
        }
    }
    return Factor(new_scope, std::move(out));
}

Factor restrict_to_evidence(const Factor& f, const Assignment& e) {
    std::vector<double> out = f.values();
    std::vector<int> digit;
    for (const auto& [v, val] : e.entries()) {
        auto pos = find_var(f.scope(), v.name);
        if (!pos) continue;
        const std::size_t card = static_cast<std::size_t>(f.scope()[*pos].cardinality);
        const std::size_t after = f.stride(*pos);
        const std::size_t before = f.size() / (card * after);
        for (std::size_t i = 0; i < before; ++i)
            for (std::size_t k = 0; k < card; ++k) {
                if (static_cast<int>(k) == val) continue;
                double* dst = out.data() + (i * card + k) * after;
                for (std::size_t j = 0; j < after; ++j) dst[j] = 0.0;
            }
    }
    return Factor(f.scope(), std::move(out));
}

double max_abs_diff(const Factor& a, const Factor& b) {
    const Factor rb = reorder(b, a.scope());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = std::fabs(a.values()[i] - rb.values()[i]);
        if (x > d) d = x;
    }
    return d;
}

} // namespace sepnet
