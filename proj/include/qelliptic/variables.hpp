#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace qell {

enum class VarKind : uint8_t { Nome, Spectral };

struct VarDescriptor {
    std::string name;
    VarKind kind;
    std::string role;  // free-text note, e.g. "deformation nome" / "current argument"
};

/// Ordered, immutable table of the variables a family of series lives over.
/// Exponent vectors are indexed by position in this table. Nome variables
/// carry weight 1 per unit exponent in the nome-degree grading.
class VariableTable {
public:
    explicit VariableTable(std::vector<VarDescriptor> vars) : vars_(std::move(vars)) {
        for (size_t i = 0; i < vars_.size(); ++i)
            for (size_t j = i + 1; j < vars_.size(); ++j)
                if (vars_[i].name == vars_[j].name)
                    throw std::invalid_argument("duplicate variable name: " + vars_[i].name);
    }

    size_t size() const { return vars_.size(); }
    const VarDescriptor& operator[](size_t i) const { return vars_.at(i); }

    size_t index_of(const std::string& name) const {
        for (size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i].name == name) return i;
        throw std::out_of_range("no such variable: " + name);
    }
    bool has(const std::string& name) const {
        for (auto& v : vars_)
            if (v.name == name) return true;
        return false;
    }
    bool is_nome(size_t i) const { return vars_.at(i).kind == VarKind::Nome; }

    bool operator==(const VariableTable& o) const {
        if (vars_.size() != o.vars_.size()) return false;
        for (size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i].name != o.vars_[i].name || vars_[i].kind != o.vars_[i].kind) return false;
        return true;
    }

private:
    std::vector<VarDescriptor> vars_;
};

using VarTablePtr = std::shared_ptr<const VariableTable>;

inline VarTablePtr make_table(std::vector<VarDescriptor> vars) {
    return std::make_shared<const VariableTable>(std::move(vars));
}

/// The common tables used by the workbench. Spectral variables come after
/// nomes so that lexicographic witness order reads (p, q, z, ...).
inline VarTablePtr table_pq_plus(const std::vector<std::string>& spectral) {
    std::vector<VarDescriptor> v{{"p", VarKind::Nome, "elliptic nome"},
                                 {"q", VarKind::Nome, "deformation nome"}};
    for (auto& s : spectral) v.push_back({s, VarKind::Spectral, "current argument"});
    return make_table(std::move(v));
}

}  // namespace qell
