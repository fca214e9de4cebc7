#pragma once

// Conditional independence in a DAG by the moralisation criterion: restrict to
// the ancestral set of A u B u C, marry co-parents, drop directions, delete C,
// and test whether any path joins A to B.

#include <algorithm>
#include <istream>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "updown/csv.hpp"
#include "updown/error.hpp"
#include "updown/sim.hpp"

namespace updown {

using NodeSet = std::set<std::string>;

class Dag {
public:
    Dag() = default;

    void add_node(const std::string& name) {
        require(!name.empty(), "dag: empty node name");
        nodes_.insert(name);
    }

    void add_edge(const std::string& parent, const std::string& child) {
        require(parent != child, "dag: self loop on " + parent);
        add_node(parent);
        add_node(child);
        if (!edges_.insert({parent, child}).second) return;
        if (reaches(child, parent)) {
            edges_.erase({parent, child});
            throw ContractViolation("dag: edge " + parent + " -> " + child + " creates a cycle");
        }
        parents_[child].insert(parent);
    }

    // Subgraph on `keep`; no cycle checks, since a subgraph of a DAG is acyclic.
    [[nodiscard]] Dag induced(const NodeSet& keep) const {
        Dag out;
        for (const auto& n : keep)
            if (has_node(n)) out.nodes_.insert(n);
        for (const auto& [p, c] : edges_) {
            if (!out.nodes_.count(p) || !out.nodes_.count(c)) continue;
            out.edges_.insert(out.edges_.end(), {p, c});
            out.parents_[c].insert(p);
        }
        return out;
    }

    [[nodiscard]] const NodeSet& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::set<std::pair<std::string, std::string>>& edges() const noexcept { return edges_; }
    [[nodiscard]] bool has_node(const std::string& n) const { return nodes_.count(n) > 0; }
    [[nodiscard]] bool has_edge(const std::string& p, const std::string& c) const { return edges_.count({p, c}) > 0; }

    [[nodiscard]] const NodeSet& parents(const std::string& node) const {
        static const NodeSet none;
        const auto it = parents_.find(node);
        return it == parents_.end() ? none : it->second;
    }

private:
    [[nodiscard]] bool reaches(const std::string& from, const std::string& to) const {
        std::vector<std::string> stack{from};
        NodeSet seen{from};
        while (!stack.empty()) {
            const std::string n = stack.back();
            stack.pop_back();
            if (n == to) return true;
            for (auto it = edges_.lower_bound({n, std::string()}); it != edges_.end() && it->first == n; ++it)
                if (seen.insert(it->second).second) stack.push_back(it->second);
        }
        return false;
    }

    NodeSet nodes_;
    std::set<std::pair<std::string, std::string>> edges_;
    std::map<std::string, NodeSet> parents_;
};

class UndirectedGraph {
public:
    void add_node(const std::string& n) { adj_[n]; }
    void add_edge(const std::string& u, const std::string& v) {
        if (u == v) return;
        adj_[u].insert(v);
        adj_[v].insert(u);
    }
    void remove_node(const std::string& n) {
        auto it = adj_.find(n);
        if (it == adj_.end()) return;
        for (const auto& m : it->second) adj_[m].erase(n);
        adj_.erase(it);
    }

    [[nodiscard]] bool has_node(const std::string& n) const { return adj_.count(n) > 0; }
    [[nodiscard]] bool has_edge(const std::string& u, const std::string& v) const {
        auto it = adj_.find(u);
        return it != adj_.end() && it->second.count(v) > 0;
    }
    [[nodiscard]] std::size_t node_count() const noexcept { return adj_.size(); }
    [[nodiscard]] std::size_t edge_count() const noexcept {
        std::size_t n = 0;
        for (const auto& [_, nb] : adj_) n += nb.size();
        return n / 2;
    }

    // Breadth-first search from every node of `from`.
    [[nodiscard]] bool connected(const NodeSet& from, const NodeSet& to) const {
        std::queue<std::string> q;
        NodeSet seen;
        for (const auto& n : from)
            if (has_node(n) && seen.insert(n).second) q.push(n);
        while (!q.empty()) {
            const std::string n = q.front();
            q.pop();
            if (to.count(n)) return true;
            for (const auto& m : adj_.at(n))
                if (seen.insert(m).second) q.push(m);
        }
        return false;
    }

private:
    std::map<std::string, NodeSet> adj_;
};

// Induced subgraph on `subset` and all of its ancestors.
inline Dag ancestral_graph(const Dag& dag, const NodeSet& subset) {
    NodeSet keep;
    std::vector<std::string> stack;
    for (const auto& n : subset) {
        require(dag.has_node(n), "ancestral_graph: unknown node " + n);
        if (keep.insert(n).second) stack.push_back(n);
    }
    while (!stack.empty()) {
        const std::string n = stack.back();
        stack.pop_back();
        for (const auto& p : dag.parents(n))
            if (keep.insert(p).second) stack.push_back(p);
    }
    return dag.induced(keep);
}

inline UndirectedGraph moralize(const Dag& dag) {
    UndirectedGraph g;
    for (const auto& n : dag.nodes()) g.add_node(n);
    for (const auto& [p, c] : dag.edges()) g.add_edge(p, c);
    for (const auto& n : dag.nodes()) {
        const NodeSet& ps = dag.parents(n);
        for (auto i = ps.begin(); i != ps.end(); ++i)
            for (auto j = std::next(i); j != ps.end(); ++j) g.add_edge(*i, *j);
    }
    return g;
}

inline bool cond_independent(const Dag& dag, const NodeSet& A, const NodeSet& B, const NodeSet& C) {
    require(!A.empty() && !B.empty(), "cond_independent: A and B must be nonempty");
    for (const auto* set : {&A, &B, &C})
        for (const auto& n : *set) require(dag.has_node(n), "cond_independent: unknown node " + n);
    for (const auto& n : A) require(!B.count(n) && !C.count(n), "cond_independent: sets overlap at " + n);
    for (const auto& n : B) require(!C.count(n), "cond_independent: sets overlap at " + n);

    NodeSet all = A;
    all.insert(B.begin(), B.end());
    all.insert(C.begin(), C.end());
    UndirectedGraph g = moralize(ancestral_graph(dag, all));
    for (const auto& n : C) g.remove_node(n);
    return !g.connected(A, B);
}

inline std::string s_node(int t) { return "S" + std::to_string(t); }
inline std::string y_node(int t) { return "Y" + std::to_string(t); }
inline constexpr const char* kAlphaNode = "alpha";

inline Dag scheme_dag(Scheme scheme, int T) {
    require(T >= 1, "scheme_dag: T must be >= 1");
    Dag g;
    if (has_random_effect(scheme)) g.add_node(kAlphaNode);
    for (int t = 1; t <= T; ++t) {
        g.add_edge(s_node(t), y_node(t));
        if (has_random_effect(scheme)) g.add_edge(kAlphaNode, y_node(t));
        if (is_updown(scheme) && t >= 2) {
            g.add_edge(s_node(t - 1), s_node(t));
            g.add_edge(y_node(t - 1), s_node(t));
        }
    }
    return g;
}

inline std::string canonical_node(std::string_view name) {
    const auto n = trim(name);
    if (n == "α" || n == "alpha") return kAlphaNode;
    return std::string(n);
}

// One `parent -> child` edge per line; blank lines and `#` comments ignored.
// A line holding a single name declares an isolated node.
inline Dag parse_dag(std::istream& in) {
    Dag g;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = std::string(trim(line.substr(0, line.find('#'))));
        if (body.empty()) continue;
        const auto arrow = body.find("->");
        try {
            if (arrow == std::string::npos) {
                g.add_node(canonical_node(body));
            } else {
                const auto parent = canonical_node(std::string_view(body).substr(0, arrow));
                const auto child = canonical_node(std::string_view(body).substr(arrow + 2));
                require(!parent.empty() && !child.empty(), "malformed edge");
                g.add_edge(parent, child);
            }
        } catch (const ContractViolation& e) {
            throw ContractViolation("graph line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return g;
}

struct DagQuery {
    NodeSet A, B, C;
};

// `A | B | C` with comma-separated node lists; C may be empty and a trailing
// `?` is ignored.
inline DagQuery parse_query(std::string_view text) {
    std::string s(trim(text));
    if (!s.empty() && s.back() == '?') s.pop_back();
    const auto parts = split(s, '|');
    require(parts.size() == 2 || parts.size() == 3, "query: expected 'A | B | C'");
    auto nodes = [](const std::string& field) {
        NodeSet out;
        for (const auto& tok : split(field, ',')) {
            const auto n = canonical_node(tok);
            if (!n.empty()) out.insert(n);
        }
        return out;
    };
    DagQuery q{nodes(parts[0]), nodes(parts[1]), parts.size() == 3 ? nodes(parts[2]) : NodeSet{}};
    require(!q.A.empty() && !q.B.empty(), "query: A and B must name at least one node");
    return q;
}

}  // namespace updown
