#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <vector>

#include "dagsm/mdp.hpp"

namespace dagsm {

namespace detail {

/// Strongly connected components of the policy-induced chain restricted to
/// `nodes` (iterative Tarjan). Returns component id per local node.
inline std::vector<int> scc_components(const std::vector<std::vector<std::uint32_t>>& adj, int& count) {
  const auto n = adj.size();
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<std::uint32_t> stack;
  std::vector<std::pair<std::uint32_t, std::size_t>> call;
  int next_index = 0;
  count = 0;
  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    call.emplace_back(root, 0);
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, edge] = call.back();
      if (edge < adj[v].size()) {
        const auto w = adj[v][edge++];
        if (index[w] < 0) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
      const auto finished = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[finished]);
    }
  }
  return comp;
}

}  // namespace detail

/// Exact long-run reward per unit of difficulty of `policy` on the original
/// (untransformed) MDP: E_mu[reward] / E_mu[difficulty] under the stationary
/// distribution mu of the chain the policy induces from the initial state.
/// Uses a sparse direct solve, so it is meant for models of moderate size.
inline double ratio_value_oracle(const Mdp& mdp, const Policy& policy) {
  if (mdp.has_terminal()) throw MdpError("ratio oracle expects the original MDP");
  const auto n = mdp.num_states();
  if (policy.size() != n) throw MdpError("policy size does not match the state count");

  // Reachable states under the policy.
  std::vector<std::int64_t> local(n, -1);
  std::vector<StateId> nodes{mdp.initial()};
  local[mdp.initial()] = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& t : mdp.transitions(nodes[i], policy[nodes[i]])) {
      if (t.prob > 0.0 && local[t.next] < 0) {
        local[t.next] = static_cast<std::int64_t>(nodes.size());
        nodes.push_back(t.next);
      }
    }
  }
  const auto m = nodes.size();
  std::vector<std::vector<std::uint32_t>> adj(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& t : mdp.transitions(nodes[i], policy[nodes[i]])) {
      if (t.prob > 0.0) adj[i].push_back(static_cast<std::uint32_t>(local[t.next]));
    }
  }
  int count = 0;
  const auto comp = detail::scc_components(adj, count);
  std::vector<char> closed(count, 1);
  for (std::size_t i = 0; i < m; ++i) {
    for (auto j : adj[i]) {
      if (comp[j] != comp[i]) closed[comp[i]] = 0;
    }
  }
  if (std::count(closed.begin(), closed.end(), 1) != 1) {
    throw MdpError("policy induces a multichain process");
  }
  const int recurrent = static_cast<int>(std::find(closed.begin(), closed.end(), 1) - closed.begin());

  std::vector<std::int64_t> rec_index(m, -1);
  std::vector<std::size_t> rec_nodes;
  for (std::size_t i = 0; i < m; ++i) {
    if (comp[i] == recurrent) {
      rec_index[i] = static_cast<std::int64_t>(rec_nodes.size());
      rec_nodes.push_back(i);
    }
  }
  const auto k = static_cast<Eigen::Index>(rec_nodes.size());
  // mu (P - I) = 0 written as (P^T - I) mu = 0, last row replaced by sum(mu) = 1.
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    if (r != k - 1) trip.emplace_back(r, r, -1.0);
  }
  std::vector<double> reward(k, 0.0), difficulty(k, 0.0);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto s = nodes[rec_nodes[c]];
    for (const auto& t : mdp.transitions(s, policy[s])) {
      reward[c] += t.prob * t.reward;
      difficulty[c] += t.prob * t.difficulty;
      const auto row = rec_index[local[t.next]];
      if (row != k - 1) trip.emplace_back(row, c, t.prob);
    }
    trip.emplace_back(k - 1, c, 1.0);
  }
  rhs[k - 1] = 1.0;
  Eigen::SparseMatrix<double> a(k, k);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw MdpError("stationary system is singular");
  const Eigen::VectorXd mu = lu.solve(rhs);
  double num = 0.0, den = 0.0;
  for (Eigen::Index c = 0; c < k; ++c) {
    num += mu[c] * reward[c];
    den += mu[c] * difficulty[c];
  }
  if (!(den > 1e-12)) throw MdpError("policy accrues no difficulty in the long run");
  return num / den;
}

}  // namespace dagsm
