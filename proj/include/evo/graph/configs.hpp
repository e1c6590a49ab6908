#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "evo/graph/graph.hpp"
#include "evo/rng.hpp"

namespace evo {

/// Saturating product of alternative counts over the multi-alternative
/// reachable nodes: the theoretical configuration-space size.
inline std::uint64_t config_product(const Graph& g) {
  std::uint64_t prod = 1;
  for (const auto& name : g.multi_alt_reachable()) {
    const std::uint64_t c = g.node(name).alts.size();
    if (prod > UINT64_MAX / c) return UINT64_MAX;
    prod *= c;
  }
  return prod;
}

/// Enumerates configurations up to `cap`. Below the cap this is the full
/// product in lexicographic order (node names sorted, alternatives in
/// stored order). Above it: the incumbent best configuration, then all
/// single-node deviations from it, then deterministic pseudo-random fill
/// from the unseen remainder of the product space.
inline std::vector<Configuration> enumerate_configs(const Graph& g,
                                                    std::size_t cap,
                                                    Rng& rng) {
  const std::vector<std::string> axes = g.multi_alt_reachable();
  std::vector<std::size_t> counts;
  counts.reserve(axes.size());
  for (const auto& a : axes) counts.push_back(g.node(a).alts.size());

  auto config_at = [&](const std::vector<std::size_t>& idx) {
    Configuration c;
    for (std::size_t i = 0; i < axes.size(); ++i)
      c[axes[i]] = g.node(axes[i]).alts[idx[i]].id;
    return c;
  };

  const std::uint64_t product = config_product(g);
  std::vector<Configuration> out;
  if (product <= cap) {
    std::vector<std::size_t> idx(axes.size(), 0);
    for (;;) {
      out.push_back(config_at(idx));
      std::size_t k = axes.size();
      while (k > 0) {
        --k;
        if (++idx[k] < counts[k]) break;
        idx[k] = 0;
        if (k == 0) return out;
      }
      if (axes.empty()) return out;
    }
  }

  std::set<Configuration> seen;
  auto push = [&](const Configuration& c) {
    if (out.size() < cap && seen.insert(c).second) out.push_back(c);
  };

  // incumbent first (falling back to all-first alternatives)
  Configuration incumbent;
  for (const auto& a : axes) incumbent[a] = g.node(a).alts.front().id;
  if (g.incumbent_config) {
    for (const auto& [name, alt_id] : *g.incumbent_config) {
      auto it = incumbent.find(name);
      if (it != incumbent.end() && g.node(name).find_alt(alt_id))
        it->second = alt_id;
    }
  }
  push(incumbent);

  // greedy neighborhood: all single-node deviations, ordered by node name
  for (std::size_t i = 0; i < axes.size() && out.size() < cap; ++i) {
    for (const auto& alt : g.node(axes[i]).alts) {
      if (alt.id == incumbent[axes[i]]) continue;
      Configuration c = incumbent;
      c[axes[i]] = alt.id;
      push(c);
      if (out.size() >= cap) break;
    }
  }

  // pseudo-random fill from the unseen product space
  std::size_t attempts = 0;
  const std::size_t max_attempts = 1000 * cap;
  std::vector<std::size_t> idx(axes.size());
  while (out.size() < cap && attempts++ < max_attempts) {
    for (std::size_t i = 0; i < axes.size(); ++i)
      idx[i] = static_cast<std::size_t>(rng.next_below(counts[i]));
    push(config_at(idx));
  }
  if (out.size() < cap) {
    // systematic sweep as a last resort when rejection stalls
    std::fill(idx.begin(), idx.end(), 0);
    for (;;) {
      push(config_at(idx));
      if (out.size() >= cap) break;
      std::size_t k = axes.size();
      bool done = true;
      while (k > 0) {
        --k;
        if (++idx[k] < counts[k]) {
          done = false;
          break;
        }
        idx[k] = 0;
      }
      if (done) break;
    }
  }
  return out;
}

}  // namespace evo
