#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "ccdispatch/pep.hpp"

namespace ccdispatch {

Index PePoint::kept_count() const {
  return static_cast<Index>(std::count(kept.begin(), kept.end(), std::uint8_t{1}));
}

namespace {

struct Inputs {
  const Matrix& w;  // N_s x T
  const Vector& lambda;
  const Vector& ell;
  Index n = 0;
  Index horizon = 0;
  Index q = 0;       // kept quota
  Index budget = 0;  // n - q exclusions
};

Inputs check_inputs(const ScenarioSet& set, double p, const Vector& lambda,
                    const Vector& ell) {
  Inputs in{set.samples, lambda, ell};
  in.n = set.num_samples();
  in.horizon = set.horizon();
  if (in.n < 1) throw DomainError("empty scenario set");
  if (lambda.size() != in.horizon || ell.size() != in.horizon)
    throw DomainError("lambda and ell_p must have horizon length");
  if (lambda.size() > 0 && lambda.minCoeff() < 0.0)
    throw DomainError("lambda must be nonnegative");
  in.q = quota(p, in.n);
  if (in.q > in.n) throw DomainError("quota exceeds sample size");
  in.budget = in.n - in.q;
  return in;
}

// v^t = min(ell^t, min over kept samples); shared by every solver path so the
// arithmetic is bit-identical.
Vector point_of(const Inputs& in, const std::vector<Index>& kept_idx) {
  Vector v = in.ell;
  for (Index t = 0; t < in.horizon; ++t) {
    double m = v(t);
    for (Index s : kept_idx) m = std::min(m, in.w(s, t));
    v(t) = m;
  }
  return v;
}

PePoint make_point(const Inputs& in, const std::vector<Index>& kept_idx) {
  PePoint pt;
  pt.v = point_of(in, kept_idx);
  pt.kept.assign(in.n, 0);
  for (Index s : kept_idx) pt.kept[static_cast<std::size_t>(s)] = 1;
  pt.objective = in.lambda.dot(pt.v);
  return pt;
}

// Normalizes any optimal witness to the lexicographically smallest kept set:
// every quota-size subset of the dominators of v keeps the objective, so the
// q smallest dominator indices are the canonical choice.
PePoint canonicalize(const Inputs& in, const Vector& v_witness) {
  std::vector<Index> kept_idx;
  kept_idx.reserve(static_cast<std::size_t>(in.q));
  for (Index s = 0; s < in.n && static_cast<Index>(kept_idx.size()) < in.q; ++s) {
    if ((in.w.row(s).transpose().array() >= v_witness.array()).all()) kept_idx.push_back(s);
  }
  if (static_cast<Index>(kept_idx.size()) < in.q)
    throw StructureError("pep: witness dominated by fewer samples than the quota");
  return make_point(in, kept_idx);
}

constexpr double kTieTol = 1e-12;

// Exact search over exclusion sets. An optimal exclusion set is a union of
// per-slot bottom prefixes (removing a sample that is nowhere minimal never
// raises any component), so nodes fix one slot's prefix depth at a time,
// track the union bitmask exactly, and bound the unresolved slots by the
// deepest prefix the remaining budget still buys given that union. Best
// bound first, ties FIFO.
class DepthSearch {
 public:
  explicit DepthSearch(const Inputs& in) : in_(in), words_((in.n + 63) / 64) {
    order_.resize(static_cast<std::size_t>(in_.horizon));
    for (Index t = 0; t < in_.horizon; ++t) {
      auto& ord = order_[static_cast<std::size_t>(t)];
      ord.resize(static_cast<std::size_t>(in_.n));
      std::iota(ord.begin(), ord.end(), Index{0});
      std::sort(ord.begin(), ord.end(), [&](Index a, Index b) {
        if (in_.w(a, t) != in_.w(b, t)) return in_.w(a, t) < in_.w(b, t);
        return a < b;
      });
    }
    // Level after excluding the d smallest at slot t, capped by ell.
    lvl_.resize(static_cast<std::size_t>(in_.horizon));
    for (Index t = 0; t < in_.horizon; ++t) {
      auto& lvl = lvl_[static_cast<std::size_t>(t)];
      lvl.resize(static_cast<std::size_t>(in_.budget) + 1);
      for (Index d = 0; d <= in_.budget; ++d)
        lvl[static_cast<std::size_t>(d)] =
            std::min(in_.ell(t), in_.w(order_[static_cast<std::size_t>(t)]
                                             [static_cast<std::size_t>(d)],
                                       t));
    }
    // Slots worth branching on, most improvement first.
    for (Index t = 0; t < in_.horizon; ++t) {
      const auto& lvl = lvl_[static_cast<std::size_t>(t)];
      if (in_.lambda(t) * (lvl.back() - lvl.front()) > 0.0) comps_.push_back(t);
    }
    std::sort(comps_.begin(), comps_.end(), [&](Index a, Index b) {
      const double ga = in_.lambda(a) * (lvl_[static_cast<std::size_t>(a)].back() -
                                         lvl_[static_cast<std::size_t>(a)].front());
      const double gb = in_.lambda(b) * (lvl_[static_cast<std::size_t>(b)].back() -
                                         lvl_[static_cast<std::size_t>(b)].front());
      if (ga != gb) return ga > gb;
      return a < b;
    });
    mask_.assign(static_cast<std::size_t>(words_), 0);
  }

  PePoint run(BnbStats* stats) {
    inc_obj_ = -std::numeric_limits<double>::infinity();
    offer_mask();  // keep-all baseline
    greedy_from_mask();

    std::priority_queue<Entry> open;
    nodes_.push_back(NodeRec{-1, -1, 0});
    {
      const double root = bound_for_mask(in_.budget);
      if (!comps_.empty() && root > inc_obj_ + kTieTol) open.push({root, 0, 0});
      if (stats) stats->root_bound = comps_.empty() ? inc_obj_ : root;
    }

    std::int64_t expanded = 0;
    std::vector<Index> fresh;
    while (!open.empty()) {
      const Entry entry = open.top();
      open.pop();
      if (entry.bound <= inc_obj_ + kTieTol) continue;
      ++expanded;
      load_mask(entry.id);
      const Index level = entry.level;
      const Index t = comps_[static_cast<std::size_t>(level)];
      const bool leaf = level + 1 >= static_cast<Index>(comps_.size());

      // Children: every prefix depth at slot t the remaining budget allows,
      // extending the union mask cumulatively as the depth grows.
      const auto& ord = order_[static_cast<std::size_t>(t)];
      const Index base_depth = prefix_depth(t);
      fresh.clear();
      for (Index d = base_depth; d <= in_.budget; ++d) {
        if (d > base_depth) {
          const Index s = ord[static_cast<std::size_t>(d - 1)];
          if (!test(s)) {
            if (used_ == in_.budget) break;
            set_bit(s);
            fresh.push_back(s);
          }
        }
        if (leaf) {
          offer_mask();
        } else {
          const double child_bound = bound_for_mask(in_.budget - used_);
          if (child_bound > inc_obj_ + kTieTol) {
            nodes_.push_back(NodeRec{entry.id, t, d});
            open.push({child_bound, static_cast<std::int64_t>(nodes_.size() - 1),
                       level + 1});
          }
        }
      }
      for (Index s : fresh) clear_bit(s);
    }

    if (stats) {
      stats->nodes = expanded;
      stats->incumbent = inc_obj_;
    }
    return canonicalize(in_, inc_v_);
  }

 private:
  struct NodeRec {
    std::int64_t parent;
    Index slot;   // slot whose prefix this node fixes
    Index depth;  // prefix depth chosen
  };
  struct Entry {
    double bound;
    std::int64_t id;
    Index level;
    bool operator<(const Entry& other) const {
      if (bound != other.bound) return bound < other.bound;
      return id > other.id;
    }
  };

  bool test(Index s) const {
    return (mask_[static_cast<std::size_t>(s >> 6)] >> (s & 63)) & 1ULL;
  }
  void set_bit(Index s) {
    mask_[static_cast<std::size_t>(s >> 6)] |= 1ULL << (s & 63);
    ++used_;
  }
  void clear_bit(Index s) {
    mask_[static_cast<std::size_t>(s >> 6)] &= ~(1ULL << (s & 63));
    --used_;
  }

  // Rebuilds the union bitmask of a node by replaying its ancestry.
  void load_mask(std::int64_t id) {
    std::fill(mask_.begin(), mask_.end(), 0);
    used_ = 0;
    for (std::int64_t cur = id; cur > 0; cur = nodes_[static_cast<std::size_t>(cur)].parent) {
      const NodeRec& rec = nodes_[static_cast<std::size_t>(cur)];
      const auto& ord = order_[static_cast<std::size_t>(rec.slot)];
      for (Index d = 0; d < rec.depth; ++d) {
        const Index s = ord[static_cast<std::size_t>(d)];
        if (!test(s)) set_bit(s);
      }
    }
  }

  // Depth of the excluded prefix at slot t under the current mask.
  Index prefix_depth(Index t) const {
    const auto& ord = order_[static_cast<std::size_t>(t)];
    Index d = 0;
    while (d < in_.n && test(ord[static_cast<std::size_t>(d)])) ++d;
    return d;
  }

  // Deepest prefix at slot t reachable with `left` fresh exclusions on top of
  // the current mask.
  Index reachable_depth(Index t, Index left) const {
    const auto& ord = order_[static_cast<std::size_t>(t)];
    Index d = 0;
    Index spent = 0;
    while (d < in_.budget) {
      if (!test(ord[static_cast<std::size_t>(d)])) {
        if (spent == left) break;
        ++spent;
      }
      ++d;
    }
    return d;
  }

  // Upper bound on the objective of any completion: every slot at the deepest
  // prefix the remaining budget can buy for it alone.
  double bound_for_mask(Index left) const {
    double bound = 0.0;
    for (Index t = 0; t < in_.horizon; ++t) {
      if (in_.lambda(t) == 0.0) continue;
      bound += in_.lambda(t) *
               lvl_[static_cast<std::size_t>(t)][static_cast<std::size_t>(
                   reachable_depth(t, left))];
    }
    return bound;
  }

  // Exact objective of the current mask (kept = unexcluded), offered as an
  // incumbent. The kept count exceeds the quota; padding is deferred to the
  // final canonicalization, which can only raise the point.
  void offer_mask() {
    Vector v(in_.horizon);
    for (Index t = 0; t < in_.horizon; ++t)
      v(t) = lvl_[static_cast<std::size_t>(t)][static_cast<std::size_t>(prefix_depth(t))];
    const double obj = in_.lambda.dot(v);
    if (obj > inc_obj_) {
      inc_obj_ = obj;
      inc_v_ = v;
    }
  }

  // Marginal-gain greedy from the current mask; offers its result, restores
  // the mask.
  void greedy_from_mask() {
    std::vector<Index> touched;
    while (used_ < in_.budget) {
      Index best_t = -1;
      double best_gain = 0.0;
      for (Index t : comps_) {
        const Index d = prefix_depth(t);
        if (d >= in_.budget) continue;
        const auto& lvl = lvl_[static_cast<std::size_t>(t)];
        const double gain = in_.lambda(t) * (lvl[static_cast<std::size_t>(d) + 1] -
                                             lvl[static_cast<std::size_t>(d)]);
        if (gain > best_gain) {
          best_gain = gain;
          best_t = t;
        }
      }
      if (best_t < 0) break;
      const Index victim =
          order_[static_cast<std::size_t>(best_t)]
                [static_cast<std::size_t>(prefix_depth(best_t))];
      set_bit(victim);
      touched.push_back(victim);
    }
    offer_mask();
    for (Index s : touched) clear_bit(s);
  }

  const Inputs& in_;
  Index words_;
  std::vector<std::vector<Index>> order_;
  std::vector<std::vector<double>> lvl_;
  std::vector<Index> comps_;
  std::vector<std::uint64_t> mask_;
  Index used_ = 0;
  std::vector<NodeRec> nodes_;
  double inc_obj_ = 0.0;
  Vector inc_v_;
};

}  // namespace

PePoint solve_mip(const ScenarioSet& set, double p, const Vector& lambda, const Vector& ell_p,
                  BnbStats* stats) {
  const Inputs in = check_inputs(set, p, lambda, ell_p);
  DepthSearch search(in);
  return search.run(stats);
}

PePoint solve_exhaustive(const ScenarioSet& set, double p, const Vector& lambda,
                         const Vector& ell_p) {
  const Inputs in = check_inputs(set, p, lambda, ell_p);
  if (in.n > 20) throw DomainError("exhaustive enumeration guarded to 20 samples");

  std::vector<Index> comb(static_cast<std::size_t>(in.q));
  std::iota(comb.begin(), comb.end(), Index{0});
  Vector best_v;
  double best_obj = -std::numeric_limits<double>::infinity();
  while (true) {
    const Vector v = point_of(in, comb);
    const double obj = in.lambda.dot(v);
    if (obj > best_obj) {  // strict: the lexicographically first tie wins
      best_obj = obj;
      best_v = v;
    }
    // next combination in lexicographic order
    Index i = in.q - 1;
    while (i >= 0 && comb[static_cast<std::size_t>(i)] == in.n - in.q + i) --i;
    if (i < 0) break;
    ++comb[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < in.q; ++j)
      comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
  }
  return canonicalize(in, best_v);
}

}  // namespace ccdispatch
