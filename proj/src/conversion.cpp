#include "hybridfm/conversion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace hfm {

namespace {

constexpr Index kScanLimit = 20000;

// Candidate update shared by both search strategies: strictly closer wins,
// equal distance falls back to the smaller index.
inline void consider(double d2, Index idx, double& best_d2, Index& best_idx) {
  if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
    best_d2 = d2;
    best_idx = idx;
  }
}

// Static KD-tree over the reference rows. Split planes use the dimension
// of largest extent; queries prune on squared plane distance, descending
// on equality so that tie candidates are never lost.
class KdTree {
 public:
  explicit KdTree(const Mat& points) : points_(points) {
    order_.resize(points_.rows());
    std::iota(order_.begin(), order_.end(), Index(0));
    nodes_.reserve(2 * order_.size());
    root_ = build(0, static_cast<Index>(order_.size()));
  }

  void nearest(const Eigen::RowVectorXd& query, double& best_d2,
               Index& best_idx) const {
    search(root_, query, best_d2, best_idx);
  }

 private:
  struct Node {
    Index dim = -1;
    double value = 0.0;
    Index point = -1;
    Index left = -1, right = -1;
  };

  Index build(Index lo, Index hi) {
    if (lo >= hi) return -1;
    Index node_id = static_cast<Index>(nodes_.size());
    nodes_.push_back({});
    if (hi - lo == 1) {
      nodes_[node_id].point = order_[lo];
      return node_id;
    }

    Index dim = 0;
    double widest = -1.0;
    for (Index d = 0; d < points_.cols(); ++d) {
      double lo_val = points_(order_[lo], d), hi_val = lo_val;
      for (Index i = lo + 1; i < hi; ++i) {
        lo_val = std::min(lo_val, points_(order_[i], d));
        hi_val = std::max(hi_val, points_(order_[i], d));
      }
      if (hi_val - lo_val > widest) {
        widest = hi_val - lo_val;
        dim = d;
      }
    }

    Index mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid,
                     order_.begin() + hi, [&](Index a, Index b) {
                       double va = points_(a, dim), vb = points_(b, dim);
                       return va < vb || (va == vb && a < b);
                     });
    Index pivot = order_[mid];
    nodes_[node_id].dim = dim;
    nodes_[node_id].value = points_(pivot, dim);
    nodes_[node_id].point = pivot;
    Index left = build(lo, mid);
    Index right = build(mid + 1, hi);
    nodes_[node_id].left = left;
    nodes_[node_id].right = right;
    return node_id;
  }

  void search(Index node_id, const Eigen::RowVectorXd& query, double& best_d2,
              Index& best_idx) const {
    if (node_id < 0) return;
    const Node& node = nodes_[node_id];
    consider((points_.row(node.point) - query).squaredNorm(), node.point,
             best_d2, best_idx);
    if (node.dim < 0) return;

    double gap = query[node.dim] - node.value;
    Index near = gap < 0.0 ? node.left : node.right;
    Index far = gap < 0.0 ? node.right : node.left;
    search(near, query, best_d2, best_idx);
    if (gap * gap <= best_d2) search(far, query, best_d2, best_idx);
  }

  const Mat& points_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
  Index root_ = -1;
};

void check_embeddings(const SpectralEmbedding& emb1,
                      const SpectralEmbedding& emb2) {
  if (emb1.size() == 0 || emb2.size() == 0)
    throw EmptyEmbedding("embeddings must have at least one row");
  require(emb1.width() == emb2.width(), "embedding widths must match");
}

}  // namespace

std::pair<SpectralEmbedding, SpectralEmbedding> embed_for_matching(
    const FunctionalMap& map, const SpectralBasis& basis1,
    const SpectralBasis& basis2, const WeightedSpace& space1,
    const WeightedSpace& space2) {
  Index k1 = basis1.size(), k2 = basis2.size();
  require(map.matrix.cols() == k1 && map.matrix.rows() == k2,
          "map dimensions must match the bases");
  require(space1.size() == k1 && space2.size() == k2,
          "weighted spaces must match the bases");

  Mat right = map.matrix.transpose() * space2.sqrt_mass;  // k1 x k2
  Mat mass_inv = space1.inv_sqrt_mass * space1.inv_sqrt_mass;

  SpectralEmbedding emb1, emb2;
  emb1.coords = basis1.functions * (mass_inv * right);
  emb2.coords = basis2.functions * space2.inv_sqrt_mass;
  if (!emb1.coords.allFinite() || !emb2.coords.allFinite())
    throw NumericalError("embedding produced non-finite coordinates");
  return {std::move(emb1), std::move(emb2)};
}

Correspondence extract_p2p_scan(const SpectralEmbedding& emb1,
                                const SpectralEmbedding& emb2) {
  check_embeddings(emb1, emb2);
  Correspondence out;
  out.targets.resize(emb2.size());
  for (Index v = 0; v < emb2.size(); ++v) {
    Eigen::RowVectorXd query = emb2.coords.row(v);
    double best_d2 = std::numeric_limits<double>::infinity();
    Index best_idx = -1;
    for (Index i = 0; i < emb1.size(); ++i)
      consider((emb1.coords.row(i) - query).squaredNorm(), i, best_d2,
               best_idx);
    out.targets[v] = best_idx;
  }
  return out;
}

Correspondence extract_p2p_tree(const SpectralEmbedding& emb1,
                                const SpectralEmbedding& emb2) {
  check_embeddings(emb1, emb2);
  KdTree tree(emb1.coords);
  Correspondence out;
  out.targets.resize(emb2.size());
  for (Index v = 0; v < emb2.size(); ++v) {
    Eigen::RowVectorXd query = emb2.coords.row(v);
    double best_d2 = std::numeric_limits<double>::infinity();
    Index best_idx = -1;
    tree.nearest(query, best_d2, best_idx);
    out.targets[v] = best_idx;
  }
  return out;
}

Correspondence extract_p2p(const SpectralEmbedding& emb1,
                           const SpectralEmbedding& emb2) {
  check_embeddings(emb1, emb2);
  if (emb1.size() < kScanLimit) return extract_p2p_scan(emb1, emb2);
  return extract_p2p_tree(emb1, emb2);
}

Correspondence extract_p2p_hybrid(const HybridMap& map,
                                  const HybridBasis& hybrid1,
                                  const HybridBasis& hybrid2) {
  auto [lb1, lb2] = embed_for_matching(
      map.lb_block, hybrid1.lb, hybrid2.lb, weighted_space(hybrid1.lb),
      weighted_space(hybrid2.lb));

  bool has_elastic = map.elastic_block.matrix.size() > 0;
  if (!has_elastic) return extract_p2p(lb1, lb2);

  auto [el1, el2] = embed_for_matching(
      map.elastic_block, hybrid1.elastic, hybrid2.elastic,
      weighted_space(hybrid1.elastic), weighted_space(hybrid2.elastic));

  SpectralEmbedding joint1, joint2;
  joint1.coords.resize(lb1.size(), lb1.width() + el1.width());
  joint1.coords << lb1.coords, el1.coords;
  joint2.coords.resize(lb2.size(), lb2.width() + el2.width());
  joint2.coords << lb2.coords, el2.coords;
  return extract_p2p(joint1, joint2);
}

FunctionalMap encode_gt(const Correspondence& pi, const SpectralBasis& basis1,
                        const SpectralBasis& basis2, const Mesh& mesh2) {
  require(basis2.num_vertices() == mesh2.num_vertices(),
          "target basis must live on the target mesh");
  validate_correspondence(pi, basis1.num_vertices(), mesh2.num_vertices());

  Mat gathered(mesh2.num_vertices(), basis1.size());
  for (Index v = 0; v < mesh2.num_vertices(); ++v)
    gathered.row(v) = basis1.functions.row(pi.targets[v]);

  FunctionalMap map;
  map.matrix = projector(basis2, mesh2).apply(gathered);
  map.domain_kind = basis1.kind;
  map.range_kind = basis2.kind;
  return map;
}

namespace {

void check_schedule(const std::vector<std::pair<Index, Index>>& schedule,
                    Index start1, Index start2, Index max1, Index max2) {
  if (schedule.empty()) throw ScheduleError("schedule is empty");
  Index k1 = start1, k2 = start2;
  for (const auto& [t1, t2] : schedule) {
    if (t1 < k1 || t2 < k2)
      throw ScheduleError("schedule must be nondecreasing from " +
                          std::to_string(k1) + "+" + std::to_string(k2));
    k1 = t1;
    k2 = t2;
  }
  require(k1 <= max1 && k2 <= max2,
          "schedule exceeds the precomputed basis sizes");
}

}  // namespace

FunctionalMap zoomout(const FunctionalMap& c0, const SpectralBasis& basis1,
                      const SpectralBasis& basis2, const Mesh& mesh2,
                      const std::vector<std::pair<Index, Index>>& schedule,
                      Correspondence* last_pi) {
  check_schedule(schedule, c0.matrix.cols(), c0.matrix.rows(), basis1.size(),
                 basis2.size());

  FunctionalMap current = c0;
  for (const auto& [t1, t2] : schedule) {
    SpectralBasis b1 = basis1.truncated(current.matrix.cols());
    SpectralBasis b2 = basis2.truncated(current.matrix.rows());
    auto [emb1, emb2] = embed_for_matching(current, b1, b2,
                                           weighted_space(b1),
                                           weighted_space(b2));
    Correspondence pi = extract_p2p(emb1, emb2);
    current = encode_gt(pi, basis1.truncated(t1), basis2.truncated(t2),
                        mesh2);
    if (last_pi) *last_pi = std::move(pi);
  }
  return current;
}

HybridMap zoomout_hybrid(const HybridMap& h0, const HybridBasis& hybrid1,
                         const HybridBasis& hybrid2, const Mesh& mesh2,
                         const std::vector<std::pair<Index, Index>>& schedule,
                         Correspondence* last_pi) {
  require(h0.lb_block.matrix.rows() == h0.lb_block.matrix.cols() &&
              h0.elastic_block.matrix.rows() == h0.elastic_block.matrix.cols(),
          "hybrid upsampling expects square blocks");
  Index lb_size = std::min(hybrid1.lb.size(), hybrid2.lb.size());
  Index el_size = std::min(hybrid1.elastic.size(), hybrid2.elastic.size());
  check_schedule(schedule, h0.lb_block.matrix.cols(),
                 h0.elastic_block.matrix.cols(), lb_size, el_size);

  HybridMap current = h0;
  for (const auto& [t_lb, t_el] : schedule) {
    Index cur_lb = current.lb_block.matrix.cols();
    Index cur_el = current.elastic_block.matrix.cols();
    HybridBasis at1 = hybrid1.truncated(cur_lb, cur_el);
    HybridBasis at2 = hybrid2.truncated(cur_lb, cur_el);
    Correspondence pi = extract_p2p_hybrid(current, at1, at2);

    current.lb_block = encode_gt(pi, hybrid1.lb.truncated(t_lb),
                                 hybrid2.lb.truncated(t_lb), mesh2);
    if (t_el > 0) {
      current.elastic_block =
          encode_gt(pi, hybrid1.elastic.truncated(t_el),
                    hybrid2.elastic.truncated(t_el), mesh2);
    } else {
      current.elastic_block.matrix.resize(0, 0);
    }
    if (last_pi) *last_pi = std::move(pi);
  }
  return current;
}

}  // namespace hfm
