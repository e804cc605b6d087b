// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small exact 3-d k-d tree for nearest-neighbor queries over point clouds.

#ifndef LPCM_DETAIL_KDTREE_HPP_
#define LPCM_DETAIL_KDTREE_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "lpcm/geometry.hpp"

namespace lpcm::detail {

class KdTree {
 public:
  explicit KdTree(const PointCloud& points) : points_(points) {
    order_.resize(points.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(points.size());
    if (!points.empty()) root_ = build(0, points.size());
  }

  // Index of the nearest point to q (any one of them on ties).
  std::size_t nearest(const CartesianPoint& q) const {
    std::size_t best = order_[0];
    double best_d2 = std::numeric_limits<double>::infinity();
    search(root_, q, best, best_d2);
    return best;
  }

  double nearest_squared_distance(const CartesianPoint& q) const {
    return squared_distance(points_[nearest(q)], q);
  }

  // Indices of the k nearest points to q, closest first. When the cloud has
  // fewer than k points, returns all of them.
  std::vector<std::size_t> nearest_k(const CartesianPoint& q, std::size_t k) const {
    std::vector<std::pair<double, std::size_t>> heap;  // max-heap on distance
    heap.reserve(k + 1);
    search_k(root_, q, k, heap);
    std::sort_heap(heap.begin(), heap.end());
    std::vector<std::size_t> out;
    out.reserve(heap.size());
    for (const auto& [d2, idx] : heap) out.push_back(idx);
    return out;
  }

  static double squared_distance(const CartesianPoint& a, const CartesianPoint& b) {
    double dx = a.x - b.x;
    double dy = a.y - b.y;
    double dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
  }

 private:
  struct Node {
    double split = 0.0;
    std::int32_t axis = -1;  // -1 marks a leaf
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t left = kNone;
    std::size_t right = kNone;
  };
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static constexpr std::size_t kLeafSize = 8;

  static double coord(const CartesianPoint& p, int axis) {
    return axis == 0 ? p.x : axis == 1 ? p.y : p.z;
  }

  std::size_t build(std::size_t begin, std::size_t end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin > kLeafSize) {
      CartesianPoint lo{std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity()};
      CartesianPoint hi{-std::numeric_limits<double>::infinity(),
                        -std::numeric_limits<double>::infinity(),
                        -std::numeric_limits<double>::infinity()};
      for (std::size_t i = begin; i < end; ++i) {
        const CartesianPoint& p = points_[order_[i]];
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
        hi.z = std::max(hi.z, p.z);
      }
      double spread_x = hi.x - lo.x;
      double spread_y = hi.y - lo.y;
      double spread_z = hi.z - lo.z;
      int axis = 0;
      double spread = spread_x;
      if (spread_y > spread) {
        axis = 1;
        spread = spread_y;
      }
      if (spread_z > spread) axis = 2;
      if (spread > 0.0) {
        std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t a, std::size_t b) {
                           return coord(points_[a], axis) < coord(points_[b], axis);
                         });
        node.axis = axis;
        node.split = coord(points_[order_[mid]], axis);
        std::size_t self = nodes_.size();
        nodes_.push_back(node);
        std::size_t left = build(begin, mid);
        std::size_t right = build(mid, end);
        nodes_[self].left = left;
        nodes_[self].right = right;
        return self;
      }
    }
    nodes_.push_back(node);  // leaf: duplicate or few points
    return nodes_.size() - 1;
  }

  void search(std::size_t node_idx, const CartesianPoint& q, std::size_t& best,
              double& best_d2) const {
    const Node& node = nodes_[node_idx];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        double d2 = squared_distance(points_[order_[i]], q);
        if (d2 < best_d2) {
          best_d2 = d2;
          best = order_[i];
        }
      }
      return;
    }
    double diff = coord(q, node.axis) - node.split;
    std::size_t near = diff < 0.0 ? node.left : node.right;
    std::size_t far = diff < 0.0 ? node.right : node.left;
    search(near, q, best, best_d2);
    if (diff * diff < best_d2) search(far, q, best, best_d2);
  }

  void search_k(std::size_t node_idx, const CartesianPoint& q, std::size_t k,
                std::vector<std::pair<double, std::size_t>>& heap) const {
    const Node& node = nodes_[node_idx];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        double d2 = squared_distance(points_[order_[i]], q);
        if (heap.size() < k) {
          heap.emplace_back(d2, order_[i]);
          std::push_heap(heap.begin(), heap.end());
        } else if (d2 < heap.front().first) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = {d2, order_[i]};
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    double diff = coord(q, node.axis) - node.split;
    std::size_t near = diff < 0.0 ? node.left : node.right;
    std::size_t far = diff < 0.0 ? node.right : node.left;
    search_k(near, q, k, heap);
    if (heap.size() < k || diff * diff < heap.front().first) {
      search_k(far, q, k, heap);
    }
  }

  const PointCloud& points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::size_t root_ = 0;
};

}  // namespace lpcm::detail

#endif  // LPCM_DETAIL_KDTREE_HPP_
