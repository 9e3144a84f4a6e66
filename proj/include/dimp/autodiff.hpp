#ifndef DIMP_AUTODIFF_HPP
#define DIMP_AUTODIFF_HPP

#include <functional>
#include <memory>
#include <vector>

#include "dimp/common.hpp"

namespace dimp::ad {

// Reverse-mode autodiff over dense Eigen matrices. Each forward pass builds a
// fresh DAG of shared_ptr nodes; backward() runs the stored pullbacks in
// reverse topological order. Graphs are cheap (hundreds of nodes per sample)
// and are discarded after each step.
struct Node {
    Mat val;
    Mat grad; // allocated on first accumulation
    bool needs_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> pullback; // scatters this->grad into parents

    void accumulate(const Mat& g) {
        if (!needs_grad) return;
        if (grad.size() == 0) grad = g;
        else grad += g;
    }
    const Mat& grad_or_zero() {
        if (grad.size() == 0) grad = Mat::Zero(val.rows(), val.cols());
        return grad;
    }
};

using Value = std::shared_ptr<Node>;

Value leaf(Mat v, bool needs_grad = true);
Value constant(Mat v);

// Identity forward, zero derivative backward: the result is detached from
// the graph entirely.
Value stop_gradient(const Value& a);

Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b); // elementwise
Value scale(const Value& a, double s);
Value add_scalar(const Value& a, double s);
Value matmul(const Value& a, const Value& b);
Value transpose(const Value& a);

// Broadcast a 1 x C row across R rows of a.
Value add_rowvec(const Value& a, const Value& row);
Value broadcast_row(const Value& row, Eigen::Index rows);
Value mul_rowvec(const Value& a, const Value& row); // a (R x C) .* row broadcast

Value concat_cols(const Value& a, const Value& b);
Value concat_rows(const std::vector<Value>& parts);
Value slice_rows(const Value& a, Eigen::Index r0, Eigen::Index n);
Value slice_cols(const Value& a, Eigen::Index c0, Eigen::Index n);

Value gelu(const Value& a); // exact erf form
Value sigmoid(const Value& a);
Value softmax_rows(const Value& a);
Value layernorm_rows(const Value& a, const Value& gain, const Value& offset,
                     double eps = 1e-5);

Value sum_all(const Value& a);    // 1 x 1
Value sum_sq(const Value& a);     // 1 x 1, sum of squared entries
Value mean_rows(const Value& a);  // 1 x C, mean over rows

// Group each run of `group` consecutive rows into a single row:
// (R x C) -> (R/group x group*C), row-major within the group.
Value fold_rows(const Value& a, Eigen::Index group);

// Columnwise max over each run of `group` consecutive rows:
// (R x C) -> (R/group x C). Ties route gradient to the first maximizer.
Value segment_max_rows(const Value& a, Eigen::Index group);

// Per-frame symmetric Chamfer loss between predicted and target tube points.
// pred and target are (K * frames * n_pts) x 3 stacks; the result is the mean
// over tubes of the mean over frames of chamfer(pred set, target set).
Value chamfer_tube_loss(const Value& pred, const Mat& target, int tubes,
                        int frames, int n_pts);

// Run all pullbacks from a 1x1 loss node.
void backward(const Value& loss);

} // namespace dimp::ad

#endif
