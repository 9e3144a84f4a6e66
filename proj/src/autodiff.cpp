#include "dimp/autodiff.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

namespace dimp::ad {

namespace {

Value make(Mat v, std::vector<Value> parents, std::function<void(Node&)> pullback) {
    auto n = std::make_shared<Node>();
    n->val = std::move(v);
    bool any = false;
    for (const auto& p : parents) any = any || p->needs_grad;
    n->needs_grad = any;
    if (any) {
        n->parents = std::move(parents);
        n->pullback = std::move(pullback);
    }
    return n;
}

} // namespace

Value leaf(Mat v, bool needs_grad) {
    auto n = std::make_shared<Node>();
    n->val = std::move(v);
    n->needs_grad = needs_grad;
    return n;
}

Value constant(Mat v) { return leaf(std::move(v), false); }

Value stop_gradient(const Value& a) { return constant(a->val); }

Value add(const Value& a, const Value& b) {
    check_arg(a->val.rows() == b->val.rows() && a->val.cols() == b->val.cols(),
              "ad::add: shape mismatch");
    return make(a->val + b->val, {a, b}, [](Node& n) {
        n.parents[0]->accumulate(n.grad);
        n.parents[1]->accumulate(n.grad);
    });
}

Value sub(const Value& a, const Value& b) {
    check_arg(a->val.rows() == b->val.rows() && a->val.cols() == b->val.cols(),
              "ad::sub: shape mismatch");
    return make(a->val - b->val, {a, b}, [](Node& n) {
        n.parents[0]->accumulate(n.grad);
        n.parents[1]->accumulate(-n.grad);
    });
}

Value mul(const Value& a, const Value& b) {
    check_arg(a->val.rows() == b->val.rows() && a->val.cols() == b->val.cols(),
              "ad::mul: shape mismatch");
    return make(a->val.cwiseProduct(b->val), {a, b}, [](Node& n) {
        n.parents[0]->accumulate(n.grad.cwiseProduct(n.parents[1]->val));
        n.parents[1]->accumulate(n.grad.cwiseProduct(n.parents[0]->val));
    });
}

Value scale(const Value& a, double s) {
    return make(a->val * s, {a}, [s](Node& n) { n.parents[0]->accumulate(n.grad * s); });
}

Value add_scalar(const Value& a, double s) {
    return make((a->val.array() + s).matrix(), {a},
                [](Node& n) { n.parents[0]->accumulate(n.grad); });
}

Value matmul(const Value& a, const Value& b) {
    check_arg(a->val.cols() == b->val.rows(), "ad::matmul: inner dim mismatch");
    return make(a->val * b->val, {a, b}, [](Node& n) {
        n.parents[0]->accumulate(n.grad * n.parents[1]->val.transpose());
        n.parents[1]->accumulate(n.parents[0]->val.transpose() * n.grad);
    });
}

Value transpose(const Value& a) {
    return make(a->val.transpose(), {a},
                [](Node& n) { n.parents[0]->accumulate(n.grad.transpose()); });
}

Value add_rowvec(const Value& a, const Value& row) {
    check_arg(row->val.rows() == 1 && row->val.cols() == a->val.cols(),
              "ad::add_rowvec: row must be 1 x cols(a)");
    Mat v = a->val;
    v.rowwise() += Eigen::RowVectorXd(row->val.row(0));
    return make(std::move(v), {a, row}, [](Node& n) {
        n.parents[0]->accumulate(n.grad);
        n.parents[1]->accumulate(n.grad.colwise().sum());
    });
}

Value broadcast_row(const Value& row, Eigen::Index rows) {
    check_arg(row->val.rows() == 1, "ad::broadcast_row: input must be a row");
    Mat v = row->val.replicate(rows, 1);
    return make(std::move(v), {row},
                [](Node& n) { n.parents[0]->accumulate(n.grad.colwise().sum()); });
}

Value mul_rowvec(const Value& a, const Value& row) {
    check_arg(row->val.rows() == 1 && row->val.cols() == a->val.cols(),
              "ad::mul_rowvec: row must be 1 x cols(a)");
    Mat v = (a->val.array().rowwise() * row->val.row(0).array()).matrix();
    return make(std::move(v), {a, row}, [](Node& n) {
        n.parents[0]->accumulate(
            (n.grad.array().rowwise() * n.parents[1]->val.row(0).array()).matrix());
        n.parents[1]->accumulate((n.grad.array() * n.parents[0]->val.array())
                                     .colwise().sum().matrix());
    });
}

Value concat_cols(const Value& a, const Value& b) {
    check_arg(a->val.rows() == b->val.rows(), "ad::concat_cols: row mismatch");
    Mat v(a->val.rows(), a->val.cols() + b->val.cols());
    v << a->val, b->val;
    const Eigen::Index ca = a->val.cols();
    return make(std::move(v), {a, b}, [ca](Node& n) {
        n.parents[0]->accumulate(n.grad.leftCols(ca));
        n.parents[1]->accumulate(n.grad.rightCols(n.grad.cols() - ca));
    });
}

Value concat_rows(const std::vector<Value>& parts) {
    check_arg(!parts.empty(), "ad::concat_rows: empty list");
    Eigen::Index rows = 0;
    const Eigen::Index cols = parts[0]->val.cols();
    for (const auto& p : parts) {
        check_arg(p->val.cols() == cols, "ad::concat_rows: col mismatch");
        rows += p->val.rows();
    }
    Mat v(rows, cols);
    Eigen::Index r = 0;
    for (const auto& p : parts) {
        v.middleRows(r, p->val.rows()) = p->val;
        r += p->val.rows();
    }
    return make(std::move(v), parts, [](Node& n) {
        Eigen::Index r = 0;
        for (auto& p : n.parents) {
            p->accumulate(n.grad.middleRows(r, p->val.rows()));
            r += p->val.rows();
        }
    });
}

Value slice_rows(const Value& a, Eigen::Index r0, Eigen::Index n_rows) {
    check_arg(r0 >= 0 && r0 + n_rows <= a->val.rows(), "ad::slice_rows: out of range");
    return make(a->val.middleRows(r0, n_rows), {a}, [r0, n_rows](Node& n) {
        Mat g = Mat::Zero(n.parents[0]->val.rows(), n.parents[0]->val.cols());
        g.middleRows(r0, n_rows) = n.grad;
        n.parents[0]->accumulate(g);
    });
}

Value slice_cols(const Value& a, Eigen::Index c0, Eigen::Index n_cols) {
    check_arg(c0 >= 0 && c0 + n_cols <= a->val.cols(), "ad::slice_cols: out of range");
    return make(a->val.middleCols(c0, n_cols), {a}, [c0, n_cols](Node& n) {
        Mat g = Mat::Zero(n.parents[0]->val.rows(), n.parents[0]->val.cols());
        g.middleCols(c0, n_cols) = n.grad;
        n.parents[0]->accumulate(g);
    });
}

Value gelu(const Value& a) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * M_PI);
    Mat v = a->val.unaryExpr(
        [&](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); });
    return make(std::move(v), {a}, [inv_sqrt2, inv_sqrt2pi](Node& n) {
        const Mat& x = n.parents[0]->val;
        Mat d = x.unaryExpr([&](double t) {
            return 0.5 * (1.0 + std::erf(t * inv_sqrt2)) +
                   t * inv_sqrt2pi * std::exp(-0.5 * t * t);
        });
        n.parents[0]->accumulate(n.grad.cwiseProduct(d));
    });
}

Value sigmoid(const Value& a) {
    Mat v = a->val.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    return make(std::move(v), {a}, [](Node& n) {
        const Mat& y = n.val;
        n.parents[0]->accumulate(
            n.grad.cwiseProduct(y.cwiseProduct(Mat::Ones(y.rows(), y.cols()) - y)));
    });
}

Value softmax_rows(const Value& a) {
    Mat v = a->val;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double m = v.row(i).maxCoeff();
        v.row(i) = (v.row(i).array() - m).exp();
        v.row(i) /= v.row(i).sum();
    }
    return make(std::move(v), {a}, [](Node& n) {
        const Mat& y = n.val;
        Mat g(y.rows(), y.cols());
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            const double dot = n.grad.row(i).dot(y.row(i));
            g.row(i) = (y.row(i).array() * (n.grad.row(i).array() - dot)).matrix();
        }
        n.parents[0]->accumulate(g);
    });
}

Value layernorm_rows(const Value& a, const Value& gain, const Value& offset, double eps) {
    const Eigen::Index c = a->val.cols();
    check_arg(gain->val.rows() == 1 && gain->val.cols() == c, "ad::layernorm: gain shape");
    check_arg(offset->val.rows() == 1 && offset->val.cols() == c, "ad::layernorm: offset shape");

    // Cache normalized rows and inverse stddevs for the pullback.
    auto xhat = std::make_shared<Mat>(a->val.rows(), c);
    auto inv_std = std::make_shared<Eigen::VectorXd>(a->val.rows());
    Mat v(a->val.rows(), c);
    for (Eigen::Index i = 0; i < a->val.rows(); ++i) {
        const double mu = a->val.row(i).mean();
        Eigen::RowVectorXd cen = a->val.row(i).array() - mu;
        const double var = cen.squaredNorm() / static_cast<double>(c);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)(i) = is;
        xhat->row(i) = cen * is;
        v.row(i) = ((xhat->row(i).array() * gain->val.row(0).array()) +
                    offset->val.row(0).array()).matrix();
    }
    return make(std::move(v), {a, gain, offset}, [xhat, inv_std, c](Node& n) {
        const Mat& g = n.grad;
        n.parents[2]->accumulate(g.colwise().sum());
        n.parents[1]->accumulate((g.array() * xhat->array()).colwise().sum().matrix());
        Mat dx(g.rows(), c);
        const auto& gain_row = n.parents[1]->val.row(0);
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            Eigen::RowVectorXd dxhat = g.row(i).cwiseProduct(gain_row);
            const double m1 = dxhat.mean();
            const double m2 = dxhat.cwiseProduct(xhat->row(i)).mean();
            dx.row(i) = (*inv_std)(i) *
                        (dxhat.array() - m1 - xhat->row(i).array() * m2).matrix();
        }
        n.parents[0]->accumulate(dx);
    });
}

Value sum_all(const Value& a) {
    Mat v(1, 1);
    v(0, 0) = a->val.sum();
    return make(std::move(v), {a}, [](Node& n) {
        n.parents[0]->accumulate(
            Mat::Constant(n.parents[0]->val.rows(), n.parents[0]->val.cols(), n.grad(0, 0)));
    });
}

Value sum_sq(const Value& a) {
    Mat v(1, 1);
    v(0, 0) = a->val.squaredNorm();
    return make(std::move(v), {a}, [](Node& n) {
        n.parents[0]->accumulate(2.0 * n.grad(0, 0) * n.parents[0]->val);
    });
}

Value mean_rows(const Value& a) {
    Mat v = a->val.colwise().mean();
    const double inv_r = 1.0 / static_cast<double>(a->val.rows());
    return make(std::move(v), {a}, [inv_r](Node& n) {
        n.parents[0]->accumulate(
            (n.grad * inv_r).replicate(n.parents[0]->val.rows(), 1));
    });
}

Value fold_rows(const Value& a, Eigen::Index group) {
    const Eigen::Index r = a->val.rows(), c = a->val.cols();
    check_arg(group >= 1 && r % group == 0, "ad::fold_rows: rows not divisible by group");
    Mat v(r / group, group * c);
    for (Eigen::Index i = 0; i < r / group; ++i)
        for (Eigen::Index j = 0; j < group; ++j)
            v.block(i, j * c, 1, c) = a->val.row(i * group + j);
    return make(std::move(v), {a}, [group, c](Node& n) {
        Mat g(n.parents[0]->val.rows(), c);
        for (Eigen::Index i = 0; i < n.grad.rows(); ++i)
            for (Eigen::Index j = 0; j < group; ++j)
                g.row(i * group + j) = n.grad.block(i, j * c, 1, c);
        n.parents[0]->accumulate(g);
    });
}

Value segment_max_rows(const Value& a, Eigen::Index group) {
    const Eigen::Index r = a->val.rows(), c = a->val.cols();
    check_arg(group >= 1 && r % group == 0, "ad::segment_max_rows: rows not divisible");
    const Eigen::Index out_r = r / group;
    auto argmax = std::make_shared<Eigen::MatrixXi>(out_r, c);
    Mat v(out_r, c);
    for (Eigen::Index i = 0; i < out_r; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            double best = a->val(i * group, j);
            int best_k = 0;
            for (Eigen::Index k = 1; k < group; ++k) {
                const double x = a->val(i * group + k, j);
                if (x > best) {
                    best = x;
                    best_k = static_cast<int>(k);
                }
            }
            v(i, j) = best;
            (*argmax)(i, j) = best_k;
        }
    }
    return make(std::move(v), {a}, [argmax, group](Node& n) {
        Mat g = Mat::Zero(n.parents[0]->val.rows(), n.parents[0]->val.cols());
        for (Eigen::Index i = 0; i < n.grad.rows(); ++i)
            for (Eigen::Index j = 0; j < n.grad.cols(); ++j)
                g(i * group + (*argmax)(i, j), j) += n.grad(i, j);
        n.parents[0]->accumulate(g);
    });
}

Value chamfer_tube_loss(const Value& pred, const Mat& target, int tubes,
                        int frames, int n_pts) {
    const Eigen::Index rows = static_cast<Eigen::Index>(tubes) * frames * n_pts;
    check_arg(pred->val.rows() == rows && pred->val.cols() == 3,
              "chamfer_tube_loss: pred shape mismatch");
    check_arg(target.rows() == rows && target.cols() == 3,
              "chamfer_tube_loss: target shape mismatch");
    check_arg(tubes >= 1 && frames >= 1 && n_pts >= 1, "chamfer_tube_loss: empty sets");

    // Forward pass caches nearest-neighbor assignments for the pullback.
    auto nn_ab = std::make_shared<Eigen::MatrixXi>(tubes * frames, n_pts); // pred -> target
    auto nn_ba = std::make_shared<Eigen::MatrixXi>(tubes * frames, n_pts); // target -> pred
    double total = 0.0;
    for (int s = 0; s < tubes * frames; ++s) {
        const Eigen::Index off = static_cast<Eigen::Index>(s) * n_pts;
        double d_ab = 0.0, d_ba = 0.0;
        for (int i = 0; i < n_pts; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_j = 0;
            for (int j = 0; j < n_pts; ++j) {
                const double d2 = (pred->val.row(off + i) - target.row(off + j)).squaredNorm();
                if (d2 < best) { best = d2; best_j = j; }
            }
            (*nn_ab)(s, i) = best_j;
            d_ab += best;
        }
        for (int j = 0; j < n_pts; ++j) {
            double best = std::numeric_limits<double>::infinity();
            int best_i = 0;
            for (int i = 0; i < n_pts; ++i) {
                const double d2 = (pred->val.row(off + i) - target.row(off + j)).squaredNorm();
                if (d2 < best) { best = d2; best_i = i; }
            }
            (*nn_ba)(s, j) = best_i;
            d_ba += best;
        }
        total += (d_ab + d_ba) / n_pts;
    }
    Mat v(1, 1);
    v(0, 0) = total / (static_cast<double>(tubes) * frames);

    Mat tgt = target; // owned copy for the pullback
    return make(std::move(v), {pred},
                [nn_ab, nn_ba, tgt, tubes, frames, n_pts](Node& n) {
        const double w = n.grad(0, 0) /
                         (static_cast<double>(tubes) * frames * n_pts);
        Mat g = Mat::Zero(n.parents[0]->val.rows(), 3);
        const Mat& p = n.parents[0]->val;
        for (int s = 0; s < tubes * frames; ++s) {
            const Eigen::Index off = static_cast<Eigen::Index>(s) * n_pts;
            for (int i = 0; i < n_pts; ++i) {
                const int j = (*nn_ab)(s, i);
                g.row(off + i) += 2.0 * w * (p.row(off + i) - tgt.row(off + j));
            }
            for (int j = 0; j < n_pts; ++j) {
                const int i = (*nn_ba)(s, j);
                g.row(off + i) += 2.0 * w * (p.row(off + i) - tgt.row(off + j));
            }
        }
        n.parents[0]->accumulate(g);
    });
}

void backward(const Value& loss) {
    check_arg(loss->val.rows() == 1 && loss->val.cols() == 1,
              "ad::backward: loss must be 1x1");
    if (!loss->needs_grad) return;

    // Iterative post-order DFS for topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->needs_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss->grad = Mat::Ones(1, 1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->pullback && n->grad.size() != 0) n->pullback(*n);
    }
}

} // namespace dimp::ad
