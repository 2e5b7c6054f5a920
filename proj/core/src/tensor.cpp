#include "atrfas/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "atrfas/errors.hpp"

namespace atrfas::nd {

Shape::Shape(std::initializer_list<int64_t> dims) {
    if (dims.size() > kMaxAxes) throw ShapeError("Shape: more than 5 axes");
    for (int64_t d : dims) {
        if (d < 0) throw ShapeError("Shape: negative extent");
        d_[ndim_++] = d;
    }
}

Shape::Shape(std::span<const int64_t> dims) {
    if (dims.size() > kMaxAxes) throw ShapeError("Shape: more than 5 axes");
    for (int64_t d : dims) {
        if (d < 0) throw ShapeError("Shape: negative extent");
        d_[ndim_++] = d;
    }
}

int64_t Shape::operator[](int axis) const {
    if (axis < 0 || axis >= ndim_) throw ShapeError("Shape: axis " + std::to_string(axis) + " out of range for " + str());
    return d_[axis];
}

int64_t Shape::numel() const {
    int64_t n = 1;
    for (int i = 0; i < ndim_; ++i) n *= d_[i];
    return n;
}

std::array<int64_t, Shape::kMaxAxes> Shape::strides() const {
    std::array<int64_t, kMaxAxes> s{};
    int64_t acc = 1;
    for (int i = ndim_ - 1; i >= 0; --i) {
        s[i] = acc;
        acc *= d_[i];
    }
    return s;
}

Shape Shape::drop_axis(int axis) const {
    if (axis < 0 || axis >= ndim_) throw ShapeError("Shape::drop_axis: bad axis");
    Shape out;
    for (int i = 0; i < ndim_; ++i)
        if (i != axis) out.d_[out.ndim_++] = d_[i];
    return out;
}

std::string Shape::str() const {
    if (ndim_ == 0) return "()";
    std::string s = "(";
    for (int i = 0; i < ndim_; ++i) {
        if (i) s += "x";
        s += std::to_string(d_[i]);
    }
    return s + ")";
}

bool Shape::operator==(const Shape& other) const {
    if (ndim_ != other.ndim_) return false;
    for (int i = 0; i < ndim_; ++i)
        if (d_[i] != other.d_[i]) return false;
    return true;
}

void Node::ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0f);
}

namespace {
thread_local bool g_grad_enabled = true;
thread_local bool g_finite_checks = true;
} // namespace

bool grad_enabled() { return g_grad_enabled; }
void set_grad_enabled(bool enabled) { g_grad_enabled = enabled; }
bool finite_checks_enabled() { return g_finite_checks; }
void set_finite_checks(bool enabled) { g_finite_checks = enabled; }

void check_finite(std::span<const float> v, const char* op) {
    if (!g_finite_checks) return;
    for (float x : v) {
        if (!std::isfinite(x))
            throw NumericError(std::string("non-finite value produced by op '") + op + "'");
    }
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
    return full(shape, 0.0f, requires_grad);
}

Tensor Tensor::full(const Shape& shape, float v, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->shape = shape;
    n->value.assign(size_t(shape.numel()), v);
    n->requires_grad = requires_grad;
    return wrap(std::move(n));
}

Tensor Tensor::from(const Shape& shape, std::vector<float> data, bool requires_grad) {
    if (int64_t(data.size()) != shape.numel())
        throw ShapeError("Tensor::from: data size " + std::to_string(data.size()) +
                         " does not match shape " + shape.str());
    auto n = std::make_shared<Node>();
    n->shape = shape;
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return wrap(std::move(n));
}

Tensor Tensor::scalar(float v, bool requires_grad) {
    return from(Shape{}, {v}, requires_grad);
}

const Shape& Tensor::shape() const {
    if (!node_) throw ShapeError("shape() on undefined tensor");
    return node_->shape;
}

int64_t Tensor::numel() const { return shape().numel(); }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

std::span<const float> Tensor::data() const {
    if (!node_) throw ShapeError("data() on undefined tensor");
    return node_->value;
}

std::span<float> Tensor::mutable_data() {
    if (!node_) throw ShapeError("mutable_data() on undefined tensor");
    if (!node_->parents.empty() || node_->backward_fn)
        throw ValueError("mutable_data() is only valid on leaf tensors");
    return node_->value;
}

std::span<const float> Tensor::grad() const {
    if (!node_) return {};
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_) std::fill(node_->grad.begin(), node_->grad.end(), 0.0f);
}

float Tensor::item() const {
    if (numel() != 1) throw ShapeError("item() on tensor with numel " + std::to_string(numel()));
    return node_->value[0];
}

float Tensor::at(std::initializer_list<int64_t> idx) const {
    const Shape& s = shape();
    if (int(idx.size()) != s.ndim()) throw ShapeError("at(): index rank mismatch");
    auto st = s.strides();
    int64_t off = 0;
    int i = 0;
    for (int64_t v : idx) {
        if (v < 0 || v >= s[i]) throw ShapeError("at(): index out of range");
        off += v * st[i];
        ++i;
    }
    return node_->value[size_t(off)];
}

const char* Tensor::op() const { return node_ ? node_->op : "undefined"; }

Tensor Tensor::detached_copy() const {
    if (!node_) return {};
    auto n = std::make_shared<Node>();
    n->shape = node_->shape;
    n->value = node_->value;
    n->requires_grad = node_->requires_grad;
    return wrap(std::move(n));
}

void Tensor::backward() const {
    ComputeGraph::trace(*this).run_backward();
}

ComputeGraph ComputeGraph::trace(const Tensor& loss) {
    if (!loss.defined()) throw ShapeError("backward() on undefined tensor");
    if (loss.numel() != 1)
        throw ShapeError("backward() requires a scalar, got shape " + loss.shape().str());

    ComputeGraph g;
    g.root_ = loss.node().get();
    g.retain_.push_back(loss.node());

    // Iterative post-order DFS; parents end up before children in order_.
    std::unordered_map<Node*, int> state; // 0 unseen, 1 open, 2 done
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(g.root_, 0);
    state[g.root_] = 1;
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            const NodePtr& pp = node->parents[next++];
            int& st = state[pp.get()];
            if (st == 0) {
                st = 1;
                g.retain_.push_back(pp);
                stack.emplace_back(pp.get(), 0);
            } else if (st == 1) {
                throw NumericError("compute graph contains a cycle");
            }
        } else {
            state[node] = 2;
            g.order_.push_back(node);
            stack.pop_back();
        }
    }
    return g;
}

void ComputeGraph::run_backward() {
    if (!root_) return;
    root_->ensure_grad();
    root_->grad[0] = 1.0f;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn) {
            n->ensure_grad();
            n->backward_fn(*n);
        }
    }
    // Graph is single-use: sever edges so intermediates free as soon as the
    // caller drops its handles. retain_ keeps nodes alive until here.
    for (Node* n : order_) {
        n->parents.clear();
        n->backward_fn = nullptr;
    }
    root_ = nullptr;
    order_.clear();
    retain_.clear();
}

} // namespace atrfas::nd
