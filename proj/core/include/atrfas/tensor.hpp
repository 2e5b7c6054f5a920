#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace atrfas::nd {

/// Extents of a dense row-major tensor. At most 5 axes; ndim 0 is a scalar.
class Shape {
public:
    static constexpr int kMaxAxes = 5;

    Shape() = default;
    Shape(std::initializer_list<int64_t> dims);
    explicit Shape(std::span<const int64_t> dims);

    int ndim() const { return ndim_; }
    int64_t operator[](int axis) const;
    int64_t numel() const;
    /// Row-major strides, in elements.
    std::array<int64_t, kMaxAxes> strides() const;
    /// Shape with the given axis removed.
    Shape drop_axis(int axis) const;
    std::string str() const;

    bool operator==(const Shape& other) const;
    bool operator!=(const Shape& other) const { return !(*this == other); }

private:
    std::array<int64_t, kMaxAxes> d_{};
    int ndim_ = 0;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One value in the compute graph. Interior nodes carry the closure that
/// pushes their output gradient to their parents.
struct Node {
    Shape shape;
    std::vector<float> value;
    std::vector<float> grad;           // sized lazily, zero-filled
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<NodePtr> parents;      // empty for leaves
    std::function<void(Node&)> backward_fn;

    void ensure_grad();
};

/// Dense float32 tensor handle. Storage is immutable once produced by an op;
/// only leaves may be mutated in place (parameter updates between steps).
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(const Shape& shape, bool requires_grad = false);
    static Tensor full(const Shape& shape, float v, bool requires_grad = false);
    static Tensor from(const Shape& shape, std::vector<float> data, bool requires_grad = false);
    static Tensor scalar(float v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    int64_t numel() const;
    bool requires_grad() const;

    std::span<const float> data() const;
    /// Leaf-only mutable access (optimizer updates). Throws on interior nodes.
    std::span<float> mutable_data();
    std::span<const float> grad() const;   // empty span when absent
    void zero_grad();

    float item() const;                    // numel()==1 only
    float at(std::initializer_list<int64_t> idx) const;

    /// Reverse-mode sweep from a scalar. Frees the traced graph afterwards.
    void backward() const;

    /// Deep copy with no graph history (fresh leaf).
    Tensor detached_copy() const;

    const char* op() const;
    NodePtr node() const { return node_; }      // engine internals and ops
    static Tensor wrap(NodePtr n) { Tensor t; t.node_ = std::move(n); return t; }

private:
    NodePtr node_;
};

/// Topologically ordered trace of everything a scalar loss depends on.
/// Single-use: run_backward() populates leaf gradients, then severs the
/// recorded edges so intermediates can be reclaimed.
class ComputeGraph {
public:
    static ComputeGraph trace(const Tensor& loss);
    void run_backward();
    size_t size() const { return order_.size(); }

private:
    std::vector<Node*> order_;           // parents before children
    std::vector<NodePtr> retain_;        // keeps nodes alive during the sweep
    Node* root_ = nullptr;
};

/// When false, ops do not record edges and outputs never require grad.
bool grad_enabled();
void set_grad_enabled(bool enabled);

struct NoGradGuard {
    NoGradGuard() : prev_(grad_enabled()) { set_grad_enabled(false); }
    ~NoGradGuard() { set_grad_enabled(prev_); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

/// When true (default), every op output is scanned for NaN/Inf.
bool finite_checks_enabled();
void set_finite_checks(bool enabled);

/// Throws NumericError when v contains a non-finite value.
void check_finite(std::span<const float> v, const char* op);

} // namespace atrfas::nd
