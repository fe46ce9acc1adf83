#pragma once

// Dense row-major tensors with an optional gradient slot, plus the operation
// tape used for reverse-mode differentiation.
//
// Tensor<R> is a shared handle: copies alias the same storage, which is how a
// parameter and the graph node that consumes it see the same gradient buffer.
// Shapes are fixed at construction; reshape produces a new tensor.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace capgen::nd {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <class R>
class Tensor {
 public:
  using value_type = R;

  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<R> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, R value);
  static Tensor scalar(R value) { return Tensor(Shape{}, std::vector<R>{value}); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t size() const { return impl_->data.size(); }

  std::span<R> data() { return impl_->data; }
  std::span<const R> data() const { return impl_->data; }
  R item() const;
  R& operator[](std::size_t i) { return impl_->data[i]; }
  R operator[](std::size_t i) const { return impl_->data[i]; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }

  bool has_grad() const { return !impl_->grad.empty(); }
  // Allocates a zeroed gradient buffer on first use. The buffer belongs to
  // the shared storage, so a const handle can still accumulate into it.
  std::span<R> grad() const;
  void zero_grad();
  void drop_grad() { impl_->grad.clear(); }

  // Deep copy with no gradient and requires_grad cleared.
  Tensor detached_copy() const;

  template <class S>
  Tensor<S> cast() const {
    std::vector<S> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<S>(impl_->data[i]);
    return Tensor<S>(shape(), std::move(out));
  }

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<R> data;
    std::vector<R> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

// Integer ids (token ids, targets). Never differentiated.
struct IndexTensor {
  Shape shape;
  std::vector<std::int32_t> data;

  IndexTensor() = default;
  IndexTensor(Shape s, std::vector<std::int32_t> d);
  std::int32_t at(std::size_t row, std::size_t col) const { return data[row * shape[1] + col]; }
};

// Boolean masks, stored one byte per entry.
struct BoolTensor {
  Shape shape;
  std::vector<std::uint8_t> data;

  BoolTensor() = default;
  BoolTensor(Shape s, std::vector<std::uint8_t> d);
  static BoolTensor filled(Shape s, bool value);
  bool at(std::size_t i) const { return data[i] != 0; }
};

// Ordered tape of recorded operations. Operations are appended as they run, so
// the list is topologically sorted by construction; backward walks it once in
// reverse. A graph built with record=false is an inference context: ops run
// but nothing is taped and outputs never require grad.
template <class R>
class Graph {
 public:
  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return ops_.size(); }

  // Appends an op if recording and any input requires grad; marks the output
  // as requiring grad in that case.
  void record(std::vector<Tensor<R>> inputs, Tensor<R> output, std::function<void()> backward);

  // Seeds dLoss/dLoss = 1 and runs every backward rule in reverse order.
  // Gradients accumulate into existing buffers; callers zero them between steps.
  void backward(Tensor<R> loss);

 private:
  struct Op {
    std::vector<Tensor<R>> inputs;
    Tensor<R> output;
    std::function<void()> backward;
  };
  bool record_;
  std::vector<Op> ops_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace capgen::nd
