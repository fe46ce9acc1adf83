#include "capgen/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "capgen/errors.hpp"

namespace capgen::nd {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {
void check_extents(const Shape& shape) {
  for (auto e : shape)
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
}
}  // namespace

template <class R>
Tensor<R>::Tensor(Shape shape) : impl_(std::make_shared<Impl>()) {
  check_extents(shape);
  impl_->data.assign(numel(shape), R(0));
  impl_->shape = std::move(shape);
}

template <class R>
Tensor<R>::Tensor(Shape shape, std::vector<R> data) : impl_(std::make_shared<Impl>()) {
  check_extents(shape);
  if (numel(shape) != data.size())
    throw DimensionError("shape " + shape_str(shape) + " needs " + std::to_string(numel(shape)) +
                         " values, got " + std::to_string(data.size()));
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
}

template <class R>
Tensor<R> Tensor<R>::full(Shape shape, R value) {
  Tensor t(std::move(shape));
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

template <class R>
R Tensor<R>::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

template <class R>
std::span<R> Tensor<R>::grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), R(0));
  return impl_->grad;
}

template <class R>
void Tensor<R>::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), R(0));
}

template <class R>
Tensor<R> Tensor<R>::detached_copy() const {
  return Tensor(impl_->shape, impl_->data);
}

IndexTensor::IndexTensor(Shape s, std::vector<std::int32_t> d) : shape(std::move(s)), data(std::move(d)) {
  if (numel(shape) != data.size())
    throw DimensionError("index tensor shape " + shape_str(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
}

BoolTensor::BoolTensor(Shape s, std::vector<std::uint8_t> d) : shape(std::move(s)), data(std::move(d)) {
  if (numel(shape) != data.size())
    throw DimensionError("mask shape " + shape_str(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
}

BoolTensor BoolTensor::filled(Shape s, bool value) {
  auto n = numel(s);
  return BoolTensor(std::move(s), std::vector<std::uint8_t>(n, value ? 1 : 0));
}

template <class R>
void Graph<R>::record(std::vector<Tensor<R>> inputs, Tensor<R> output, std::function<void()> backward) {
  if (!record_) return;
  bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor<R>& t) { return t.requires_grad(); });
  if (!any) return;
  output.set_requires_grad(true);
  ops_.push_back(Op{std::move(inputs), std::move(output), std::move(backward)});
}

template <class R>
void Graph<R>::backward(Tensor<R> loss) {
  if (loss.size() != 1)
    throw ContractError("backward needs a scalar loss, got shape " + shape_str(loss.shape()));
  if (!loss.requires_grad()) return;
  loss.grad()[0] += R(1);
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    if (!it->output.has_grad()) continue;
    it->backward();
  }
}

template class Tensor<float>;
template class Tensor<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace capgen::nd
