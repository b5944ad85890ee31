#include "mmtk/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace mmtk {

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  out += ")";
  return out;
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t e : s) {
    if (e == 0) throw std::invalid_argument("tensor extents must be positive");
    n *= e;
  }
  return n;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(const Shape& shape, bool requires_grad) {
  auto impl = std::make_shared<Impl>();
  impl->shape = shape;
  impl->data.assign(shape_numel(shape), T(0));
  impl->requires_grad = requires_grad;
  if (requires_grad) impl->grad.assign(impl->data.size(), T(0));
  return Tensor(std::move(impl));
}

template <typename T>
Tensor<T> Tensor<T>::full(const Shape& shape, T value, bool requires_grad) {
  Tensor t = zeros(shape, requires_grad);
  for (T& v : t.data()) v = value;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::from(const Shape& shape, std::vector<T> values,
                          bool requires_grad) {
  if (values.size() != shape_numel(shape)) {
    throw std::invalid_argument("tensor data size " +
                                std::to_string(values.size()) +
                                " does not match shape " + shape_str(shape));
  }
  auto impl = std::make_shared<Impl>();
  impl->shape = shape;
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  if (requires_grad) impl->grad.assign(impl->data.size(), T(0));
  return Tensor(std::move(impl));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::kaiming_uniform(const Shape& shape, std::size_t fan_in,
                                     Rng& rng, bool requires_grad) {
  if (fan_in == 0) throw std::invalid_argument("kaiming_uniform: fan_in == 0");
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  return uniform(shape, static_cast<T>(-bound), static_cast<T>(bound), rng,
                 requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::uniform(const Shape& shape, T lo, T hi, Rng& rng,
                             bool requires_grad) {
  Tensor t = zeros(shape, requires_grad);
  for (T& v : t.data()) {
    v = static_cast<T>(rng.uniform(static_cast<double>(lo), static_cast<double>(hi)));
  }
  return t;
}

template <typename T>
std::vector<T>& Tensor<T>::grad() {
  if (!impl_->requires_grad) {
    throw std::runtime_error("tensor does not require grad");
  }
  return impl_->grad;
}

template <typename T>
const std::vector<T>& Tensor<T>::grad() const {
  if (!impl_->requires_grad) {
    throw std::runtime_error("tensor does not require grad");
  }
  return impl_->grad;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    throw std::runtime_error("item() requires a single-element tensor, got " +
                             shape_str(shape()));
  }
  return impl_->data[0];
}

template <typename T>
T Tensor<T>::at(const std::vector<std::size_t>& index) const {
  if (index.size() != impl_->shape.size()) {
    throw std::invalid_argument("at(): rank mismatch");
  }
  std::size_t flat = 0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= impl_->shape[k]) throw std::out_of_range("at(): index out of bounds");
    flat = flat * impl_->shape[k] + index[k];
  }
  return impl_->data[flat];
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (impl_->requires_grad) {
    std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
  }
}

template <typename T>
void Tensor<T>::backward() const {
  if (numel() != 1) {
    throw std::runtime_error("backward() requires a scalar loss, got shape " +
                             shape_str(shape()));
  }
  if (!impl_->requires_grad) {
    throw std::runtime_error("backward() on a tensor that does not require grad");
  }

  // iterative post-order DFS; topo holds nodes with all descendants before them
  std::vector<Impl*> topo;
  std::unordered_set<Impl*> visited;
  struct Frame {
    Impl* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({impl_.get(), 0});
  visited.insert(impl_.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      Impl* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && visited.insert(p).second) {
        stack.push_back({p, 0});
      }
    } else {
      topo.push_back(f.node);
      stack.pop_back();
    }
  }

  // interior (op-produced) grads are scratch space for this pass; only leaf
  // grads persist, so repeated backward() calls accumulate exactly one
  // pass's contribution per call
  for (Impl* node : topo) {
    if (node->backward_fn) {
      std::fill(node->grad.begin(), node->grad.end(), T(0));
    }
  }
  impl_->grad[0] += T(1);
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  auto impl = std::make_shared<Impl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->requires_grad = false;
  return Tensor(std::move(impl));
}

template <typename T>
void assert_finite(const Tensor<T>& t, const char* where) {
  for (T v : t.data()) {
    if (!std::isfinite(static_cast<double>(v))) {
      throw std::runtime_error(std::string(where) +
                               " produced a non-finite value");
    }
  }
}

template class Tensor<float>;
template class Tensor<double>;
template void assert_finite<float>(const Tensor<float>&, const char*);
template void assert_finite<double>(const Tensor<double>&, const char*);

}  // namespace mmtk
