#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mmtk/rng.hpp"

namespace mmtk {

enum class Mode { kTrain, kEval };

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // sized like data iff requires_grad
  bool requires_grad = false;

  // reverse-mode graph: parents keep saved activations alive,
  // backward_fn reads this->grad and accumulates into parents' grads
  std::vector<std::shared_ptr<TensorImpl<T>>> parents;
  std::function<void(TensorImpl<T>&)> backward_fn;
};

// Value-semantic handle over a shared autodiff node. Data is written once at
// construction by the producing op; only grad buffers mutate afterwards.
template <typename T>
class Tensor {
 public:
  using Impl = TensorImpl<T>;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, T value, bool requires_grad = false);
  static Tensor from(const Shape& shape, std::vector<T> values,
                     bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);
  // Kaiming-uniform fan-in init, bound = sqrt(6 / fan_in)
  static Tensor kaiming_uniform(const Shape& shape, std::size_t fan_in,
                                Rng& rng, bool requires_grad = true);
  static Tensor uniform(const Shape& shape, T lo, T hi, Rng& rng,
                        bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t numel() const { return impl_->data.size(); }
  std::size_t dim(std::size_t i) const { return impl_->shape.at(i); }
  std::size_t rank() const { return impl_->shape.size(); }

  std::vector<T>& data() { return impl_->data; }
  const std::vector<T>& data() const { return impl_->data; }
  std::vector<T>& grad();
  const std::vector<T>& grad() const;
  bool requires_grad() const { return impl_->requires_grad; }

  T item() const;
  T at(const std::vector<std::size_t>& index) const;

  void zero_grad();
  // Reverse-mode pass from a scalar output. Gradients accumulate across
  // repeated calls until zero_grad().
  void backward() const;

  // same data, no graph, no grad
  Tensor detach() const;

  std::shared_ptr<Impl>& impl() { return impl_; }
  const std::shared_ptr<Impl>& impl() const { return impl_; }

 private:
  std::shared_ptr<Impl> impl_;
};

// throws if any value is non-finite; `where` names the producing op
template <typename T>
void assert_finite(const Tensor<T>& t, const char* where);

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template void assert_finite<float>(const Tensor<float>&, const char*);
extern template void assert_finite<double>(const Tensor<double>&, const char*);

}  // namespace mmtk
