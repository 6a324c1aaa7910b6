#include "ironbench/tensor.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

#include "ironbench/error.hpp"

namespace ironbench {

Tensor& ParamSet::add(const std::string& name, std::vector<std::size_t> shape) {
  if (contains(name)) fail(Errc::state, "duplicate parameter '" + name + "'");
  const std::size_t count = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  index_.emplace(name, tensors_.size());
  names_.push_back(name);
  tensors_.push_back(Tensor{std::move(shape), std::vector<double>(count, 0.0)});
  return tensors_.back();
}

Tensor& ParamSet::at(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) fail(Errc::state, "no parameter named '" + name + "'");
  return tensors_[it->second];
}

const Tensor& ParamSet::at(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) fail(Errc::state, "no parameter named '" + name + "'");
  return tensors_[it->second];
}

std::size_t ParamSet::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

bool ParamSet::same_layout(const ParamSet& other) const noexcept {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i)
    if (tensors_[i].shape != other.tensors_[i].shape) return false;
  return true;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (std::size_t i = 0; i < tensors_.size(); ++i) out.add(names_[i], tensors_[i].shape);
  return out;
}

void ParamSet::set_zero() {
  for (auto& t : tensors_) std::fill(t.data.begin(), t.data.end(), 0.0);
}

void ParamSet::scale(double factor) {
  for (auto& t : tensors_)
    for (auto& x : t.data) x *= factor;
}

void ParamSet::add(const ParamSet& other) {
  if (!same_layout(other)) fail(Errc::state, "parameter layouts differ");
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto& dst = tensors_[i].data;
    const auto& src = other.tensors_[i].data;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
}

bool ParamSet::all_finite() const noexcept {
  for (const auto& t : tensors_)
    for (const double x : t.data)
      if (!std::isfinite(x)) return false;
  return true;
}

bool ParamSet::bitwise_equal(const ParamSet& other) const noexcept {
  if (!same_layout(other)) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i)
    if (std::memcmp(tensors_[i].data.data(), other.tensors_[i].data.data(), tensors_[i].size() * sizeof(double)) != 0)
      return false;
  return true;
}

}  // namespace ironbench
