#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lira/autograd.hpp"
#include "lira/tensor.hpp"

namespace lira::nn {

using GradMap = std::map<std::string, std::vector<double>>;

// Named parameters plus the subset currently receiving gradients.
// Iteration order is lexicographic by identifier.
class ParamStore {
 public:
  void add(const std::string& name, Tensor value, bool trainable = true);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  const Tensor& get(const std::string& name) const;
  Tensor& get_mut(const std::string& name);

  std::vector<std::string> names() const;
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;
  std::size_t scalar_count() const;

  const std::set<std::string>& trainable() const { return trainable_; }
  bool is_trainable(const std::string& name) const { return trainable_.count(name) != 0; }
  void set_trainable(const std::string& name, bool on);
  void set_trainable(const std::set<std::string>& names);
  void freeze_all() { trainable_.clear(); }

  const std::map<std::string, Tensor>& params() const { return params_; }

  // Binary checkpoint: "LIRACKPT" + u32 version + u32 count, then per
  // parameter u32 name length, UTF-8 name, u32 rank, u64 dims, raw
  // little-endian f64 values. Trainable flags are not stored.
  void save(const std::filesystem::path& path) const;
  static ParamStore load(const std::filesystem::path& path);

  // Values only; the trainable set is not compared.
  bool same_values(const ParamStore& other) const { return params_ == other.params_; }

 private:
  std::map<std::string, Tensor> params_;
  std::set<std::string> trainable_;
};

// Leaf Vars for one forward pass, created on first use. Trainable parameters
// become gradient-tracking leaves when tracking is on.
class ParamBinding {
 public:
  ParamBinding(const ParamStore& store, bool track_grads)
      : store_(&store), track_(track_grads) {}

  Var operator()(const std::string& name);
  const ParamStore& store() const { return *store_; }
  bool tracking() const { return track_; }

  // Gradients for every tracked leaf (zeros where no gradient arrived).
  GradMap gradients() const;

 private:
  const ParamStore* store_;
  bool track_;
  std::map<std::string, Var> leaves_;
};

}  // namespace lira::nn
