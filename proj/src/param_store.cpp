#include "lira/param_store.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace lira::nn {
namespace {

constexpr char kMagic[8] = {'L', 'I', 'R', 'A', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace

void ParamStore::add(const std::string& name, Tensor value, bool trainable) {
  if (!params_.emplace(name, std::move(value)).second)
    throw std::invalid_argument("duplicate parameter: " + name);
  if (trainable) trainable_.insert(name);
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

Tensor& ParamStore::get_mut(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : params_) out.push_back(k);
  return out;
}

std::vector<std::string> ParamStore::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [k, _] : params_)
    if (k.starts_with(prefix)) out.push_back(k);
  return out;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

void ParamStore::set_trainable(const std::string& name, bool on) {
  if (!contains(name)) throw std::out_of_range("unknown parameter: " + name);
  if (on)
    trainable_.insert(name);
  else
    trainable_.erase(name);
}

void ParamStore::set_trainable(const std::set<std::string>& names) {
  for (const auto& n : names)
    if (!contains(n)) throw std::out_of_range("unknown parameter: " + n);
  trainable_ = names;
}

void ParamStore::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(params_.size()));
  for (const auto& [name, t] : params_) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(t.data().data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("failed writing checkpoint " + path.string());
}

ParamStore ParamStore::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  if (auto v = take<std::uint32_t>(is); v != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(v));
  const auto count = take<std::uint32_t>(is);
  ParamStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = take<std::uint32_t>(is);
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw std::runtime_error("checkpoint truncated");
    const auto rank = take<std::uint32_t>(is);
    Shape shape(rank);
    for (auto& d : shape) d = take<std::uint64_t>(is);
    std::vector<double> data(numel(shape));
    if (!is.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double))))
      throw std::runtime_error("checkpoint truncated");
    store.add(name, Tensor(std::move(shape), std::move(data)));
  }
  return store;
}

Var ParamBinding::operator()(const std::string& name) {
  auto it = leaves_.find(name);
  if (it != leaves_.end()) return it->second;
  const bool grad = track_ && store_->is_trainable(name);
  Var leaf = Var::leaf(store_->get(name), grad);
  leaves_.emplace(name, leaf);
  return leaf;
}

GradMap ParamBinding::gradients() const {
  GradMap out;
  for (const auto& [name, leaf] : leaves_)
    if (leaf.requires_grad()) out.emplace(name, leaf.grad());
  return out;
}

}  // namespace lira::nn
