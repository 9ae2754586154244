#include "claimforge/generator/adapter_bank.hpp"

#include <cmath>

#include "claimforge/numerics/ops.hpp"

namespace claimforge::generator {

namespace nx = numerics;

namespace {

std::size_t projection_index(char projection) {
  for (std::size_t i = 0; i < kAdaptedProjections.size(); ++i) {
    if (kAdaptedProjections[i] == projection) return i;
  }
  throw GeneratorError(std::string("projection '") + projection + "' has no adapters");
}

std::string adapter_prefix(std::size_t domain, std::size_t layer, char projection) {
  return std::string("adapter/") + chunker::kDomainNames[domain] + "/" + std::to_string(layer) + "/" + projection +
         "/";
}

}  // namespace

Tensor LowRankAdapter::delta() const { return nx::matmul_nt(B, C); }

AdapterBank AdapterBank::init(std::size_t num_layers, std::size_t model_dim, nx::Rng& rng) {
  AdapterBank bank;
  bank.num_layers = num_layers;
  bank.model_dim = model_dim;
  const double c_std = 1.0 / std::sqrt(static_cast<double>(model_dim));
  bank.adapters.resize(kNumDomains);
  for (std::size_t d = 0; d < kNumDomains; ++d) {
    for (std::size_t l = 0; l < num_layers; ++l) {
      std::array<LowRankAdapter, 2> pair;
      for (auto& a : pair) {
        a.B = Tensor::zeros({model_dim, kAdapterRank}, true);
        a.C = nx::normal_tensor({model_dim, kAdapterRank}, c_std, rng, true);
      }
      bank.adapters[d].push_back(std::move(pair));
    }
  }
  return bank;
}

const LowRankAdapter& AdapterBank::at(std::size_t domain, std::size_t layer, char projection) const {
  if (domain >= adapters.size() || layer >= num_layers) throw GeneratorError("adapter index out of range");
  return adapters[domain][layer][projection_index(projection)];
}

LowRankAdapter& AdapterBank::at(std::size_t domain, std::size_t layer, char projection) {
  if (domain >= adapters.size() || layer >= num_layers) throw GeneratorError("adapter index out of range");
  return adapters[domain][layer][projection_index(projection)];
}

std::vector<Tensor> AdapterBank::parameters() const {
  std::vector<Tensor> out;
  for (const auto& per_domain : adapters)
    for (const auto& pair : per_domain)
      for (const auto& a : pair) {
        out.push_back(a.B);
        out.push_back(a.C);
      }
  return out;
}

void AdapterBank::export_to(nx::Checkpoint& ck) const {
  for (std::size_t d = 0; d < adapters.size(); ++d)
    for (std::size_t l = 0; l < num_layers; ++l)
      for (char p : kAdaptedProjections) {
        const auto& a = at(d, l, p);
        ck.tensors[adapter_prefix(d, l, p) + "B"] = a.B;
        ck.tensors[adapter_prefix(d, l, p) + "C"] = a.C;
      }
}

AdapterBank AdapterBank::import_from(const nx::Checkpoint& ck, std::size_t num_layers) {
  AdapterBank bank;
  bank.num_layers = num_layers;
  bank.adapters.resize(kNumDomains);
  for (std::size_t d = 0; d < kNumDomains; ++d) {
    for (std::size_t l = 0; l < num_layers; ++l) {
      std::array<LowRankAdapter, 2> pair;
      for (std::size_t i = 0; i < 2; ++i) {
        auto prefix = adapter_prefix(d, l, kAdaptedProjections[i]);
        const auto& b = ck.at(prefix + "B");
        const auto& c = ck.at(prefix + "C");
        if (b.cols() != kAdapterRank || c.cols() != kAdapterRank) {
          throw GeneratorError("adapter " + prefix + " does not have rank " + std::to_string(kAdapterRank));
        }
        pair[i].B = Tensor(b.shape(), b.to_vector(), true);
        pair[i].C = Tensor(c.shape(), c.to_vector(), true);
      }
      bank.adapters[d].push_back(std::move(pair));
    }
  }
  bank.model_dim = bank.adapters[0][0][0].B.rows();
  return bank;
}

Tensor effective_projection(const Tensor& base, const AdapterBank& bank, const Tensor& alpha, std::size_t layer,
                            char projection) {
  if (alpha.numel() != kNumDomains) throw GeneratorError("domain mixture must have 5 entries");
  Tensor delta;
  for (std::size_t d = 0; d < kNumDomains; ++d) {
    const auto& a = bank.at(d, layer, projection);
    if (a.B.rows() != base.rows() || a.C.rows() != base.cols()) {
      throw GeneratorError("adapter shape (" + std::to_string(a.B.rows()) + " x " + std::to_string(a.C.rows()) +
                           ") does not match projection " + nx::shape_string(base.shape()));
    }
    Tensor term = nx::scale_by(a.delta(), nx::pick(alpha, 0, d));
    delta = delta.defined() ? nx::add(delta, term) : term;
  }
  return nx::add(base, delta);
}

}  // namespace claimforge::generator
