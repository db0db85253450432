#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "melmine/common.hpp"

namespace melmine {

/// y = W x + b, with W stored out × in.
struct DenseLayer {
  RowMatrix<float> weight;
  std::vector<float> bias;

  std::size_t in_features() const noexcept { return weight.cols(); }
  std::size_t out_features() const noexcept { return weight.rows(); }
  std::vector<double> forward(std::span<const double> x) const;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Two affine layers with max(x, 0) in between.
struct TwoLayerNet {
  DenseLayer first;
  DenseLayer second;

  std::vector<double> forward(std::span<const double> x) const;

  friend bool operator==(const TwoLayerNet&, const TwoLayerNet&) = default;
};

/// Contextual encoder (2d -> d -> d) and the global/per-patch affine predictors
/// (2d -> d -> 2d, output split as [alpha | beta]). The per-patch predictor is shared by all
/// patches, which makes it a stack of 1x1 convolutions over the patch sequence.
struct CvacptParams {
  std::size_t dim = 0;
  double blend = 0.5;  // w in [0, 1]
  TwoLayerNet context;
  TwoLayerNet global_affine;
  TwoLayerNet local_affine;

  friend bool operator==(const CvacptParams&, const CvacptParams&) = default;
};

/// Throws Error{kShapeMismatch} on inconsistent layer shapes, Error{kInvalidArgument} when the
/// blend leaves [0, 1] or a weight is not finite.
void validate(const CvacptParams& params);

/// Zero-filled parameters of the right shapes.
CvacptParams zero_params(std::size_t dim, double blend = 0.5);

/// Every weight and bias uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
CvacptParams init_params(std::size_t dim, std::uint64_t seed, double blend = 0.5);

// A parameter set is a JSON manifest (dim, blend, tensor shapes and file names) plus one
// EMB1 file per tensor, written next to the manifest as <stem>.<tensor>.emb.
void save_params(const CvacptParams& params, const std::filesystem::path& manifest);
CvacptParams load_params(const std::filesystem::path& manifest);

/// Global vector plus n_p × d patch matrix of one visual input.
struct FeatureBundle {
  std::vector<float> global;
  RowMatrix<float> local;

  std::size_t dim() const noexcept { return global.size(); }
  std::size_t patches() const noexcept { return local.rows(); }
  friend bool operator==(const FeatureBundle&, const FeatureBundle&) = default;
};

/// CE([view · text]): the context vector for one synthetic view.
std::vector<double> contextual_encode(std::span<const float> view, std::span<const float> text,
                                      const CvacptParams& params);

/// Elementwise maximum over equally sized vectors. Throws Error{kEmptyViewSet}.
template <typename T>
std::vector<double> max_pool(std::span<const std::span<const T>> vectors);

/// Encodes every view against the mention text and max-pools the encodings.
std::vector<double> pool_views(std::span<const std::span<const float>> views,
                               std::span<const float> text, const CvacptParams& params);

/// Residual affine transform of the global vector and of each patch:
///   (alpha, beta) = A([x · context]),  x' = x + w · (alpha ⊙ x + beta).
/// Entries whose displacement is exactly zero are copied bit for bit.
FeatureBundle transform(const FeatureBundle& visual, std::span<const double> context,
                        const CvacptParams& params, unsigned threads = 1);

}  // namespace melmine
