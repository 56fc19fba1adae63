#pragma once

#include "arff/mlp.hpp"
#include "arff/targets.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace arff {

/// RGB image in [0,1]^3, pixel (row r, column c) stored at row r * width + c.
struct Image {
  Index width = 0;
  Index height = 0;
  Eigen::MatrixXd rgb;  // (width * height) x 3
};

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

/// Smooth color gradient plus diagonal stripes with period 8 pixels.
Image synthetic_striped_image(Index size);
/// Every pixel equal to `color`.
Image constant_image(Index size, const Eigen::Vector3d& color);

struct ImageSplit {
  Dataset train;  // pixels with both coordinates even
  Dataset test;   // pixels with both coordinates odd
  double max_intensity = 0.0;
  Index crop = 0;
};

/// Centered crop x crop window; coordinates (column, row) / (crop - 1) in [0,1]^2.
ImageSplit ingest_image(const Image& image, Index crop);
ImageSplit ingest_image(const std::filesystem::path& path, Index crop);

struct ImagePipelineConfig {
  std::vector<std::filesystem::path> images;  // empty: the synthetic striped image
  Index synthetic_size = 64;
  Index crop = 64;
  std::vector<ImageApproach> approaches{ImageApproach::kArffRff, ImageApproach::kGlorotRff, ImageApproach::kReluOnly,
                                        ImageApproach::kReluDeeper};
  // Step 1 (frequency sampling)
  Index nodes = 256;
  Index arff_iterations = 20;
  double arff_lambda = 1e-4;
  double arff_delta = 1.0;
  // Step 2 (Adam)
  Index relu_layers = 3;
  Index epochs = 200;
  Index batch_size = 256;
  double learning_rate = 1e-3;
  bool freeze_rff_layer = false;
  std::uint64_t seed = 0;
};

struct ImageRun {
  std::string image;
  ImageApproach approach = ImageApproach::kArffRff;
  double psnr = 0.0;
  std::vector<EpochRecord> curve;
};

struct ImagePipelineResult {
  std::vector<ImageRun> runs;
};

/// Step 1 for a split: cosine-feature ARFF (A false, R 1, zero start, 2-norm
/// masses) on the training pixels; returns the bias-extended frequencies.
FrequencySet sample_image_frequencies(const ImageSplit& split, const ImagePipelineConfig& config, CounterRng rng);

ImagePipelineResult image_pipeline(const ImagePipelineConfig& config);

}  // namespace arff
