#include "arff/app/image.hpp"

#include "arff/arff.hpp"
#include "arff/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace arff {

Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw std::runtime_error("cannot read image " + path.string() + ": " + png.message);
  png.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw std::runtime_error("cannot decode image " + path.string() + ": " + msg);
  }
  Image img;
  img.width = static_cast<Index>(png.width);
  img.height = static_cast<Index>(png.height);
  img.rgb.resize(img.width * img.height, 3);
  for (Index p = 0; p < img.rgb.rows(); ++p)
    for (Index c = 0; c < 3; ++c) img.rgb(p, c) = buffer[static_cast<std::size_t>(3 * p + c)] / 255.0;
  return img;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.rgb.rows() != image.width * image.height || image.rgb.cols() != 3)
    throw PreconditionError("image buffer does not match its size");
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(static_cast<std::size_t>(image.rgb.size()));
  for (Index p = 0; p < image.rgb.rows(); ++p)
    for (Index c = 0; c < 3; ++c)
      buffer[static_cast<std::size_t>(3 * p + c)] =
          static_cast<png_byte>(std::lround(std::clamp(image.rgb(p, c), 0.0, 1.0) * 255.0));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr))
    throw std::runtime_error("cannot write image " + path.string() + ": " + png.message);
}

Image synthetic_striped_image(Index size) {
  if (size < 2) throw PreconditionError("image size must be >= 2");
  Image img;
  img.width = img.height = size;
  img.rgb.resize(size * size, 3);
  const double cycles = static_cast<double>(size) / 8.0;
  for (Index r = 0; r < size; ++r) {
    for (Index c = 0; c < size; ++c) {
      const double u = static_cast<double>(c) / static_cast<double>(size - 1);
      const double v = static_cast<double>(r) / static_cast<double>(size - 1);
      const double stripes = 0.2 * std::sin(2.0 * std::numbers::pi * cycles * (0.8 * u + 0.6 * v));
      const Index p = r * size + c;
      img.rgb(p, 0) = std::clamp(0.2 + 0.5 * u + stripes, 0.0, 1.0);
      img.rgb(p, 1) = std::clamp(0.2 + 0.5 * v - stripes, 0.0, 1.0);
      img.rgb(p, 2) = std::clamp(0.6 - 0.3 * u + 0.5 * stripes, 0.0, 1.0);
    }
  }
  return img;
}

Image constant_image(Index size, const Eigen::Vector3d& color) {
  if (size < 2) throw PreconditionError("image size must be >= 2");
  Image img;
  img.width = img.height = size;
  img.rgb = color.transpose().replicate(size * size, 1);
  return img;
}

ImageSplit ingest_image(const Image& image, Index crop) {
  if (crop < 2) throw PreconditionError("crop size must be >= 2");
  if (image.width < crop || image.height < crop)
    throw PreconditionError("image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                            ", smaller than the " + std::to_string(crop) + "x" + std::to_string(crop) + " crop");
  const Index r0 = (image.height - crop) / 2;
  const Index c0 = (image.width - crop) / 2;
  const Index half_even = (crop + 1) / 2;
  const Index half_odd = crop / 2;

  ImageSplit split;
  split.crop = crop;
  auto init = [](Dataset& d, Index side) {
    d.inputs.resize(side * side, 2);
    d.outputs.resize(side * side, 3);
    d.provenance = Provenance::kImage;
    d.stats = Dataset::identity_stats(2, 3);
  };
  init(split.train, half_even);
  init(split.test, half_odd);
  Index n_train = 0;
  Index n_test = 0;
  double max_i = 0.0;
  const double scale = 1.0 / static_cast<double>(crop - 1);
  for (Index r = 0; r < crop; ++r) {
    for (Index c = 0; c < crop; ++c) {
      const auto pixel = image.rgb.row((r0 + r) * image.width + (c0 + c));
      max_i = std::max(max_i, pixel.maxCoeff());
      Dataset* target = nullptr;
      Index* slot = nullptr;
      if (r % 2 == 0 && c % 2 == 0) {
        target = &split.train;
        slot = &n_train;
      } else if (r % 2 == 1 && c % 2 == 1) {
        target = &split.test;
        slot = &n_test;
      } else {
        continue;
      }
      target->inputs(*slot, 0) = static_cast<double>(c) * scale;
      target->inputs(*slot, 1) = static_cast<double>(r) * scale;
      target->outputs.row(*slot) = pixel;
      ++*slot;
    }
  }
  split.max_intensity = max_i;
  return split;
}

ImageSplit ingest_image(const std::filesystem::path& path, Index crop) { return ingest_image(read_png(path), crop); }

FrequencySet sample_image_frequencies(const ImageSplit& split, const ImagePipelineConfig& config, CounterRng rng) {
  ArffConfig arff;
  arff.iterations = config.arff_iterations;
  arff.step_stddev = config.arff_delta;
  arff.lambda = config.arff_lambda;
  arff.batch_size = split.train.size();
  arff.activation = ActivationKind::kCosineBias;
  arff.norm_kind = NormKind::kTwoNorm;
  arff.seed = rng();
  apply_variant(arff, Variant::kRandomWalkResampling);
  return train(arff, split.train, FrequencySet::zeros(config.nodes, split.train.input_dimension() + 1)).frequencies;
}

namespace {

std::string image_label(const ImagePipelineConfig& config, std::size_t i) {
  if (config.images.empty()) return "synthetic-striped-" + std::to_string(config.synthetic_size);
  return config.images[i].filename().string();
}

}  // namespace

ImagePipelineResult image_pipeline(const ImagePipelineConfig& config) {
  if (config.approaches.empty()) throw ConfigError("approach list is empty");
  if (config.epochs < 0 || config.batch_size < 1) throw ConfigError("epochs must be >= 0 and batch size >= 1");
  ImagePipelineResult result;
  const CounterRng root(config.seed);
  const std::size_t image_count = config.images.empty() ? 1 : config.images.size();
  for (std::size_t i = 0; i < image_count; ++i) {
    const ImageSplit split = config.images.empty()
                                 ? ingest_image(synthetic_striped_image(config.synthetic_size), config.crop)
                                 : ingest_image(config.images[i], config.crop);
    const CounterRng image_rng = root.split(i);
    std::optional<FrequencySet> arff_freqs;
    for (const ImageApproach approach : config.approaches) {
      ImageModelOptions options;
      options.input_dimension = 2;
      options.width = config.nodes;
      options.relu_layers = config.relu_layers;
      options.output_dimension = 3;
      if (approach == ImageApproach::kArffRff && !arff_freqs)
        arff_freqs = sample_image_frequencies(split, config, stream(image_rng, StreamPurpose::kInitialFrequencies));
      MlpModel model = image_model(approach, options, stream(image_rng, StreamPurpose::kModel).split(static_cast<std::uint64_t>(approach)),
                                   arff_freqs ? &*arff_freqs : nullptr);
      const bool has_rff = approach == ImageApproach::kArffRff || approach == ImageApproach::kGlorotRff;
      if (config.freeze_rff_layer && has_rff) model.layers().front().trainable = false;
      AdamOptions adam{config.epochs, config.batch_size, config.learning_rate};
      AdamTrainResult trained =
          train_adam(std::move(model), split.train.inputs, split.train.outputs, adam,
                     stream(image_rng, StreamPurpose::kShuffle).split(static_cast<std::uint64_t>(approach)),
                     &split.test.inputs, &split.test.outputs);
      ImageRun run;
      run.image = image_label(config, i);
      run.approach = approach;
      run.psnr = psnr(trained.model.forward(split.test.inputs), split.test.outputs, split.max_intensity);
      run.curve = std::move(trained.curve);
      result.runs.push_back(std::move(run));
    }
  }
  return result;
}

}  // namespace arff
