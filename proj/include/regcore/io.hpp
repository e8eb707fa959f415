#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "regcore/geom.hpp"
#include "regcore/landmark_head.hpp"
#include "regcore/phantom.hpp"
#include "regcore/pipeline.hpp"
#include "regcore/warp.hpp"

namespace regcore::io {

namespace fs = std::filesystem;

// Raw image: one JSON header line {"h", "w", "spacing_mm": [row, col]} then
// h*w little-endian float32 pixels, row-major.
std::string encode_image(const ImageGrid& image);
ImageGrid decode_image(std::string_view bytes);

// Masks: header {"h", "w", "spacing_mm", "labels": [...]} then one h*w block
// of uint8 (0/1) per label.
struct MaskFile {
    std::vector<std::string> labels;
    std::vector<SegmentationMask> masks;
};
std::string encode_masks(const MaskFile& masks);
MaskFile decode_masks(std::string_view bytes);

// Activations: header {"n", "h", "w"} then n*h*w little-endian float32,
// channel-major.
std::string encode_activations(const ActivationStack& stack);
ActivationStack decode_activations(std::string_view bytes);

// Landmarks: CSV with header "index,x,y", normalized coordinates.
std::string encode_landmarks(const LandmarkSet& landmarks);
LandmarkSet decode_landmarks(std::string_view text);

// Transform parameters as JSON; doubles are written with round-trip precision.
std::string encode_transform(const TransformModel& t);
TransformModel decode_transform(std::string_view text);

// 8-bit binary PGM, intensities clamped to [0, 1]. Lossy; for viewing only.
std::string encode_pgm(const ImageGrid& image);
ImageGrid decode_pgm(std::string_view bytes, Spacing spacing = {});

std::string read_file(const fs::path& path);
// Writes to a sibling temporary file and renames it into place, so readers
// never observe a partial file.
void write_file_atomic(const fs::path& path, std::string_view content);

ImageGrid read_image(const fs::path& path);
MaskFile read_masks(const fs::path& path);
ActivationStack read_activations(const fs::path& path);
LandmarkSet read_landmarks(const fs::path& path);

// Directory layout: template.{img,mask,act,csv} and, per frame,
// frame_NNN.{img,mask,act,csv,json}. The JSON holds the ground truth, the
// target organ and the frame id.
void write_phantom_dataset(const fs::path& dir, const PhantomDataset& ds, const std::vector<std::string>& labels);

std::string frame_stem(std::size_t index);

// JSON report for one registration.
std::string encode_report(const Registration& reg);

} // namespace regcore::io
