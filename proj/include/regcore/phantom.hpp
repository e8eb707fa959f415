#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "regcore/geom.hpp"
#include "regcore/landmark_head.hpp"
#include "regcore/warp.hpp"

namespace regcore {

enum class DeformationKind { Rigid, Affine, Tps };

DeformationKind parse_deformation_kind(std::string_view name);
const char* to_string(DeformationKind kind);

struct PhantomConfig {
    std::size_t size = 224;      // square image side in pixels
    double spacing_mm = 1.0;     // isotropic pixel size
    std::size_t organs = 3;      // 2..4 labelled structures
    double amplitude_mm = 6.0;   // scale of the per-frame ground-truth motion
    DeformationKind deformation = DeformationKind::Tps;
    double noise_sigma = 0.0;    // additive Gaussian noise on frames
    std::size_t landmarks = ActivationStack::default_channels;
    double blob_sigma_px = 3.0;  // width of the oracle activation blobs
};

// Elliptical structure in normalized template coordinates.
struct Organ {
    std::string label;
    Point2 center;
    double semi_x = 0.0;
    double semi_y = 0.0;
    double angle = 0.0; // radians
    double intensity = 0.0;

    // Elliptical radius: < 1 inside, 1 on the outline.
    double radius(Point2 p) const;
};

struct PhantomFrame {
    int id = 0;
    ImageGrid image;
    std::vector<SegmentationMask> masks; // one per organ, same order as Phantom::organs()
    std::size_t target_organ = 0;
    LandmarkSet oracle_landmarks;
    std::optional<ActivationStack> oracle_activations;
    // Maps frame (moving) coordinates to template coordinates; frames are
    // rendered as anatomy(ground_truth(q)).
    TransformModel ground_truth;
};

// Desk-scale substitute for clinical cine data: smooth elliptical organs over
// a low-frequency background, a per-frame ground-truth deformation, and
// oracle landmarks at anatomy-attached sites. Everything is a pure function
// of (config, seed).
class Phantom {
public:
    Phantom(const PhantomConfig& config, std::uint64_t seed, std::size_t frame_count);

    const PhantomConfig& config() const { return config_; }
    std::size_t frame_count() const { return ground_truth_.size(); }
    const std::vector<Organ>& organs() const { return organs_; }
    std::vector<std::string> labels() const;
    Spacing spacing() const { return {config_.spacing_mm, config_.spacing_mm}; }

    // Anatomy intensity at a template-space point.
    double intensity(Point2 p) const;

    ImageGrid template_image() const;
    std::vector<SegmentationMask> template_masks() const;
    const LandmarkSet& template_landmarks() const { return sites_; }
    ActivationStack activations(const LandmarkSet& landmarks) const;

    const TransformModel& ground_truth(std::size_t frame) const { return ground_truth_.at(frame); }

    // Renders frame `index`. With `offset` the frame content is additionally
    // moved by that rigid map (normalized coordinates), as in the robustness
    // sweeps; landmarks and ground truth are updated consistently.
    PhantomFrame frame(std::size_t index, const std::optional<RigidTransform>& offset = std::nullopt,
                       bool with_activations = false) const;

    // Inverse of a transform at one point by Newton iteration; used to place
    // the oracle landmarks. Throws DegenerateConfiguration on non-convergence.
    static Point2 invert_point(const TransformModel& t, Point2 target);

private:
    ImageGrid render(const TransformModel& frame_to_template, std::uint64_t noise_stream) const;
    std::vector<SegmentationMask> render_masks(const TransformModel& frame_to_template) const;
    TransformModel draw_ground_truth(std::size_t frame) const;

    PhantomConfig config_;
    std::uint64_t seed_;
    std::vector<Organ> organs_;
    std::array<double, 4> background_phase_{};
    LandmarkSet sites_;
    std::vector<TransformModel> ground_truth_;
};

struct PhantomDataset {
    ImageGrid template_image;
    std::vector<SegmentationMask> template_masks;
    LandmarkSet template_landmarks;
    ActivationStack template_activations;
    std::vector<PhantomFrame> frames;
};

// Materializes every frame, activations included.
PhantomDataset generate_phantom(const PhantomConfig& config, std::uint64_t seed, std::size_t frame_count);

// F o G for an isometry G: stays inside the same model family.
TransformModel precompose_rigid(const TransformModel& f, const RigidTransform& g);

} // namespace regcore
