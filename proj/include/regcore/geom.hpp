#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace regcore {

// A 2D point in normalized image coordinates. x is horizontal (columns), y is
// vertical (rows); [-1, 1] spans the image extent with pixel-center alignment.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

Point2 make_point(double x, double y); // throws InvalidArgument when not finite

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }

double distance(Point2 a, Point2 b);
double squared_distance(Point2 a, Point2 b);

// Pixel-center convention: pixel (col, row) of a width x height image.
Point2 pixel_to_normalized(double col, double row, std::size_t width, std::size_t height);
// Inverse of pixel_to_normalized; returns continuous (col, row).
Point2 normalized_to_pixel(Point2 p, std::size_t width, std::size_t height);

// Ordered, index-matched landmark list with at least three finite points.
class LandmarkSet {
public:
    static constexpr std::size_t min_size = 3;

    explicit LandmarkSet(std::vector<Point2> points);

    std::size_t size() const { return points_.size(); }
    const Point2& operator[](std::size_t i) const { return points_[i]; }
    std::span<const Point2> points() const { return points_; }
    auto begin() const { return points_.begin(); }
    auto end() const { return points_.end(); }

    Point2 centroid() const;

    // M x 2 matrix, row i = (x_i, y_i).
    Eigen::MatrixX2d as_matrix() const;

    friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;

private:
    std::vector<Point2> points_;
};

enum class KernelVariant {
    StandardRLogR, // r^2 ln r, the 2D biharmonic Green's function
    PaperLiteral,  // psi(s) = s^2 ln s composed with s = r^2, i.e. r^4 ln r^2
};

class RigidTransform {
public:
    RigidTransform(); // identity
    RigidTransform(const Eigen::Matrix2d& rotation, const Eigen::Vector2d& translation);

    static RigidTransform from_angle(double radians, const Eigen::Vector2d& translation = Eigen::Vector2d::Zero());

    const Eigen::Matrix2d& rotation() const { return rotation_; }
    const Eigen::Vector2d& translation() const { return translation_; }
    double angle() const;

    Point2 apply(Point2 p) const;
    RigidTransform inverse() const;

private:
    Eigen::Matrix2d rotation_;
    Eigen::Vector2d translation_;
};

// Acts on homogeneous coordinates: T(p) = matrix * [x, y, 1]^T.
class AffineTransform {
public:
    using Matrix = Eigen::Matrix<double, 2, 3>;

    AffineTransform(); // identity
    explicit AffineTransform(const Matrix& matrix);

    static AffineTransform from_rigid(const RigidTransform& rigid);

    const Matrix& matrix() const { return matrix_; }
    Eigen::Matrix2d linear() const { return matrix_.leftCols<2>(); }
    Eigen::Vector2d offset() const { return matrix_.col(2); }

    Point2 apply(Point2 p) const;
    AffineTransform inverse() const; // throws DegenerateConfiguration when singular
    // (this o other)(p) = this(other(p))
    AffineTransform compose(const AffineTransform& other) const;

private:
    Matrix matrix_;
};

double tps_kernel(double r2, KernelVariant variant);

// T(p) = affine * [p; 1] + sum_i w_i * kernel(|c_i - p|^2)
class TpsTransform {
public:
    TpsTransform(const AffineTransform::Matrix& affine_part, Eigen::MatrixX2d weights,
                 LandmarkSet control_points, double lambda,
                 KernelVariant kernel = KernelVariant::StandardRLogR);

    const AffineTransform::Matrix& affine_part() const { return affine_; }
    const Eigen::MatrixX2d& weights() const { return weights_; }
    const LandmarkSet& control_points() const { return control_points_; }
    double lambda() const { return lambda_; }
    KernelVariant kernel() const { return kernel_; }

    Point2 apply(Point2 p) const;

private:
    AffineTransform::Matrix affine_;
    Eigen::MatrixX2d weights_;
    LandmarkSet control_points_;
    double lambda_;
    KernelVariant kernel_;
};

using TransformModel = std::variant<RigidTransform, AffineTransform, TpsTransform>;

enum class ModelKind { Rigid, Affine, Tps };

ModelKind kind_of(const TransformModel& t);
const char* to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name); // "rigid" | "affine" | "tps"
const char* to_string(KernelVariant variant);
KernelVariant parse_kernel_variant(std::string_view name); // "standard" | "paper"

Point2 apply(const TransformModel& t, Point2 p);
LandmarkSet apply_set(const TransformModel& t, const LandmarkSet& pts);
std::vector<Point2> apply_points(const TransformModel& t, std::span<const Point2> pts);

} // namespace regcore
