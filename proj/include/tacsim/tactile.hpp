#ifndef TACSIM_TACTILE_HPP
#define TACSIM_TACTILE_HPP

#include "tacsim/geometry.hpp"

#include <iosfwd>
#include <optional>

namespace tacsim {

inline constexpr int kMarkerRows = 7; ///< along the pad's short axis
inline constexpr int kMarkerCols = 9; ///< along the pad's long axis
inline constexpr int kMarkerCount = kMarkerRows * kMarkerCols;

/// Markers on the sensing face and their k-nearest-node interpolation.
struct MarkerMapping {
    std::vector<Vec3> marker_rest;              ///< row-major, 7 x 9
    std::vector<std::vector<int>> neighbors;    ///< volume-mesh node indices
    std::vector<std::vector<double>> weights;   ///< non-negative, sum to 1
    /// Rows: column direction, row direction, outward normal. Maps world
    /// vectors into sensor coordinates.
    Mat3 sensor_frame = Mat3::Identity();
};

struct MarkerField {
    std::vector<Vec2> u = std::vector<Vec2>(kMarkerCount, Vec2::Zero()); ///< row-major
    int frame_id = 0;
    double timestamp = 0.0;

    Vec2& at(int row, int col) { return u[static_cast<std::size_t>(row * kMarkerCols + col)]; }
    const Vec2& at(int row, int col) const { return u[static_cast<std::size_t>(row * kMarkerCols + col)]; }
    double max_norm() const;
    VecX flatten() const;
};

using FieldSequence = std::vector<MarkerField>;

/// Lattice on the top (max-z) face of `surface`, inset by one lattice cell
/// from the face boundary, with the k nearest top-face nodes per marker (plus any tied with the k-th).
/// `rest` holds the volume-mesh rest positions that surface.source_ids index.
MarkerMapping init_marker_mapping(const SurfaceMesh& surface, const std::vector<Vec3>& rest, int k = 4);

/// k-NN inverse-distance mapping for explicit marker positions over the
/// candidate nodes. An exact hit gets weight 1 on that node alone; nodes tied
/// with the k-th nearest (relative 1e-9) are all included.
MarkerMapping map_markers(const std::vector<Vec3>& marker_rest, const std::vector<int>& candidates,
                          const std::vector<Vec3>& rest, int k, const Mat3& sensor_frame);

/// Per marker: sum_i w_i (x_i - rest_i) projected onto the sensor plane.
MarkerField marker_displacements(const MarkerMapping& map, const VecX& x, const VecX& rest);
/// Normal (out-of-plane) marker displacement, kept for diagnostics.
std::vector<double> marker_normal_displacements(const MarkerMapping& map, const VecX& x, const VecX& rest);

/// Squared Frobenius distance between two fields.
double frame_sq_error(const MarkerField& a, const MarkerField& b);

/// (1 / (K N)) sum over sequences and frames of the per-frame squared error.
double field_mse(const std::vector<FieldSequence>& a, const std::vector<FieldSequence>& b);
double field_mse(const FieldSequence& a, const FieldSequence& b);

struct FrameMatch {
    std::vector<int> pairing; ///< pairing[j] = sim frame matched to real frame j
    double mse = 0.0;
};

/// For each real frame, the sim frame of least squared error (earliest on ties).
FrameMatch closest_frame_match(const FieldSequence& sim, const FieldSequence& real);

/// Cosine similarity of flattened fields (0 when either is zero).
double field_cosine(const MarkerField& a, const MarkerField& b);

/// CSV with header `frame,row,col,ux,uy` (or `model,frame,...` when a model
/// name is given), 9 significant digits.
void write_field_csv(std::ostream& os, const FieldSequence& seq, const std::optional<std::string>& model = {});
FieldSequence read_field_csv(std::istream& is);

} // namespace tacsim

#endif
