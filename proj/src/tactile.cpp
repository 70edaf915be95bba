#include "tacsim/tactile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace tacsim {

double MarkerField::max_norm() const {
    double m = 0.0;
    for (const auto& v : u) m = std::max(m, v.norm());
    return m;
}

VecX MarkerField::flatten() const {
    VecX out(2 * u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out.segment<2>(2 * i) = u[i];
    return out;
}

MarkerMapping map_markers(const std::vector<Vec3>& marker_rest, const std::vector<int>& candidates,
                          const std::vector<Vec3>& rest, int k, const Mat3& sensor_frame) {
    if (k < 1) throw InvalidArgument("marker mapping: k must be >= 1, got " + std::to_string(k));
    if (static_cast<int>(candidates.size()) < k) {
        throw InvalidArgument("marker mapping: " + std::to_string(candidates.size()) +
                              " sensing-face nodes, fewer than k = " + std::to_string(k));
    }
    double scale = 0.0;
    for (int c : candidates) scale = std::max(scale, rest.at(static_cast<std::size_t>(c)).cwiseAbs().maxCoeff());
    const double hit_tol = 1e-12 * std::max(scale, 1e-300);

    MarkerMapping map;
    map.marker_rest = marker_rest;
    map.sensor_frame = sensor_frame;
    std::vector<std::pair<double, int>> dist(candidates.size());
    for (const auto& m : marker_rest) {
        for (std::size_t i = 0; i < candidates.size(); ++i)
            dist[i] = {(rest[static_cast<std::size_t>(candidates[i])] - m).norm(), candidates[i]};
        std::sort(dist.begin(), dist.end());
        // Nodes tied with the k-th nearest are all kept so the weights respect
        // mesh symmetry instead of depending on node numbering.
        std::size_t count = static_cast<std::size_t>(k);
        const double kth = dist[count - 1].first;
        while (count < dist.size() && dist[count].first <= kth * (1.0 + 1e-9)) ++count;
        std::vector<int> nb;
        std::vector<double> w;
        if (dist[0].first <= hit_tol) {
            nb = {dist[0].second};
            w = {1.0};
        } else {
            double sum = 0.0;
            for (std::size_t i = 0; i < count; ++i) {
                nb.push_back(dist[i].second);
                w.push_back(1.0 / dist[i].first);
                sum += w.back();
            }
            for (auto& wi : w) wi /= sum;
        }
        map.neighbors.push_back(std::move(nb));
        map.weights.push_back(std::move(w));
    }
    return map;
}

MarkerMapping init_marker_mapping(const SurfaceMesh& surface, const std::vector<Vec3>& rest, int k) {
    if (surface.source_ids.size() != surface.vertices.size())
        throw InvalidArgument("marker mapping: surface has no volume-node correspondence");
    if (surface.vertices.empty()) throw InvalidArgument("marker mapping: empty surface");
    Vec3 lo = rest.at(static_cast<std::size_t>(surface.source_ids[0])), hi = lo;
    for (int s : surface.source_ids) {
        lo = lo.cwiseMin(rest.at(static_cast<std::size_t>(s)));
        hi = hi.cwiseMax(rest.at(static_cast<std::size_t>(s)));
    }
    const double tol = 1e-9 * std::max((hi - lo).maxCoeff(), 1e-300);
    std::vector<int> top;
    Vec3 flo = Vec3::Constant(std::numeric_limits<double>::infinity()), fhi = -flo;
    for (int s : surface.source_ids) {
        const Vec3& p = rest[static_cast<std::size_t>(s)];
        if (p.z() < hi.z() - tol) continue;
        top.push_back(s);
        flo = flo.cwiseMin(p);
        fhi = fhi.cwiseMax(p);
    }
    std::sort(top.begin(), top.end());
    top.erase(std::unique(top.begin(), top.end()), top.end());

    // Columns run along the long axis of the face, rows along the short one.
    const bool x_long = (fhi.x() - flo.x()) >= (fhi.y() - flo.y());
    Mat3 frame;
    if (x_long) frame << 1, 0, 0, 0, 1, 0, 0, 0, 1;
    else frame << 0, 1, 0, -1, 0, 0, 0, 0, 1;
    const int long_ax = x_long ? 0 : 1, short_ax = x_long ? 1 : 0;
    const double dl = (fhi[long_ax] - flo[long_ax]) / (kMarkerCols + 1);
    const double ds = (fhi[short_ax] - flo[short_ax]) / (kMarkerRows + 1);

    std::vector<Vec3> markers;
    for (int r = 0; r < kMarkerRows; ++r) {
        for (int c = 0; c < kMarkerCols; ++c) {
            Vec3 m;
            m[long_ax] = flo[long_ax] + dl * (c + 1);
            // row index increases along the sensor row direction
            m[short_ax] = x_long ? flo[short_ax] + ds * (r + 1) : fhi[short_ax] - ds * (r + 1);
            m.z() = hi.z();
            markers.push_back(m);
        }
    }
    return map_markers(markers, top, rest, k, frame);
}

namespace {

Vec3 marker_disp3(const MarkerMapping& map, std::size_t m, const VecX& x, const VecX& rest) {
    Vec3 d = Vec3::Zero();
    for (std::size_t i = 0; i < map.neighbors[m].size(); ++i) {
        const int n = map.neighbors[m][i];
        d += map.weights[m][i] * (vertex(x, n) - vertex(rest, n));
    }
    return map.sensor_frame * d;
}

} // namespace

MarkerField marker_displacements(const MarkerMapping& map, const VecX& x, const VecX& rest) {
    MarkerField f;
    f.u.resize(map.neighbors.size());
    for (std::size_t m = 0; m < map.neighbors.size(); ++m) f.u[m] = marker_disp3(map, m, x, rest).head<2>();
    return f;
}

std::vector<double> marker_normal_displacements(const MarkerMapping& map, const VecX& x, const VecX& rest) {
    std::vector<double> out(map.neighbors.size());
    for (std::size_t m = 0; m < map.neighbors.size(); ++m) out[m] = marker_disp3(map, m, x, rest).z();
    return out;
}

double frame_sq_error(const MarkerField& a, const MarkerField& b) {
    if (a.u.size() != b.u.size())
        throw InvalidArgument("marker fields differ in size: " + std::to_string(a.u.size()) + " vs " +
                              std::to_string(b.u.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.u.size(); ++i) s += (a.u[i] - b.u[i]).squaredNorm();
    return s;
}

double field_mse(const std::vector<FieldSequence>& a, const std::vector<FieldSequence>& b) {
    if (a.size() != b.size() || a.empty())
        throw InvalidArgument("field_mse: sequence counts differ (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    const std::size_t K = a[0].size();
    double s = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        if (a[n].size() != K || b[n].size() != K || K == 0)
            throw InvalidArgument("field_mse: frame counts differ in sequence " + std::to_string(n));
        for (std::size_t k = 0; k < K; ++k) s += frame_sq_error(a[n][k], b[n][k]);
    }
    return s / static_cast<double>(K * a.size());
}

double field_mse(const FieldSequence& a, const FieldSequence& b) {
    return field_mse(std::vector<FieldSequence>{a}, std::vector<FieldSequence>{b});
}

FrameMatch closest_frame_match(const FieldSequence& sim, const FieldSequence& real) {
    if (sim.empty() || real.empty()) throw InvalidArgument("closest_frame_match: empty sequence");
    FrameMatch fm;
    double total = 0.0;
    for (const auto& r : real) {
        int best = 0;
        double best_err = frame_sq_error(sim[0], r);
        for (std::size_t i = 1; i < sim.size(); ++i) {
            const double e = frame_sq_error(sim[i], r);
            if (e < best_err) {
                best_err = e;
                best = static_cast<int>(i);
            }
        }
        fm.pairing.push_back(best);
        total += best_err;
    }
    fm.mse = total / static_cast<double>(real.size());
    return fm;
}

double field_cosine(const MarkerField& a, const MarkerField& b) {
    const VecX fa = a.flatten(), fb = b.flatten();
    const double na = fa.norm(), nb = fb.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return fa.dot(fb) / (na * nb);
}

void write_field_csv(std::ostream& os, const FieldSequence& seq, const std::optional<std::string>& model) {
    os << (model ? "model," : "") << "frame,row,col,ux,uy\n";
    char buf[96];
    for (const auto& f : seq) {
        for (int r = 0; r < kMarkerRows; ++r) {
            for (int c = 0; c < kMarkerCols; ++c) {
                const Vec2& u = f.at(r, c);
                std::snprintf(buf, sizeof buf, "%d,%d,%d,%.9g,%.9g\n", f.frame_id, r, c, u.x(), u.y());
                if (model) os << *model << ',';
                os << buf;
            }
        }
    }
}

FieldSequence read_field_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw InvalidArgument("marker CSV: empty input");
    const bool has_model = line.rfind("model,", 0) == 0;
    if (line != (has_model ? "model,frame,row,col,ux,uy" : "frame,row,col,ux,uy"))
        throw InvalidArgument("marker CSV: unexpected header '" + line + "'");
    std::map<int, MarkerField> frames;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        if (has_model && !cols.empty()) cols.erase(cols.begin());
        if (cols.size() != 5) throw InvalidArgument("marker CSV: line " + std::to_string(lineno) + " malformed");
        try {
            const int fr = std::stoi(cols[0]), r = std::stoi(cols[1]), c = std::stoi(cols[2]);
            if (r < 0 || r >= kMarkerRows || c < 0 || c >= kMarkerCols)
                throw InvalidArgument("marker CSV: line " + std::to_string(lineno) + " index out of range");
            auto& f = frames[fr];
            f.frame_id = fr;
            f.at(r, c) = Vec2(std::stod(cols[3]), std::stod(cols[4]));
        } catch (const std::logic_error& e) {
            if (dynamic_cast<const InvalidArgument*>(&e)) throw;
            throw InvalidArgument("marker CSV: line " + std::to_string(lineno) + " not numeric");
        }
    }
    FieldSequence seq;
    for (auto& [id, f] : frames) seq.push_back(std::move(f));
    return seq;
}

} // namespace tacsim
