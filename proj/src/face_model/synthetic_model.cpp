// Copyright 2026 The lipfit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lipfit/face_model/synthetic_model.hpp"

#include "lipfit/core/archive.hpp"
#include "lipfit/core/error.hpp"
#include "lipfit/core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace lipfit {

namespace {

double smoothstep(double edge0, double edge1, double x) {
    const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

double gauss2(double u, double v, double cu, double cv, double su, double sv) {
    const double du = (u - cu) / su;
    const double dv = (v - cv) / sv;
    return std::exp(-0.5 * (du * du + dv * dv));
}

struct UV {
    double u;
    double v;
};

// Hand-authored 68-point layout in (u, v) surface coordinates; v grows upwards.
std::array<UV, kLandmarkCount> landmark_layout(double mouth_line, double row_step) {
    std::array<UV, kLandmarkCount> pts{};
    for (int k = 0; k <= 16; ++k) {
        const double t = std::numbers::pi * k / 16.0;
        pts[static_cast<std::size_t>(k)] = {-0.92 * std::cos(t), 0.25 - 1.1 * std::sin(t)};
    }
    const double brow_u[5] = {-0.70, -0.58, -0.45, -0.33, -0.20};
    const double brow_v[5] = {0.50, 0.56, 0.58, 0.56, 0.52};
    for (int i = 0; i < 5; ++i) {
        pts[static_cast<std::size_t>(17 + i)] = {brow_u[i], brow_v[i]};
        pts[static_cast<std::size_t>(26 - i)] = {-brow_u[i], brow_v[i]};
    }
    const double bridge_v[4] = {0.30, 0.20, 0.10, 0.0};
    for (int i = 0; i < 4; ++i) {
        pts[static_cast<std::size_t>(27 + i)] = {0.0, bridge_v[i]};
    }
    const double base_u[5] = {-0.17, -0.08, 0.0, 0.08, 0.17};
    for (int i = 0; i < 5; ++i) {
        pts[static_cast<std::size_t>(31 + i)] = {base_u[i], i == 2 ? -0.14 : -0.10};
    }
    // Left eye 36-41 clockwise from the outer corner; right eye 42-47 mirrored
    // starting at its inner corner.
    const UV left_eye[6] = {{-0.58, 0.30}, {-0.47, 0.38}, {-0.33, 0.38}, {-0.22, 0.30}, {-0.33, 0.22}, {-0.47, 0.22}};
    for (int i = 0; i < 6; ++i) {
        pts[static_cast<std::size_t>(36 + i)] = left_eye[i];
    }
    const int mirror[6] = {3, 2, 1, 0, 5, 4};
    for (int i = 0; i < 6; ++i) {
        const UV src = left_eye[mirror[i]];
        pts[static_cast<std::size_t>(42 + i)] = {-src.u, src.v};
    }
    // Mouth: the open slit lies between the rows just above and below mouth_line.
    const double upper_inner = mouth_line + 0.5 * row_step;
    const double lower_inner = mouth_line - 0.5 * row_step;
    const double upper_outer = upper_inner + row_step;
    const double lower_outer = lower_inner - row_step;
    pts[48] = {-0.33, upper_inner};
    const double outer_u[5] = {-0.2, -0.1, 0.0, 0.1, 0.2};
    for (int i = 0; i < 5; ++i) {
        pts[static_cast<std::size_t>(49 + i)] = {outer_u[i], upper_outer};
    }
    pts[54] = {0.33, upper_inner};
    for (int i = 0; i < 5; ++i) {
        pts[static_cast<std::size_t>(55 + i)] = {outer_u[4 - i], lower_outer};
    }
    pts[60] = {-0.25, upper_inner};
    pts[61] = {-0.083, upper_inner};
    pts[62] = {0.0, upper_inner};
    pts[63] = {0.083, upper_inner};
    pts[64] = {0.25, upper_inner};
    pts[65] = {0.083, lower_inner};
    pts[66] = {0.0, lower_inner};
    pts[67] = {-0.083, lower_inner};
    return pts;
}

Eigen::MatrixXd random_bump_basis(Rng& rng, const std::vector<UV>& uv, int columns, int focused, UV focus_lo,
                                  UV focus_hi, double focused_sigma_lo, double focused_sigma_hi, double amplitude) {
    const auto v = static_cast<Eigen::Index>(uv.size());
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(3 * v, columns);
    for (int j = 0; j < columns; ++j) {
        const bool is_focused = j < focused;
        const double amp = amplitude / (1.0 + j / 8.0);
        for (int bump = 0; bump < 3; ++bump) {
            const double cu = is_focused ? rng.uniform(focus_lo.u, focus_hi.u) : rng.uniform(-1.0, 1.0);
            const double cv = is_focused ? rng.uniform(focus_lo.v, focus_hi.v) : rng.uniform(-1.0, 1.0);
            const double sigma = is_focused ? rng.uniform(focused_sigma_lo, focused_sigma_hi) : rng.uniform(0.3, 0.7);
            Eigen::Vector3d dir(rng.normal(), rng.normal(), 1.5 * rng.normal());
            dir *= amp / std::max(dir.norm(), 1e-9);
            for (Eigen::Index i = 0; i < v; ++i) {
                const double g = gauss2(uv[static_cast<std::size_t>(i)].u, uv[static_cast<std::size_t>(i)].v, cu, cv,
                                        sigma, sigma);
                basis.block<3, 1>(3 * i, j) += g * dir;
            }
        }
    }
    return basis;
}

} // namespace

Eigen::VectorXd synthetic_default_camera() {
    Eigen::VectorXd c(3);
    c << 0.8, 0.0, 0.0;
    return c;
}

MorphableModel make_synthetic_model(const SyntheticModelOptions& options) {
    const int g = options.grid;
    if (g < 9) {
        throw ParameterError("make_synthetic_model: grid must be at least 9");
    }
    Rng rng(options.seed);
    const double step = 2.0 / (g - 1);
    const int upper_row = static_cast<int>(std::floor((1.0 - options.mouth_v) / step));
    const double mouth_line = 1.0 - (upper_row + 0.5) * step;
    const auto vid = [g](int row, int col) { return row * g + col; };
    const auto u_of = [step](int col) { return -1.0 + col * step; };
    const auto v_of = [step](int row) { return 1.0 - row * step; };

    const int n = g * g;
    std::vector<UV> uv(static_cast<std::size_t>(n));
    Eigen::VectorXd shape(3 * n);
    for (int r = 0; r < g; ++r) {
        for (int c = 0; c < g; ++c) {
            const double u = u_of(c);
            const double v = v_of(r);
            uv[static_cast<std::size_t>(vid(r, c))] = {u, v};
            double z = 0.5 * std::sqrt(std::max(0.05, 1.0 - 0.45 * u * u - 0.2 * v * v));
            z += 0.16 * gauss2(u, v, 0.0, 0.12, 0.07, 0.17);                 // nose ridge
            z += 0.03 * gauss2(u, v, 0.0, mouth_line, 0.22, 0.09);           // lips
            z -= 0.03 * (gauss2(u, v, -0.4, 0.3, 0.12, 0.08) + gauss2(u, v, 0.4, 0.3, 0.12, 0.08)); // sockets
            shape.segment<3>(3 * vid(r, c)) << 0.75 * u, 0.95 * v, z;
        }
    }

    // Inner-mouth vertices between the lips, one per interior slit column.
    std::vector<int> slit_cols;
    for (int c = 0; c < g; ++c) {
        if (std::abs(u_of(c)) <= options.mouth_half_width) {
            slit_cols.push_back(c);
        }
    }
    const bool cavity = slit_cols.size() >= 3;
    std::vector<int> inner(static_cast<std::size_t>(g), -1);
    if (cavity) {
        for (std::size_t i = 1; i + 1 < slit_cols.size(); ++i) {
            inner[static_cast<std::size_t>(slit_cols[i])] = n + static_cast<int>(i) - 1;
        }
    }
    const int n_inner = cavity ? static_cast<int>(slit_cols.size()) - 2 : 0;
    const int n_total = n + n_inner;
    uv.resize(static_cast<std::size_t>(n_total));
    shape.conservativeResize(3 * n_total);
    for (int c = 0; c < g; ++c) {
        const int m = inner[static_cast<std::size_t>(c)];
        if (m < 0) {
            continue;
        }
        const int up = vid(upper_row, c), lo = vid(upper_row + 1, c);
        uv[static_cast<std::size_t>(m)] = {u_of(c), mouth_line};
        shape.segment<3>(3 * m) = 0.5 * (shape.segment<3>(3 * up) + shape.segment<3>(3 * lo));
        shape[3 * m + 2] -= options.mouth_depth;
    }

    // Triangles wind counter-clockwise seen from +z (y up).
    std::vector<Face> faces;
    faces.reserve(static_cast<std::size_t>(2 * (g - 1) * (g - 1) + 2 * n_inner + 4));
    for (int r = 0; r + 1 < g; ++r) {
        for (int c = 0; c + 1 < g; ++c) {
            const bool slit = r == upper_row && std::abs(u_of(c)) <= options.mouth_half_width &&
                              std::abs(u_of(c + 1)) <= options.mouth_half_width;
            if (!slit) {
                faces.push_back({vid(r, c), vid(r + 1, c), vid(r, c + 1)});
                faces.push_back({vid(r, c + 1), vid(r + 1, c), vid(r + 1, c + 1)});
                continue;
            }
            if (!cavity) {
                continue;
            }
            const int ul = vid(r, c), ur = vid(r, c + 1), ll = vid(r + 1, c), lr = vid(r + 1, c + 1);
            const int ml = inner[static_cast<std::size_t>(c)], mr = inner[static_cast<std::size_t>(c + 1)];
            if (ml < 0) { // left mouth corner
                faces.push_back({ul, ll, mr});
                faces.push_back({ul, mr, ur});
                faces.push_back({ll, lr, mr});
            } else if (mr < 0) { // right mouth corner
                faces.push_back({ul, ml, ur});
                faces.push_back({ml, ll, lr});
                faces.push_back({ml, lr, ur});
            } else {
                faces.push_back({ul, ml, ur});
                faces.push_back({ur, ml, mr});
                faces.push_back({ml, ll, mr});
                faces.push_back({mr, ll, lr});
            }
        }
    }

    // Rows below the slit follow the jaw fully between the mouth corners, fading
    // laterally into a vertical ramp over the lower cheeks.
    Eigen::VectorXd jaw_weights = Eigen::VectorXd::Zero(n_total);
    for (int m = n; m < n_total; ++m) {
        jaw_weights[m] = 0.5;
    }
    for (int r = upper_row + 1; r < g; ++r) {
        for (int c = 0; c < g; ++c) {
            const double au = std::abs(u_of(c));
            const double lateral = 1.0 - smoothstep(options.mouth_half_width, options.mouth_half_width + 0.25, au);
            const double vertical = smoothstep(0.0, 0.5, mouth_line - v_of(r));
            jaw_weights[vid(r, c)] = std::clamp(lateral + (1.0 - lateral) * vertical, 0.0, 1.0);
        }
    }
    const Eigen::Vector3d jaw_pivot(0.0, 0.95 * mouth_line + 0.2, -0.35);

    std::array<int, kLandmarkCount> landmarks{};
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    const auto layout = landmark_layout(mouth_line, step);
    for (int k = 0; k < kLandmarkCount; ++k) {
        const UV target = layout[static_cast<std::size_t>(k)];
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (used[static_cast<std::size_t>(i)]) {
                continue;
            }
            const double du = uv[static_cast<std::size_t>(i)].u - target.u;
            const double dv = uv[static_cast<std::size_t>(i)].v - target.v;
            const double d = du * du + dv * dv;
            if (d < best_d - 1e-12) {
                best_d = d;
                best = i;
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        landmarks[static_cast<std::size_t>(k)] = best;
    }

    Eigen::MatrixXd identity = random_bump_basis(rng, uv, kIdentityDim, 0, {0, 0}, {0, 0}, 0, 0, 0.05);
    Eigen::MatrixXd expression =
        random_bump_basis(rng, uv, kExpressionDim, 25, {-0.35, mouth_line - 0.25}, {0.35, mouth_line + 0.2}, 0.08,
                          0.25, 0.04);

    AlbedoModel albedo;
    albedo.mean.resize(3 * n_total);
    const Eigen::Vector3d skin(0.78, 0.58, 0.48);
    const Eigen::Vector3d lips(0.62, 0.27, 0.28);
    const Eigen::Vector3d brow(0.30, 0.22, 0.18);
    const Eigen::Vector3d iris(0.20, 0.15, 0.12);
    const Eigen::Vector3d mouth_inside(0.12, 0.04, 0.05);
    for (int i = n; i < n_total; ++i) {
        albedo.mean.segment<3>(3 * i) = mouth_inside;
    }
    for (int i = 0; i < n; ++i) {
        const double u = uv[static_cast<std::size_t>(i)].u;
        const double v = uv[static_cast<std::size_t>(i)].v;
        Eigen::Vector3d col = skin;
        const double lip_w = smoothstep(1.0, 0.6, std::hypot(u / 0.36, (v - mouth_line) / 0.16));
        col = (1.0 - lip_w) * col + lip_w * lips;
        const double brow_w = std::max(gauss2(u, v, -0.45, 0.55, 0.15, 0.04), gauss2(u, v, 0.45, 0.55, 0.15, 0.04));
        col = (1.0 - brow_w) * col + brow_w * brow;
        const double eye_w = std::max(gauss2(u, v, -0.4, 0.3, 0.06, 0.05), gauss2(u, v, 0.4, 0.3, 0.06, 0.05));
        col = (1.0 - eye_w) * col + eye_w * iris;
        albedo.mean.segment<3>(3 * i) = col;
    }
    albedo.basis = Eigen::MatrixXd::Zero(3 * n_total, kAlbedoDim);
    for (int j = 0; j < kAlbedoDim; ++j) {
        const double cu = rng.uniform(-1.0, 1.0);
        const double cv = rng.uniform(-1.0, 1.0);
        const double sigma = rng.uniform(0.3, 0.8);
        const Eigen::Vector3d tint(rng.normal(), rng.normal(), rng.normal());
        const double amp = 0.03 / (1.0 + j / 10.0);
        for (int i = 0; i < n_total; ++i) {
            albedo.basis.block<3, 1>(3 * i, j) =
                amp * gauss2(uv[static_cast<std::size_t>(i)].u, uv[static_cast<std::size_t>(i)].v, cu, cv, sigma,
                             sigma) *
                tint;
        }
    }

    return MorphableModel(std::move(shape), std::move(faces), std::move(identity), std::move(expression),
                          std::move(jaw_weights), jaw_pivot, landmarks, std::move(albedo));
}

void save_model(const MorphableModel& model, const std::filesystem::path& path) {
    Archive ar("morphable_model", 1);
    const auto v = static_cast<std::int64_t>(model.vertex_count());
    ar.meta()["vertex_count"] = v;
    ar.meta()["face_count"] = model.faces().size();
    ar.meta()["identity_dim"] = model.identity_dim();
    ar.meta()["expression_dim"] = model.expression_dim();
    ar.meta()["albedo_dim"] = model.albedo_dim();
    ar.meta()["landmark_count"] = kLandmarkCount;
    ar.meta()["layout"] = "bases are 3V x n column-major; vertex-major xyz rows";

    auto to_vec = [](const auto& m) { return std::vector<double>(m.data(), m.data() + m.size()); };
    ar.put("template", {v, 3}, to_vec(model.template_shape()));
    std::vector<std::int64_t> faces;
    for (const auto& f : model.faces()) {
        faces.insert(faces.end(), f.begin(), f.end());
    }
    ar.put("faces", {static_cast<std::int64_t>(model.faces().size()), 3}, std::move(faces));
    ar.put("identity_basis", {3 * v, model.identity_dim()}, to_vec(model.identity_basis()));
    ar.put("expression_basis", {3 * v, model.expression_dim()}, to_vec(model.expression_basis()));
    ar.put("jaw_weights", {v}, to_vec(model.jaw_weights()));
    ar.put("jaw_pivot", {3}, to_vec(model.jaw_pivot()));
    ar.put("landmark_indices", {kLandmarkCount},
           std::vector<std::int64_t>(model.landmark_indices().begin(), model.landmark_indices().end()));
    ar.put("albedo_mean", {v, 3}, to_vec(model.albedo().mean));
    ar.put("albedo_basis", {3 * v, model.albedo_dim()}, to_vec(model.albedo().basis));
    ar.save(path);
}

MorphableModel load_model(const std::filesystem::path& path) {
    const Archive ar = Archive::load(path, "morphable_model");
    if (ar.version() != 1) {
        throw DataError("model file '" + path.string() + "': unsupported version " + std::to_string(ar.version()));
    }
    const auto v = ar.meta().at("vertex_count").get<Eigen::Index>();
    const auto nid = ar.meta().at("identity_dim").get<Eigen::Index>();
    const auto nexp = ar.meta().at("expression_dim").get<Eigen::Index>();
    const auto nalb = ar.meta().at("albedo_dim").get<Eigen::Index>();
    if (ar.meta().value("landmark_count", 0) != kLandmarkCount) {
        throw DataError("model file: landmark_count must be 68");
    }
    auto vec = [&](const std::string& name, Eigen::Index expected) {
        const auto& a = ar.f64(name);
        if (static_cast<Eigen::Index>(a.values.size()) != expected) {
            throw DataError("model file: array '" + name + "' has " + std::to_string(a.values.size()) +
                            " values, header implies " + std::to_string(expected));
        }
        return Eigen::Map<const Eigen::VectorXd>(a.values.data(), expected).eval();
    };
    auto mat = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
        const auto& a = ar.f64(name);
        if (static_cast<Eigen::Index>(a.values.size()) != rows * cols) {
            throw DataError("model file: array '" + name + "' does not match the header dimensions");
        }
        return Eigen::Map<const Eigen::MatrixXd>(a.values.data(), rows, cols).eval();
    };
    std::vector<Face> faces;
    const auto& fa = ar.i64("faces");
    if (fa.values.size() % 3 != 0) {
        throw DataError("model file: face array length is not a multiple of 3");
    }
    for (std::size_t i = 0; i < fa.values.size(); i += 3) {
        faces.push_back({static_cast<int>(fa.values[i]), static_cast<int>(fa.values[i + 1]),
                         static_cast<int>(fa.values[i + 2])});
    }
    const auto& li = ar.i64("landmark_indices");
    if (li.values.size() != kLandmarkCount) {
        throw DataError("model file: expected 68 landmark indices");
    }
    std::array<int, kLandmarkCount> landmarks{};
    std::transform(li.values.begin(), li.values.end(), landmarks.begin(),
                   [](std::int64_t x) { return static_cast<int>(x); });
    AlbedoModel albedo{vec("albedo_mean", 3 * v), mat("albedo_basis", 3 * v, nalb)};
    try {
        return MorphableModel(vec("template", 3 * v), std::move(faces), mat("identity_basis", 3 * v, nid),
                              mat("expression_basis", 3 * v, nexp), vec("jaw_weights", v),
                              Eigen::Vector3d(vec("jaw_pivot", 3)), landmarks, std::move(albedo));
    } catch (const ParameterError& e) {
        throw DataError(std::string("model file '") + path.string() + "' is invalid: " + e.what());
    }
}

} // namespace lipfit
