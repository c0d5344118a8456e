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

#include "lipfit/renderer/renderer.hpp"

#include "lipfit/core/error.hpp"
#include "lipfit/renderer/sh.hpp"

#include <algorithm>

namespace lipfit {

namespace {

// d/dP, d/dQ, d/dR of (Qx - Px)(Ry - Py) - (Qy - Py)(Rx - Px), scaled by g.
void edge_backward(const double* p, const double* q, const double* r, double g, double* gp, double* gq, double* gr) {
    gp[0] += g * (q[1] - r[1]);
    gp[1] += g * (r[0] - q[0]);
    gq[0] += g * (r[1] - p[1]);
    gq[1] += g * (p[0] - r[0]);
    if (gr != nullptr) {
        gr[0] += g * (p[1] - q[1]);
        gr[1] += g * (q[0] - p[0]);
    }
}

double edge(const double* p, const double* q, const double* r) {
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
}

} // namespace

Points2 to_pixels(const Points2& normalized, int width, int height) {
    Points2 out(normalized.rows(), 2);
    for (Eigen::Index i = 0; i < normalized.rows(); ++i) {
        out(i, 0) = (normalized(i, 0) + 1.0) * 0.5 * width - 0.5;
        out(i, 1) = (1.0 - normalized(i, 1)) * 0.5 * height - 0.5;
    }
    return out;
}

Points2 to_normalized(const Points2& pixels, int width, int height) {
    Points2 out(pixels.rows(), 2);
    for (Eigen::Index i = 0; i < pixels.rows(); ++i) {
        out(i, 0) = (pixels(i, 0) + 0.5) * 2.0 / width - 1.0;
        out(i, 1) = 1.0 - (pixels(i, 1) + 0.5) * 2.0 / height;
    }
    return out;
}

Renderer::Renderer(int width, int height) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
        throw ParameterError("Renderer: resolution must be positive");
    }
}

const RenderedFrame& Renderer::render(const Mesh& mesh, const Eigen::VectorXd& vertex_albedo,
                                      const Eigen::VectorXd& lighting, const Eigen::VectorXd& camera) {
    const auto v = mesh.vertices.rows();
    if (vertex_albedo.size() != 3 * v) {
        throw ParameterError("render: vertex albedo must have 3V entries");
    }
    if (lighting.size() != kLightingDim) {
        throw ParameterError("render: lighting must have 27 coefficients");
    }
    if (mesh.normals.rows() != v || !mesh.faces) {
        throw ParameterError("render: mesh is missing normals or faces");
    }
    const Points2 projected = project(mesh.vertices, camera);
    mesh_ = mesh;
    albedo_ = vertex_albedo;
    lighting_ = lighting;
    camera_ = camera;

    screen_.resize(static_cast<std::size_t>(2 * v));
    std::vector<double> depth(static_cast<std::size_t>(v));
    const Points2 px = to_pixels(projected, width_, height_);
    for (Eigen::Index i = 0; i < v; ++i) {
        screen_[static_cast<std::size_t>(2 * i)] = px(i, 0);
        screen_[static_cast<std::size_t>(2 * i + 1)] = px(i, 1);
        depth[static_cast<std::size_t>(i)] = mesh.vertices(i, 2);
    }
    raster_ = kernels::rasterize(screen_, depth, *mesh.faces, width_, height_);

    shades_.resize(v, 3);
    colors_.resize(v, 3);
    for (Eigen::Index i = 0; i < v; ++i) {
        const Eigen::Vector3d n = mesh.normals.row(i).transpose();
        const auto y = sh_basis(n);
        for (int c = 0; c < 3; ++c) {
            double gain = 0.0;
            for (int k = 0; k < kShBands; ++k) {
                gain += y[static_cast<std::size_t>(k)] * lighting[3 * k + c];
            }
            shades_(i, c) = gain;
            colors_(i, c) = vertex_albedo[3 * i + c] * gain;
        }
    }

    frame_.image = Tensor3(3, height_, width_);
    frame_.radiance = Tensor3(3, height_, width_);
    frame_.mask = Tensor3(1, height_, width_);
    const auto& faces = *mesh.faces;
    const std::size_t plane = frame_.image.plane();
    for (std::size_t p = 0; p < plane; ++p) {
        const int t = raster_.triangle[p];
        if (t < 0) {
            continue;
        }
        frame_.mask.data[p] = 1.0;
        const Face& f = faces[static_cast<std::size_t>(t)];
        const auto& b = raster_.barycentric[p];
        for (int c = 0; c < 3; ++c) {
            const double r = b[0] * colors_(f[0], c) + b[1] * colors_(f[1], c) + b[2] * colors_(f[2], c);
            frame_.radiance.data[c * plane + p] = r;
            frame_.image.data[c * plane + p] = std::clamp(r, 0.0, 1.0);
        }
    }
    return frame_;
}

RenderGradient Renderer::backward(const Tensor3& grad_image) const {
    if (grad_image.channels != 3 || grad_image.height != height_ || grad_image.width != width_) {
        throw ParameterError("Renderer::backward: gradient shape does not match the last render");
    }
    const auto v = mesh_.vertices.rows();
    const auto& faces = *mesh_.faces;
    Eigen::MatrixXd grad_colors = Eigen::MatrixXd::Zero(v, 3);
    std::vector<double> grad_screen(static_cast<std::size_t>(2 * v), 0.0);
    const std::size_t plane = frame_.image.plane();
    for (std::size_t p = 0; p < plane; ++p) {
        const int t = raster_.triangle[p];
        if (t < 0) {
            continue;
        }
        const Face& f = faces[static_cast<std::size_t>(t)];
        const auto& b = raster_.barycentric[p];
        double gw[3] = {0.0, 0.0, 0.0};
        bool any = false;
        for (int c = 0; c < 3; ++c) {
            const double r = frame_.radiance.data[c * plane + p];
            const double g = grad_image.data[c * plane + p];
            if (g == 0.0 || r < 0.0 || r > 1.0) {
                continue;
            }
            any = true;
            for (int k = 0; k < 3; ++k) {
                grad_colors(f[static_cast<std::size_t>(k)], c) += g * b[static_cast<std::size_t>(k)];
                gw[k] += g * colors_(f[static_cast<std::size_t>(k)], c);
            }
        }
        if (!any) {
            continue;
        }
        const double* pa = &screen_[static_cast<std::size_t>(2 * f[0])];
        const double* pb = &screen_[static_cast<std::size_t>(2 * f[1])];
        const double* pc = &screen_[static_cast<std::size_t>(2 * f[2])];
        const double pix[2] = {static_cast<double>(p % static_cast<std::size_t>(width_)),
                               static_cast<double>(p / static_cast<std::size_t>(width_))};
        const double area = edge(pa, pb, pc);
        // w_k = e_k / area with e_0 = edge(b, c, p), e_1 = edge(c, a, p), e_2 = edge(a, b, p).
        double ga[2] = {0, 0}, gb[2] = {0, 0}, gc[2] = {0, 0};
        edge_backward(pb, pc, pix, gw[0] / area, gb, gc, nullptr);
        edge_backward(pc, pa, pix, gw[1] / area, gc, ga, nullptr);
        edge_backward(pa, pb, pix, gw[2] / area, ga, gb, nullptr);
        const double g_area = -(gw[0] * b[0] + gw[1] * b[1] + gw[2] * b[2]) / area;
        edge_backward(pa, pb, pc, g_area, ga, gb, gc);
        for (int d = 0; d < 2; ++d) {
            grad_screen[static_cast<std::size_t>(2 * f[0] + d)] += ga[d];
            grad_screen[static_cast<std::size_t>(2 * f[1] + d)] += gb[d];
            grad_screen[static_cast<std::size_t>(2 * f[2] + d)] += gc[d];
        }
    }

    RenderGradient out;
    out.vertices = Vertices::Zero(v, 3);
    out.vertex_albedo = Eigen::VectorXd::Zero(3 * v);
    out.lighting = Eigen::VectorXd::Zero(kLightingDim);
    out.camera = Eigen::VectorXd::Zero(kCameraDim);
    Vertices grad_normals = Vertices::Zero(v, 3);
    const double s = camera_[0];
    const double half_w = 0.5 * width_;
    const double half_h = 0.5 * height_;
    for (Eigen::Index i = 0; i < v; ++i) {
        Eigen::Vector3d grad_shade;
        for (int c = 0; c < 3; ++c) {
            out.vertex_albedo[3 * i + c] = grad_colors(i, c) * shades_(i, c);
            grad_shade[c] = grad_colors(i, c) * albedo_[3 * i + c];
        }
        if (grad_shade.squaredNorm() > 0.0) {
            const Eigen::Vector3d n = mesh_.normals.row(i).transpose();
            const auto y = sh_basis(n);
            const auto jac = sh_basis_jacobian(n);
            Eigen::Vector3d gn = Eigen::Vector3d::Zero();
            for (int k = 0; k < kShBands; ++k) {
                double coeff = 0.0;
                for (int c = 0; c < 3; ++c) {
                    out.lighting[3 * k + c] += y[static_cast<std::size_t>(k)] * grad_shade[c];
                    coeff += lighting_[3 * k + c] * grad_shade[c];
                }
                gn += coeff * jac.row(k).transpose();
            }
            grad_normals.row(i) = gn.transpose();
        }
        // Screen position -> normalised projection -> vertex / camera.
        const double gx = grad_screen[static_cast<std::size_t>(2 * i)] * half_w;
        const double gy = -grad_screen[static_cast<std::size_t>(2 * i + 1)] * half_h;
        out.vertices(i, 0) += s * gx;
        out.vertices(i, 1) += s * gy;
        out.camera[0] += gx * mesh_.vertices(i, 0) + gy * mesh_.vertices(i, 1);
        out.camera[1] += gx;
        out.camera[2] += gy;
    }
    out.vertices += vertex_normals_backward(mesh_.vertices, faces, grad_normals);
    return out;
}

const RenderedFrame& Renderer::render(const MorphableModel& model, const FaceParams& params) {
    const Mesh mesh = decode(model, params);
    return render(mesh, model.albedo_colors(params.albedo), params.lighting, params.camera);
}

FaceParams Renderer::backward(const MorphableModel& model, const FaceParams& params, const Tensor3& grad_image) const {
    const RenderGradient g = backward(grad_image);
    FaceParams out = decode_vertices_backward(model, params, g.vertices);
    out.albedo = model.albedo().basis.transpose() * g.vertex_albedo;
    out.lighting = g.lighting;
    out.camera = g.camera;
    return out;
}

} // namespace lipfit
