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

#include "lipfit/training/pipeline.hpp"

#include "lipfit/core/error.hpp"
#include "lipfit/core/image_ops.hpp"
#include "lipfit/renderer/renderer.hpp"

#include <memory>

namespace lipfit {

namespace {

std::vector<Points2> mouths(const std::vector<Points2>& landmarks) {
    std::vector<Points2> out;
    out.reserve(landmarks.size());
    const IndexRange r = landmark_range(LandmarkRegion::Mouth);
    for (const auto& p : landmarks) {
        out.emplace_back(p.middleRows(r.begin, r.size()));
    }
    return out;
}

} // namespace

Pipeline::Pipeline(const MorphableModel& model, const CoarseEstimator& coarse, const FeatureExtractor& lip,
                   const FeatureExtractor& emotion, PipelineOptions options)
    : model_(model), coarse_(coarse), lip_(lip), emotion_(emotion), options_(options) {
    if (options_.image_size < 1 || !(options_.crop_scale > 0.0)) {
        throw ParameterError("pipeline: image size and crop scale must be positive");
    }
    if (lip_.spec().channels != 1 || lip_.spec().height != lip_.spec().width) {
        throw ParameterError("pipeline: lip extractor must take square grayscale crops");
    }
    static_cast<void>(emotion_factor()); // rejects incompatible image sizes up front
}

int Pipeline::emotion_factor() const {
    const ExtractorSpec& s = emotion_.spec();
    if (s.channels != 3 || s.height != s.width || options_.image_size % s.height != 0) {
        throw ParameterError("pipeline: image size " + std::to_string(options_.image_size) +
                             " must be a multiple of the emotion extractor input " + std::to_string(s.height));
    }
    return options_.image_size / s.height;
}

WindowTargets Pipeline::prepare(const Window& window) const {
    return prepare(window, CoarseEstimate{});
}

WindowTargets Pipeline::prepare(const Window& window, CoarseEstimate coarse) const {
    if (window.size() == 0 || window.landmarks.size() != window.frames.size()) {
        throw ParameterError("pipeline: window must hold matching non-empty frames and landmarks");
    }
    const int n = options_.image_size;
    WindowTargets t;
    for (std::size_t k = 0; k < window.frames.size(); ++k) {
        const Tensor3& f = window.frames[k];
        Points2 lm = window.landmarks[k];
        if (lm.rows() != kLandmarkCount) {
            throw DataError("pipeline: frame " + std::to_string(k) + " does not have 68 landmarks");
        }
        if (f.height != n || f.width != n) {
            lm.col(0) = ((lm.col(0).array() + 0.5) * (static_cast<double>(n) / f.width) - 0.5).matrix();
            lm.col(1) = ((lm.col(1).array() + 0.5) * (static_cast<double>(n) / f.height) - 0.5).matrix();
            t.frames.push_back(resize(f, n, n));
        } else {
            t.frames.push_back(f);
        }
        t.landmarks_normalized.push_back(to_normalized(lm, n, n));
        t.landmarks.push_back(std::move(lm));
    }
    if (coarse.frames.empty()) {
        t.coarse = estimate_sequence(coarse_, t.frames);
    } else if (coarse.size() != window.size()) {
        throw ParameterError("pipeline: coarse estimate length differs from the window");
    } else {
        t.coarse = std::move(coarse);
    }

    const std::vector<Points2> m = mouths(t.landmarks);
    const int crop = lip_.spec().height;
    std::vector<Tensor3> crops, pooled;
    const CropWindow shared = options_.sequence_crop ? sequence_window(m, options_.crop_scale) : CropWindow{};
    for (std::size_t k = 0; k < t.frames.size(); ++k) {
        const CropWindow w = options_.sequence_crop ? shared : mouth_window(m[k], options_.crop_scale);
        crops.push_back(crop_with_window(t.frames[k], w, crop).image);
        pooled.push_back(emotion_factor() == 1 ? t.frames[k] : average_pool(t.frames[k], emotion_factor()));
    }
    t.lip = lip_.extract(crops);
    t.emotion = emotion_.extract(pooled);
    return t;
}

std::vector<FaceParams> Pipeline::compose(const WindowTargets& targets, const Eigen::MatrixXd& psi,
                                          const Eigen::MatrixXd& jaw) const {
    const int k = targets.size();
    if (psi.rows() != k || jaw.rows() != k || psi.cols() != kExpressionDim || jaw.cols() != kPoseDim) {
        throw ParameterError("pipeline: expected " + std::to_string(k) + "x50 expression and " + std::to_string(k) +
                             "x3 jaw pose");
    }
    std::vector<FaceParams> out = targets.coarse.frames;
    for (int i = 0; i < k; ++i) {
        out[static_cast<std::size_t>(i)].expression = psi.row(i).transpose();
        out[static_cast<std::size_t>(i)].jaw_pose = jaw.row(i).transpose();
    }
    return out;
}

LossReport Pipeline::evaluate(const WindowTargets& targets, const Eigen::MatrixXd& psi, const Eigen::MatrixXd& jaw,
                              const LossWeights& weights, Eigen::MatrixXd* grad_psi, Eigen::MatrixXd* grad_jaw,
                              PipelineImages* images) const {
    const std::vector<FaceParams> params = compose(targets, psi, jaw);
    const int n = options_.image_size;
    const auto k = static_cast<std::size_t>(targets.size());
    const int factor = emotion_factor();
    const int crop = lip_.spec().height;

    // Forward: render each frame and locate its mouth.
    std::vector<std::unique_ptr<Renderer>> renderers;
    std::vector<Points2> rendered_norm, rendered_lm;
    for (std::size_t i = 0; i < k; ++i) {
        renderers.push_back(std::make_unique<Renderer>(n, n));
        renderers.back()->render(model_, params[i]);
        rendered_norm.push_back(landmarks2d(model_, params[i]).points);
        rendered_lm.push_back(to_pixels(rendered_norm.back(), n, n));
    }
    const std::vector<Points2> rendered_mouths = mouths(rendered_lm);
    const CropWindow shared =
        options_.sequence_crop ? sequence_window(rendered_mouths, options_.crop_scale) : CropWindow{};
    std::vector<CropWindow> windows;
    std::vector<Tensor3> crops, pooled;
    for (std::size_t i = 0; i < k; ++i) {
        const Tensor3& img = renderers[i]->frame().image;
        windows.push_back(options_.sequence_crop ? shared : mouth_window(rendered_mouths[i], options_.crop_scale));
        crops.push_back(crop_with_window(img, windows.back(), crop).image);
        pooled.push_back(factor == 1 ? img : average_pool(img, factor));
    }

    LossInputs in;
    in.lip_input = targets.lip;
    in.lip_rendered = lip_.extract(crops);
    in.emotion_input = targets.emotion;
    in.emotion_rendered = emotion_.extract(pooled);
    in.psi = psi;
    in.jaw = jaw;
    in.anchor_psi = targets.coarse.expression();
    in.anchor_jaw = targets.coarse.jaw();
    in.landmarks_rendered = rendered_norm;
    in.landmarks_target = targets.landmarks_normalized;

    const bool want = grad_psi != nullptr || grad_jaw != nullptr;
    LossGradients g;
    const LossReport report = total_loss(in, weights, want ? &g : nullptr);
    report.check_finite();

    if (images != nullptr) {
        images->rendered.clear();
        for (const auto& r : renderers) {
            images->rendered.push_back(r->frame().image);
        }
        images->rendered_crops = crops;
        images->rendered_landmarks = rendered_lm;
    }
    if (!want) {
        return report;
    }

    // Backward: features -> images and crop windows -> landmarks and renderer -> parameters.
    std::vector<Tensor3> g_images;
    for (std::size_t i = 0; i < k; ++i) {
        g_images.emplace_back(3, n, n);
    }
    // Landmark gradients are gathered in pixel units, then mapped to normalised ones.
    std::vector<Points2> g_landmarks(k, Points2::Zero(kLandmarkCount, 2));
    if (weights.lipread > 0.0) {
        const std::vector<Tensor3> g_crops = lip_.backward(crops, g.lip_rendered);
        CropWindow g_shared{0.0, 0.0, 0.0};
        const IndexRange mr = landmark_range(LandmarkRegion::Mouth);
        for (std::size_t i = 0; i < k; ++i) {
            const Tensor3& img = renderers[i]->frame().image;
            CropGradient cg = options_.sequence_crop
                                  ? crop_with_window_backward(img, windows[i], g_crops[i])
                                  : crop_mouth_backward(img, rendered_mouths[i], g_crops[i], {options_.crop_scale, crop});
            for (std::size_t j = 0; j < g_images[i].data.size(); ++j) {
                g_images[i].data[j] += cg.image.data[j];
            }
            if (options_.sequence_crop) {
                g_shared.center_x += cg.window.center_x;
                g_shared.center_y += cg.window.center_y;
                g_shared.side += cg.window.side;
            } else {
                g_landmarks[i].middleRows(mr.begin, mr.size()) += cg.landmarks;
            }
        }
        if (options_.sequence_crop) {
            const auto gm = sequence_window_backward(rendered_mouths, g_shared, options_.crop_scale);
            for (std::size_t i = 0; i < k; ++i) {
                g_landmarks[i].middleRows(mr.begin, mr.size()) += gm[i];
            }
        }
    }
    if (weights.expression > 0.0) {
        const std::vector<Tensor3> g_pooled = emotion_.backward(pooled, g.emotion_rendered);
        for (std::size_t i = 0; i < k; ++i) {
            const Tensor3 up = factor == 1 ? g_pooled[i] : average_pool_backward(g_pooled[i], factor);
            for (std::size_t j = 0; j < g_images[i].data.size(); ++j) {
                g_images[i].data[j] += up.data[j];
            }
        }
    }

    Eigen::MatrixXd gp = g.psi, gj = g.jaw;
    for (std::size_t i = 0; i < k; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const FaceParams from_image = renderers[i]->backward(model_, params[i], g_images[i]);
        // Pixel coordinates: col = (x + 1) n / 2 - 0.5, row = (1 - y) n / 2 - 0.5.
        Points2 g_norm = g_landmarks[i];
        g_norm.col(0) *= 0.5 * n;
        g_norm.col(1) *= -0.5 * n;
        g_norm += g.landmarks_rendered[i];
        const FaceParams from_landmarks = landmarks2d_backward(model_, params[i], g_norm);
        gp.row(row) += (from_image.expression + from_landmarks.expression).transpose();
        gj.row(row) += (from_image.jaw_pose + from_landmarks.jaw_pose).transpose();
    }
    if (grad_psi != nullptr) {
        *grad_psi = std::move(gp);
    }
    if (grad_jaw != nullptr) {
        *grad_jaw = std::move(gj);
    }
    return report;
}

} // namespace lipfit
