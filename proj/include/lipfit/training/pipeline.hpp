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

#pragma once

#include "lipfit/encoders/coarse_estimator.hpp"
#include "lipfit/encoders/features.hpp"
#include "lipfit/face_model/morphable_model.hpp"
#include "lipfit/losses/losses.hpp"
#include "lipfit/renderer/crop.hpp"
#include "lipfit/training/dataset.hpp"

#include <vector>

namespace lipfit {

struct PipelineOptions {
    int image_size = 128;        ///< frames are resized to image_size x image_size
    double crop_scale = 1.5;     ///< mouth window side over the largest landmark extent
    bool sequence_crop = false;  ///< one mouth window for the whole window instead of per frame
};

/// Everything about a window that does not depend on the refined parameters.
struct WindowTargets {
    std::vector<Tensor3> frames;       ///< resized input frames
    std::vector<Points2> landmarks;    ///< detected landmarks in resized pixel coordinates
    std::vector<Points2> landmarks_normalized; ///< the same in [-1, 1] image coordinates
    CoarseEstimate coarse;
    FeatureSequence lip;               ///< features of the input mouth crops
    FeatureSequence emotion;           ///< features of the input frames

    [[nodiscard]] int size() const { return static_cast<int>(frames.size()); }
};

/// Intermediate images of one evaluation, for inspection and export.
struct PipelineImages {
    std::vector<Tensor3> rendered;
    std::vector<Tensor3> rendered_crops;
    std::vector<Points2> rendered_landmarks; ///< pixel coordinates
};

/**
 * Refined parameters -> loss. For each frame the coarse estimate has its
 * expression and jaw pose replaced, is rendered, and the rendering is cropped
 * around its own projected mouth and fed to the frozen feature networks; the
 * features and landmarks are compared with those of the input window.
 *
 * Landmark terms compare normalised image coordinates ([-1, 1] across the
 * frame), so their weights do not depend on the working resolution.
 *
 * Gradients reach the expression and jaw pose through the rendered pixels
 * (shading and rasterised geometry), through the crop window and through the
 * landmark terms.
 */
class Pipeline {
public:
    Pipeline(const MorphableModel& model, const CoarseEstimator& coarse, const FeatureExtractor& lip,
             const FeatureExtractor& emotion, PipelineOptions options = {});

    [[nodiscard]] const PipelineOptions& options() const { return options_; }
    [[nodiscard]] const MorphableModel& model() const { return model_; }
    [[nodiscard]] const CoarseEstimator& coarse_estimator() const { return coarse_; }
    [[nodiscard]] const FeatureExtractor& lip_extractor() const { return lip_; }
    [[nodiscard]] const FeatureExtractor& emotion_extractor() const { return emotion_; }

    /// Resizes frames (and scales landmarks), runs the coarse estimator and extracts input features.
    [[nodiscard]] WindowTargets prepare(const Window& window) const;
    /// As prepare, with a given coarse estimate.
    [[nodiscard]] WindowTargets prepare(const Window& window, CoarseEstimate coarse) const;

    /// Per-frame parameters: the coarse estimate with the given expression and jaw rows.
    [[nodiscard]] std::vector<FaceParams> compose(const WindowTargets& targets, const Eigen::MatrixXd& psi,
                                                  const Eigen::MatrixXd& jaw) const;

    /**
     * Loss of the refined K x 50 expression and K x 3 jaw pose. When the
     * gradient outputs are given they receive d total / d psi and d jaw.
     * NumericalError names the first non-finite component.
     */
    LossReport evaluate(const WindowTargets& targets, const Eigen::MatrixXd& psi, const Eigen::MatrixXd& jaw,
                        const LossWeights& weights, Eigen::MatrixXd* grad_psi = nullptr,
                        Eigen::MatrixXd* grad_jaw = nullptr, PipelineImages* images = nullptr) const;

private:
    [[nodiscard]] int emotion_factor() const;

    const MorphableModel& model_;
    const CoarseEstimator& coarse_;
    const FeatureExtractor& lip_;
    const FeatureExtractor& emotion_;
    PipelineOptions options_;
};

} // namespace lipfit
