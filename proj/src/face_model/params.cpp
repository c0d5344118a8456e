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

#include "lipfit/face_model/params.hpp"

#include "lipfit/core/error.hpp"

#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace lipfit {

namespace {

void check_block(const Eigen::VectorXd& v, int expected, const char* name) {
    if (v.size() != expected) {
        throw ParameterError(std::string("FaceParams.") + name + ": expected length " + std::to_string(expected) +
                             ", got " + std::to_string(v.size()));
    }
    if (!v.allFinite()) {
        throw ParameterError(std::string("FaceParams.") + name + ": non-finite entry");
    }
}

} // namespace

Eigen::VectorXd default_lighting() {
    Eigen::VectorXd l = Eigen::VectorXd::Zero(kLightingDim);
    for (int c = 0; c < 3; ++c) {
        l[0 * 3 + c] = 3.2;  // constant band
        l[1 * 3 + c] = 0.3;  // y (overhead)
        l[2 * 3 + c] = 0.7;  // z (frontal)
    }
    return l;
}

FaceParams FaceParams::neutral() {
    FaceParams p;
    p.camera << 1.0, 0.0, 0.0;
    p.lighting = default_lighting();
    return p;
}

void FaceParams::validate() const {
    check_block(identity, kIdentityDim, "identity");
    check_block(expression, kExpressionDim, "expression");
    check_block(neck_pose, kPoseDim, "neck_pose");
    check_block(jaw_pose, kPoseDim, "jaw_pose");
    check_block(albedo, kAlbedoDim, "albedo");
    check_block(lighting, kLightingDim, "lighting");
    check_block(camera, kCameraDim, "camera");
    if (jaw_pose.norm() >= std::numbers::pi) {
        throw ParameterError("FaceParams.jaw_pose: rotation angle must be below pi");
    }
}

Eigen::VectorXd FaceParams::flatten() const {
    Eigen::VectorXd out(identity.size() + expression.size() + neck_pose.size() + jaw_pose.size() + albedo.size() +
                        lighting.size() + camera.size());
    out << identity, expression, neck_pose, jaw_pose, albedo, lighting, camera;
    return out;
}

FaceParams FaceParams::unflatten(const Eigen::VectorXd& flat) {
    if (flat.size() != kFaceParamCount) {
        throw ParameterError("FaceParams::unflatten: expected " + std::to_string(kFaceParamCount) + " values, got " +
                             std::to_string(flat.size()));
    }
    FaceParams p;
    Eigen::Index o = 0;
    auto take = [&](Eigen::VectorXd& dst, int n) {
        dst = flat.segment(o, n);
        o += n;
    };
    take(p.identity, kIdentityDim);
    take(p.expression, kExpressionDim);
    take(p.neck_pose, kPoseDim);
    take(p.jaw_pose, kPoseDim);
    take(p.albedo, kAlbedoDim);
    take(p.lighting, kLightingDim);
    take(p.camera, kCameraDim);
    return p;
}

FaceParams& FaceParams::operator+=(const FaceParams& other) {
    identity += other.identity;
    expression += other.expression;
    neck_pose += other.neck_pose;
    jaw_pose += other.jaw_pose;
    albedo += other.albedo;
    lighting += other.lighting;
    camera += other.camera;
    return *this;
}

void write_params_file(const std::filesystem::path& path, const std::vector<FaceParams>& frames) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write parameter file " + path.string());
    }
    out << "# lipfit face parameters, one frame per line\n"
        << "# identity " << kIdentityDim << ", expression " << kExpressionDim << ", neck " << kPoseDim << ", jaw "
        << kPoseDim << ", albedo " << kAlbedoDim << ", lighting " << kLightingDim << ", camera " << kCameraDim << "\n";
    char buf[32];
    for (const auto& f : frames) {
        const Eigen::VectorXd v = f.flatten();
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", v[i]);
            out << (i ? " " : "") << buf;
        }
        out << '\n';
    }
    if (!out) {
        throw DataError("failed writing parameter file " + path.string());
    }
}

std::vector<FaceParams> read_params_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open parameter file " + path.string());
    }
    std::vector<FaceParams> frames;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream row(line);
        Eigen::VectorXd v(kFaceParamCount);
        Eigen::Index n = 0;
        double x = 0.0;
        while (row >> x) {
            if (n == kFaceParamCount) {
                ++n;
                break;
            }
            v[n++] = x;
        }
        const std::string where = path.string() + ":" + std::to_string(number);
        if (n != kFaceParamCount || !(row >> std::ws).eof()) {
            throw DataError(where + ": expected " + std::to_string(kFaceParamCount) + " numbers");
        }
        FaceParams p = FaceParams::unflatten(v);
        try {
            p.validate();
        } catch (const ParameterError& e) {
            throw DataError(where + ": " + e.what());
        }
        frames.push_back(std::move(p));
    }
    return frames;
}

} // namespace lipfit
