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

#include "lipfit/core/image_io.hpp"

#include "lipfit/core/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

namespace lipfit {

namespace {

std::string lower_ext(const std::filesystem::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e;
}

std::uint8_t quantize(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) {
            std::fclose(f);
        }
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Tensor3 read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) {
        throw DataError("cannot open image '" + path.string() + "'");
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_stdio(&image, fp.get()) == 0) {
        throw DataError("cannot decode PNG '" + path.string() + "': " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
        png_image_free(&image);
        throw DataError("cannot decode PNG '" + path.string() + "': " + image.message);
    }
    const int w = static_cast<int>(image.width);
    const int h = static_cast<int>(image.height);
    Tensor3 out(3, h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(c, y, x) = buffer[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
            }
        }
    }
    return out;
}

void write_png(const std::filesystem::path& path, const Tensor3& img) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    const int ch = img.channels == 1 ? 1 : 3;
    std::vector<png_byte> buffer(static_cast<std::size_t>(img.width) * img.height * ch);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < ch; ++c) {
                buffer[(static_cast<std::size_t>(y) * img.width + x) * ch + c] = quantize(img.at(c, y, x));
            }
        }
    }
    if (png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr) == 0) {
        throw DataError("cannot write PNG '" + path.string() + "': " + image.message);
    }
}

int read_pnm_int(std::istream& in) {
    int c = in.peek();
    while (in && (std::isspace(c) || c == '#')) {
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
        } else {
            in.get();
        }
        c = in.peek();
    }
    int v = 0;
    in >> v;
    if (!in) {
        throw DataError("malformed PNM header");
    }
    return v;
}

Tensor3 read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open image '" + path.string() + "'");
    }
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (magic != "P6" && magic != "P5") {
        throw DataError("'" + path.string() + "': only binary P5/P6 PNM files are supported");
    }
    const int w = read_pnm_int(in);
    const int h = read_pnm_int(in);
    const int maxval = read_pnm_int(in);
    if (w <= 0 || h <= 0 || maxval != 255) {
        throw DataError("'" + path.string() + "': unsupported PNM dimensions or depth");
    }
    in.get();
    const int ch = magic == "P6" ? 3 : 1;
    std::vector<unsigned char> buffer(static_cast<std::size_t>(w) * h * ch);
    in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
    if (!in) {
        throw DataError("'" + path.string() + "': truncated pixel data");
    }
    Tensor3 out(3, h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                const int src = ch == 3 ? c : 0;
                out.at(c, y, x) = buffer[(static_cast<std::size_t>(y) * w + x) * ch + src] / 255.0;
            }
        }
    }
    return out;
}

void write_pnm(const std::filesystem::path& path, const Tensor3& img) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write image '" + path.string() + "'");
    }
    const int ch = img.channels == 1 ? 1 : 3;
    out << (ch == 3 ? "P6" : "P5") << "\n" << img.width << " " << img.height << "\n255\n";
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < ch; ++c) {
                out.put(static_cast<char>(quantize(img.at(c, y, x))));
            }
        }
    }
}

} // namespace

Tensor3 read_image(const std::filesystem::path& path) {
    const std::string ext = lower_ext(path);
    if (ext == ".png") {
        return read_png(path);
    }
    if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
        return read_pnm(path);
    }
    throw DataError("unsupported image format '" + path.string() + "'");
}

void write_image(const std::filesystem::path& path, const Tensor3& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw ParameterError("write_image: expected 1 or 3 channels");
    }
    const std::string ext = lower_ext(path);
    if (ext == ".png") {
        write_png(path, image);
    } else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
        write_pnm(path, image);
    } else {
        throw ParameterError("unsupported output image format '" + path.string() + "'");
    }
}

std::string format_frame_path(const std::string& pattern, int index) {
    const int n = std::snprintf(nullptr, 0, pattern.c_str(), index);
    if (n < 0) {
        throw ParameterError("malformed frame pattern '" + pattern + "'");
    }
    std::string out(static_cast<std::size_t>(n) + 1, '\0');
    std::snprintf(out.data(), out.size(), pattern.c_str(), index);
    out.resize(static_cast<std::size_t>(n));
    return out;
}

ImageSequenceSource::ImageSequenceSource(std::string pattern) : pattern_(std::move(pattern)) {
    if (pattern_.find('%') == std::string::npos) {
        throw ParameterError("frame pattern '" + pattern_ + "' has no printf index placeholder");
    }
    namespace fs = std::filesystem;
    first_ = fs::exists(format_frame_path(pattern_, 0)) ? 0 : 1;
    while (fs::exists(format_frame_path(pattern_, first_ + count_))) {
        ++count_;
    }
}

Tensor3 ImageSequenceSource::frame(int index) const {
    if (index < 0 || index >= count_) {
        throw ParameterError("frame index " + std::to_string(index) + " out of range for '" + pattern_ + "'");
    }
    return read_image(format_frame_path(pattern_, first_ + index));
}

namespace {

class FileListSource final : public FrameSource {
public:
    explicit FileListSource(std::filesystem::path dir) : dir_(std::move(dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
            const std::string ext = lower_ext(entry.path());
            if (entry.is_regular_file() && (ext == ".png" || ext == ".ppm" || ext == ".pgm")) {
                files_.push_back(entry.path());
            }
        }
        std::sort(files_.begin(), files_.end());
    }
    [[nodiscard]] int frame_count() const override { return static_cast<int>(files_.size()); }
    [[nodiscard]] Tensor3 frame(int index) const override {
        return read_image(files_.at(static_cast<std::size_t>(index)));
    }
    [[nodiscard]] std::string describe() const override { return dir_.string(); }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> files_;
};

} // namespace

std::unique_ptr<FrameSource> open_frame_source(const std::string& spec) {
    if (spec.find('%') != std::string::npos) {
        return std::make_unique<ImageSequenceSource>(spec);
    }
    if (std::filesystem::is_directory(spec)) {
        return std::make_unique<FileListSource>(spec);
    }
    throw DataError("no frame decoder for '" + spec + "' (expected a frame pattern or a directory of images)");
}

} // namespace lipfit
