#pragma once

#include <cstring>
#include <filesystem>
#include <string>

#include <png.h>

#include "error.hpp"
#include "image.hpp"

namespace gradebal {

// Decodes any PNG libpng understands (grey, palette, alpha, 16-bit) to 8-bit RGB.
inline ImageRGB read_png(const std::filesystem::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.string().c_str()))
        throw Error(ErrorKind::IoError, "cannot read PNG " + path.string() + ": " + img.message);
    img.format = PNG_FORMAT_RGB;
    if (img.width < 1 || img.height < 1) {
        png_image_free(&img);
        throw Error(ErrorKind::IoError, "empty PNG " + path.string());
    }
    ImageRGB out(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
        std::string msg = img.message;
        png_image_free(&img);
        throw Error(ErrorKind::IoError, "cannot decode PNG " + path.string() + ": " + msg);
    }
    return out;
}

// 8-bit RGB, no ancillary chunks, so identical pixels give identical bytes.
inline void write_png(const std::filesystem::path& path, const ImageRGB& image) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.string().c_str(), 0, image.data.data(), 0, nullptr))
        throw Error(ErrorKind::IoError, "cannot write PNG " + path.string() + ": " + img.message);
}

} // namespace gradebal
