#include "pathrag/image_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>

#include <jpeglib.h>
#include <png.h>

#include "pathrag/error.hpp"

namespace pathrag {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

// ---------------------------------------------------------------- PNG decode

void png_error_fn(png_structp png, png_const_charp /*msg*/) {
    std::longjmp(*static_cast<std::jmp_buf*>(png_get_error_ptr(png)), 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

RgbImage decode_png_file(FILE* file, const std::string& path) {
    std::jmp_buf jmp;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &jmp,
                                             png_error_fn, png_warning_fn);
    if (!png) throw_error(Errc::CorruptImage, path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw_error(Errc::CorruptImage, path);
    }

    // No C++ objects with destructors may live between here and the reads.
    png_uint_32 width = 0, height = 0;
    std::vector<uint8_t> pixels;
    std::vector<png_bytep> rows;
    if (setjmp(jmp)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw_error(Errc::CorruptImage, path + ": png decode failed");
    }

    png_init_io(png, file);
    png_read_info(png, info);
    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_set_strip_alpha(png);  // also drops alpha introduced by tRNS expansion
    png_read_update_info(png, info);

    if (width == 0 || height == 0) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw_error(Errc::CorruptImage, path + ": empty png");
    }

    pixels.assign(static_cast<size_t>(width) * height * 3, 0);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) {
        rows[y] = pixels.data() + static_cast<size_t>(y) * width * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    return RgbImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

// ---------------------------------------------------------------- PNG encode

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

// --------------------------------------------------------------- JPEG decode

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jmp;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(err->jmp, 1);
}

void jpeg_emit_noop(j_common_ptr, int) {}

RgbImage decode_jpeg_file(FILE* file, const std::string& path) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    err.pub.emit_message = jpeg_emit_noop;

    std::vector<uint8_t> pixels;
    if (setjmp(err.jmp)) {
        jpeg_destroy_decompress(&cinfo);
        throw_error(Errc::CorruptImage, path + ": jpeg decode failed");
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;  // grayscale expands to 3 channels
    jpeg_start_decompress(&cinfo);

    int width = static_cast<int>(cinfo.output_width);
    int height = static_cast<int>(cinfo.output_height);
    if (width <= 0 || height <= 0 || cinfo.output_components != 3) {
        jpeg_destroy_decompress(&cinfo);
        throw_error(Errc::CorruptImage, path + ": unexpected jpeg layout");
    }

    pixels.assign(static_cast<size_t>(width) * height * 3, 0);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = pixels.data() + static_cast<size_t>(cinfo.output_scanline) * width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    return RgbImage(width, height, std::move(pixels));
}

}  // namespace

RgbImage load_image(const std::string& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec) || ec) {
        throw_error(Errc::FileNotFound, path);
    }
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw_error(Errc::FileNotFound, path);

    uint8_t magic[4] = {0, 0, 0, 0};
    size_t got = std::fread(magic, 1, sizeof(magic), file.get());
    std::rewind(file.get());

    static const uint8_t png_magic[4] = {0x89, 'P', 'N', 'G'};
    if (got >= 4 && std::memcmp(magic, png_magic, 4) == 0) {
        return decode_png_file(file.get(), path);
    }
    if (got >= 3 && magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) {
        return decode_jpeg_file(file.get(), path);
    }
    throw_error(Errc::UnsupportedFormat, path + ": not a PNG or JPEG file");
}

std::vector<uint8_t> encode_png(const RgbImage& image) {
    std::jmp_buf jmp;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &jmp,
                                              png_error_fn, png_warning_fn);
    if (!png) throw_error(Errc::CorruptImage, "png encoder init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw_error(Errc::CorruptImage, "png encoder init failed");
    }

    std::vector<uint8_t> out;
    std::vector<png_bytep> rows;
    if (setjmp(jmp)) {
        png_destroy_write_struct(&png, &info);
        throw_error(Errc::CorruptImage, "png encode failed");
    }

    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    rows.resize(image.height);
    for (int y = 0; y < image.height; ++y) {
        rows[y] = const_cast<png_bytep>(image.data.data() + static_cast<size_t>(y) * image.width * 3);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

void save_png(const RgbImage& image, const std::string& path) {
    std::vector<uint8_t> bytes = encode_png(image);
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw_error(Errc::FileNotFound, path + ": cannot open for writing");
    if (std::fwrite(bytes.data(), 1, bytes.size(), file.get()) != bytes.size()) {
        throw_error(Errc::CorruptImage, path + ": short write");
    }
}

void save_jpeg(const RgbImage& image, const std::string& path, int quality) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw_error(Errc::FileNotFound, path + ": cannot open for writing");

    jpeg_compress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    err.pub.emit_message = jpeg_emit_noop;
    if (setjmp(err.jmp)) {
        jpeg_destroy_compress(&cinfo);
        throw_error(Errc::CorruptImage, path + ": jpeg encode failed");
    }

    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, file.get());
    cinfo.image_width = static_cast<JDIMENSION>(image.width);
    cinfo.image_height = static_cast<JDIMENSION>(image.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<JSAMPROW>(
            image.data.data() + static_cast<size_t>(cinfo.next_scanline) * image.width * 3);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
}

}  // namespace pathrag
